"""Grid-based dynamic programming for reachability and optimal control.

Three solvers share one grid and one dynamics interface:

* :func:`solve_pde` grows a target backward in time by solving the
  time-dependent Hamilton-Jacobi equation (reachable sets and tubes).
* :func:`solve_ttr` computes the minimum time to reach a target by
  Lax-Friedrichs sweeping.
* :func:`value_iteration` solves a discounted MDP whose continuous states
  and actions are sampled on grids.
"""

from .dynamics import ConstantDrift, DubinsCapture3D, DynamicsModel, Integrator1D, UnderwaterTracker6D
from .formats import export_csv_slice, export_vtk, read_field, write_field
from .grid import GridAxes, GridSpec, build_grid, make_grid
from .hj_solver import NumericalError, PdeSolveOptions, solve_pde
from .mdp import MdpProblem, dynamics_transition, extract_policy, value_iteration
from .shapes import cylinder_sdf, halfspace_sdf, intersect_fields, sphere_sdf, union_fields
from .ttr_solver import ConvergenceWarning, TtrOptions, solve_ttr

__version__ = "0.1.0"

__all__ = [
    "ConstantDrift",
    "ConvergenceWarning",
    "DubinsCapture3D",
    "DynamicsModel",
    "GridAxes",
    "GridSpec",
    "Integrator1D",
    "MdpProblem",
    "NumericalError",
    "PdeSolveOptions",
    "TtrOptions",
    "UnderwaterTracker6D",
    "build_grid",
    "cylinder_sdf",
    "dynamics_transition",
    "export_csv_slice",
    "export_vtk",
    "extract_policy",
    "halfspace_sdf",
    "intersect_fields",
    "make_grid",
    "read_field",
    "solve_pde",
    "solve_ttr",
    "sphere_sdf",
    "union_fields",
    "value_iteration",
    "write_field",
]
