"""One dimension, three ways to ask "how soon can we get there?".

A point on a line moves with speed at most 1 and wants to reach the
interval |x| <= 0.25. The answer is known in closed form: the time to reach
is max(|x| - 0.25, 0), so the set that can arrive within T seconds is
|x| <= 0.25 + T. This demo solves the same question with all three solvers
and shows that they agree.
"""

import numpy as np

from hjdp.dynamics import Integrator1D
from hjdp.grid import make_grid
from hjdp.hj_solver import PdeSolveOptions, solve_pde
from hjdp.mdp import MdpProblem, dynamics_transition, value_iteration
from hjdp.shapes import sphere_sdf
from hjdp.ttr_solver import solve_ttr

grid = make_grid([-1], [1], [401])
x = grid.coords[0]
target = sphere_sdf(grid, [0.0], 0.25)
model = Integrator1D(u_max=1.0)  # control_mode="min": steer toward the target

# The level-set solver grows the target backward in time. Checkpoints every
# 0.1 s let us watch the boundary move outward at unit speed.
checkpoints = solve_pde(target, grid, model, PdeSolveOptions(horizon=0.5, save_every=0.1))
print("backward reachable tube, boundary vs time")
for field in checkpoints:
    inside = x[field.data <= 0]
    print(f"  t={field.time:.1f}: [{inside.min():+.3f}, {inside.max():+.3f}]  expected +-{0.25 + field.time:.3f}")

# Sweeping gives the whole time-to-reach function in one go.
ttr = solve_ttr(target, grid, model)
exact = np.maximum(np.abs(x) - 0.25, 0.0)
print(f"\ntime-to-reach: {ttr.sweeps} sweeps, max error {np.abs(ttr.field.data - exact).max():.2e}")

# Its sublevel sets should coincide with the tube computed above.
for field in checkpoints:
    mismatch = np.count_nonzero((ttr.field.data <= field.time) != (field.data <= 0))
    print(f"  T={field.time:.1f}: {mismatch} of {x.size} nodes disagree")

# Value iteration on a coarser grid: reward 1 inside the target, discount
# 0.95 per 0.05 s step. V(x) ~ gamma^(steps to reach) / (1 - gamma), so
# log_gamma of V(x)*(1-gamma) estimates the number of steps.
coarse = make_grid([-1], [1], [41])
problem = MdpProblem(
    coarse,
    actions=[[-1.0], [0.0], [1.0]],
    transition=dynamics_transition(model, timestep=0.05),
    reward=(sphere_sdf(coarse, [0.0], 0.25).reshape(-1) <= 0).astype(float),
    discount=0.95,
    threshold=1e-10,
    max_iterations=10_000,
)
result = value_iteration(problem)
steps = np.log(result.values * (1 - 0.95)) / np.log(0.95)
xc = coarse.coords[0]
print(f"\nvalue iteration: {result.iterations} sweeps")
for i in range(0, 41, 8):
    print(f"  x={xc[i]:+.2f}: {steps[i]*0.05:.3f} s to reach (exact {max(abs(xc[i]) - 0.25, 0):.3f})")
