"""System dynamics consumed by the PDE solvers and value iteration.

A model works on *broadcastable* arrays: ``state`` and ``costate`` are
sequences with one array (or scalar) per state dimension, and every method
returns a tuple with one array per output component. The solvers call the
model on whole grid blocks at once, so implementations must stay
elementwise (no reductions across nodes).

Optimal inputs are chosen to maximise or minimise the Hamiltonian
``costate . rate(state, ctrl, dstb)`` according to ``control_mode`` and
``disturbance_mode``. A zero coefficient counts as positive, so ties pick
the upper bound under ``"max"`` and the lower bound under ``"min"``.
"""

from __future__ import annotations

from typing import Literal, Sequence

import numpy as np

Mode = Literal["max", "min"]


def _check_mode(mode: str, what: str) -> str:
    if mode not in ("max", "min"):
        raise ValueError(f"{what} must be 'max' or 'min', got {mode!r}")
    return mode


def bang_bang(coef, lo: float, hi: float, mode: str):
    """Optimiser of ``coef * v`` over ``v in [lo, hi]``."""
    if mode == "max":
        return np.where(coef >= 0, hi, lo)
    return np.where(coef >= 0, lo, hi)


def interval_abs_max(center, *terms) -> np.ndarray:
    """Largest ``|center + sum(k * v)|`` with each ``v`` ranging over ``[lo, hi]``.

    ``terms`` are ``(k, lo, hi)`` triples; ``k`` may be an array.
    """
    lo = center
    hi = center
    for k, a, b in terms:
        p, q = k * a, k * b
        lo = lo + np.minimum(p, q)
        hi = hi + np.maximum(p, q)
    return np.maximum(np.abs(lo), np.abs(hi))


class DynamicsModel:
    """Base class for systems ``dz/dt = f(z, u, d)``.

    Subclasses set ``dims``, ``ctrl_bounds`` and ``dstb_bounds`` (lists of
    ``(lo, hi)`` pairs, possibly empty) and implement the four methods.
    """

    dims: int = 0
    ctrl_bounds: list[tuple[float, float]] = []
    dstb_bounds: list[tuple[float, float]] = []

    def __init__(self, control_mode: Mode = "max", disturbance_mode: Mode = "min"):
        self.control_mode = _check_mode(control_mode, "control_mode")
        self.disturbance_mode = _check_mode(disturbance_mode, "disturbance_mode")

    @property
    def n_ctrl(self) -> int:
        return len(self.ctrl_bounds)

    @property
    def n_dstb(self) -> int:
        return len(self.dstb_bounds)

    def opt_ctrl(self, state: Sequence, costate: Sequence) -> tuple:
        raise NotImplementedError

    def opt_dstb(self, state: Sequence, costate: Sequence) -> tuple:
        return ()

    def rate(self, state: Sequence, ctrl: Sequence, dstb: Sequence) -> tuple:
        raise NotImplementedError

    def partial_bound(self, dim: int, state: Sequence, min_costate, max_costate):
        """Upper bound on ``|dH/dp_dim|`` for costates in ``[min_costate, max_costate]``."""
        raise NotImplementedError

    def zero_dstb(self) -> tuple:
        return tuple(0.0 for _ in self.dstb_bounds)


def hamiltonian(model: DynamicsModel, state, costate, ctrl=None, dstb=None):
    """``costate . rate`` with optimal inputs filled in where not given."""
    if ctrl is None:
        ctrl = model.opt_ctrl(state, costate)
    if dstb is None:
        dstb = model.opt_dstb(state, costate)
    f = model.rate(state, ctrl, dstb)
    return sum(p * fd for p, fd in zip(costate, f))


class Integrator1D(DynamicsModel):
    """``dz/dt = u`` with ``|u| <= u_max``. Defaults to reaching (``min``)."""

    dims = 1

    def __init__(self, u_max: float = 1.0, control_mode: Mode = "min", disturbance_mode: Mode = "max"):
        super().__init__(control_mode, disturbance_mode)
        if u_max < 0:
            raise ValueError("u_max must be non-negative")
        self.u_max = float(u_max)
        self.ctrl_bounds = [(-self.u_max, self.u_max)]
        self.dstb_bounds = []

    def opt_ctrl(self, state, costate):
        return (bang_bang(costate[0], -self.u_max, self.u_max, self.control_mode),)

    def rate(self, state, ctrl, dstb):
        return (np.asarray(ctrl[0], dtype=float),)

    def partial_bound(self, dim, state, min_costate, max_costate):
        return self.u_max


class ConstantDrift(DynamicsModel):
    """Uncontrolled translation ``dz/dt = velocity``."""

    def __init__(self, velocity: Sequence[float]):
        super().__init__()
        self.velocity = tuple(float(v) for v in velocity)
        self.dims = len(self.velocity)
        self.ctrl_bounds = []
        self.dstb_bounds = []

    def opt_ctrl(self, state, costate):
        return ()

    def rate(self, state, ctrl, dstb):
        return tuple(np.float64(v) for v in self.velocity)

    def partial_bound(self, dim, state, min_costate, max_costate):
        return abs(self.velocity[dim])


class DubinsCapture3D(DynamicsModel):
    """Relative dynamics of an evader (control ``a``) and pursuer (disturbance ``b``).

    State is ``(x, y, theta)`` with theta periodic::

        dx/dt     = -v_a + v_b cos(theta) + a y
        dy/dt     =  v_a sin(theta) - a x
        dtheta/dt =  b - a

    The sub-zero set of the backward reachable tube is the capture set, so
    the evader maximises and the pursuer minimises by default.
    """

    dims = 3

    def __init__(
        self,
        v_a: float = 1.0,
        v_b: float = 1.0,
        a_max: float = 1.0,
        b_max: float = 1.0,
        control_mode: Mode = "max",
        disturbance_mode: Mode = "min",
    ):
        super().__init__(control_mode, disturbance_mode)
        self.v_a, self.v_b = float(v_a), float(v_b)
        self.a_max, self.b_max = float(a_max), float(b_max)
        self.ctrl_bounds = [(-self.a_max, self.a_max)]
        self.dstb_bounds = [(-self.b_max, self.b_max)]

    def opt_ctrl(self, state, costate):
        x, y, _ = state
        p0, p1, p2 = costate
        coef = p0 * y - p1 * x - p2
        return (bang_bang(coef, -self.a_max, self.a_max, self.control_mode),)

    def opt_dstb(self, state, costate):
        return (bang_bang(costate[2], -self.b_max, self.b_max, self.disturbance_mode),)

    def rate(self, state, ctrl, dstb):
        x, y, theta = state
        (a,) = ctrl
        (b,) = dstb
        return (
            -self.v_a + self.v_b * np.cos(theta) + a * y,
            self.v_a * np.sin(theta) - a * x,
            b - a,
        )

    def partial_bound(self, dim, state, min_costate, max_costate):
        x, y, theta = state
        if dim == 0:
            return np.abs(-self.v_a + self.v_b * np.cos(theta)) + self.a_max * np.abs(y)
        if dim == 1:
            return np.abs(self.v_a * np.sin(theta)) + self.a_max * np.abs(x)
        return self.a_max + self.b_max


class UnderwaterTracker6D(DynamicsModel):
    """Tracking-error dynamics between an underwater vehicle and its planner.

    State is ``(x_rel, z_rel, u_r, w_r, x, z)``: relative position to the
    planner, velocity relative to the water, absolute position. Controls
    are the thrusts ``(T_A, T_B)``; the disturbance vector is
    ``(d_x, d_z, d_u, d_w, b_x, b_z)`` where ``b_*`` are the planner's
    inputs, treated adversarially. Flow velocity ``V_f`` and flow
    acceleration ``A_f`` are constants.

    Default coefficients are illustrative, not taken from a specific vehicle.
    """

    dims = 6

    def __init__(
        self,
        m: float = 116.0,
        m_bar: float = 116.2,
        X_udot: float = -167.6,
        Z_wdot: float = -383.0,
        X_u: float = 26.9,
        X_uu: float = 241.3,
        Z_w: float = 0.0,
        Z_ww: float = 265.6,
        g: float = 9.81,
        V_fx: float = 0.0,
        V_fz: float = 0.0,
        A_fx: float = 0.0,
        A_fz: float = 0.0,
        thrust_a: tuple[float, float] = (-18.0, 18.0),
        thrust_b: tuple[float, float] = (-18.0, 18.0),
        planner_x: tuple[float, float] = (-0.5, 0.5),
        planner_z: tuple[float, float] = (-0.5, 0.5),
        dstb_x: tuple[float, float] = (-0.1, 0.1),
        dstb_z: tuple[float, float] = (-0.1, 0.1),
        dstb_u: tuple[float, float] = (-0.05, 0.05),
        dstb_w: tuple[float, float] = (-0.05, 0.05),
        control_mode: Mode = "min",
        disturbance_mode: Mode = "max",
    ):
        super().__init__(control_mode, disturbance_mode)
        self.m, self.m_bar = float(m), float(m_bar)
        self.X_udot, self.Z_wdot = float(X_udot), float(Z_wdot)
        self.X_u, self.X_uu, self.Z_w, self.Z_ww = float(X_u), float(X_uu), float(Z_w), float(Z_ww)
        self.g = float(g)
        self.V_fx, self.V_fz, self.A_fx, self.A_fz = float(V_fx), float(V_fz), float(A_fx), float(A_fz)
        if self.m - self.X_udot == 0 or self.m - self.Z_wdot == 0:
            raise ValueError("m - X_udot and m - Z_wdot must be non-zero")
        self.ctrl_bounds = [tuple(map(float, thrust_a)), tuple(map(float, thrust_b))]
        self.dstb_bounds = [
            tuple(map(float, b)) for b in (dstb_x, dstb_z, dstb_u, dstb_w, planner_x, planner_z)
        ]
        for lo, hi in self.ctrl_bounds + self.dstb_bounds:
            if lo > hi:
                raise ValueError(f"input bound ({lo}, {hi}) has lo > hi")

    def _drift_u(self, u_r):
        return ((self.m_bar - self.m) * self.A_fx - (self.X_u + self.X_uu * np.abs(u_r)) * u_r) / (
            self.m - self.X_udot
        )

    def _drift_w(self, w_r):
        return (
            (self.m_bar - self.m) * self.A_fz
            + self.g * (self.m - self.m_bar)
            - (self.Z_w + self.Z_ww * np.abs(w_r)) * w_r
        ) / (self.m - self.Z_wdot)

    def opt_ctrl(self, state, costate):
        p = costate
        (a_lo, a_hi), (b_lo, b_hi) = self.ctrl_bounds
        ta = bang_bang(p[2] / (self.m - self.X_udot), a_lo, a_hi, self.control_mode)
        tb = bang_bang(p[3] / (self.m - self.Z_wdot), b_lo, b_hi, self.control_mode)
        return ta, tb

    def opt_dstb(self, state, costate):
        p = costate
        coefs = (p[0] + p[4], p[1] + p[5], p[2], p[3], -p[0], -p[1])
        return tuple(
            bang_bang(c, lo, hi, self.disturbance_mode) for c, (lo, hi) in zip(coefs, self.dstb_bounds)
        )

    def rate(self, state, ctrl, dstb):
        _, _, u_r, w_r, _, _ = state
        ta, tb = ctrl
        d_x, d_z, d_u, d_w, b_x, b_z = dstb
        vx = u_r + self.V_fx + d_x
        vz = w_r + self.V_fz + d_z
        return (
            vx - b_x,
            vz - b_z,
            self._drift_u(u_r) + ta / (self.m - self.X_udot) + d_u,
            self._drift_w(w_r) + tb / (self.m - self.Z_wdot) + d_w,
            vx,
            vz,
        )

    def partial_bound(self, dim, state, min_costate, max_costate):
        _, _, u_r, w_r, _, _ = state
        (dx, dz, du, dw, bx, bz) = self.dstb_bounds
        ta, tb = self.ctrl_bounds
        if dim in (0, 4):
            terms = [(1.0, *dx)] + ([(-1.0, *bx)] if dim == 0 else [])
            return interval_abs_max(u_r + self.V_fx, *terms)
        if dim in (1, 5):
            terms = [(1.0, *dz)] + ([(-1.0, *bz)] if dim == 1 else [])
            return interval_abs_max(w_r + self.V_fz, *terms)
        if dim == 2:
            return interval_abs_max(self._drift_u(u_r), (1.0 / (self.m - self.X_udot), *ta), (1.0, *du))
        return interval_abs_max(self._drift_w(w_r), (1.0 / (self.m - self.Z_wdot), *tb), (1.0, *dw))
