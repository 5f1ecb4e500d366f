"""Time-to-reach functions by Lax-Friedrichs sweeping.

Solves the stationary equation ``H(z, grad phi) = 0`` with
``H = opt_d opt_u (-grad phi . f(z, u, d) - 1)`` and ``phi = 0`` on the
target. Reaching models therefore use ``control_mode="min"`` (the control
minimises ``p . f``, which maximises ``-p . f - 1``).

Sweeps are Gauss-Seidel: every node sees values already updated earlier in
the same sweep. For a nearest-neighbour stencil, a lexicographic traversal
is equivalent to visiting the hyperplanes ``sum_d i_d = const`` in order
(every already-visited neighbour lies on an earlier hyperplane), so each
hyperplane is updated as one vectorised batch with identical results.
Traversal directions cycle through a fixed schedule of eight orderings.
"""

from __future__ import annotations

import itertools
import logging
import warnings
from dataclasses import dataclass

import numpy as np

from .dynamics import DynamicsModel
from .grid import GridAxes
from .shapes import ValueField

logger = logging.getLogger(__name__)


class ConvergenceWarning(RuntimeWarning):
    pass


@dataclass
class TtrOptions:
    epsilon: float = 1e-6
    max_sweeps: int = 1000
    large_value: float = 100.0
    alternate: bool = True

    def validate(self) -> None:
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be >= 1")


@dataclass
class TtrResult:
    field: ValueField
    sweeps: int
    max_change: float
    converged: bool


def sweep_orderings(dims: int) -> list[tuple[bool, ...]]:
    """Direction flags (``True`` = backward) for the eight-sweep schedule.

    Fewer than three dimensions use all ``2**dims`` patterns; otherwise the
    eight sign patterns of the first three dimensions, the rest forward.
    """
    k = min(dims, 3)
    pats = list(itertools.product((False, True), repeat=k))
    if k < 3:
        pats = (pats * (8 // len(pats)))[:8]
    return [tuple(p) + (False,) * (dims - k) for p in pats]


def init_ttr(target: np.ndarray, options: TtrOptions | None = None) -> np.ndarray:
    """Zero inside the target (``target <= 0``), ``large_value`` elsewhere."""
    options = options or TtrOptions()
    inside = target <= 0
    if not inside.any():
        raise ValueError("target set is empty: no node has a non-positive value")
    return np.where(inside, 0.0, options.large_value)


class _Planes:
    """Interior nodes grouped by hyperplane for one traversal ordering."""

    def __init__(self, axes: GridAxes, backward: tuple[bool, ...]):
        shape = axes.shape
        interior = [
            np.arange(n) if axes.periodic[d] else np.arange(1, n - 1) for d, n in enumerate(shape)
        ]
        mesh = np.meshgrid(*interior, indexing="ij")
        key = np.zeros(mesh[0].shape, dtype=np.int64)
        for d, m in enumerate(mesh):
            key += (shape[d] - 1 - m) if backward[d] else m
        flat = np.ravel_multi_index(tuple(m.ravel() for m in mesh), shape)
        key = key.ravel()
        order = np.argsort(key, kind="stable")
        key, flat = key[order], flat[order]
        cuts = np.flatnonzero(np.diff(key)) + 1
        self.planes = np.split(flat, cuts)


def _neighbors(axes: GridAxes, flat: np.ndarray):
    """Multi-index and flat +/-1 neighbours of interior nodes, per dimension."""
    shape = axes.shape
    idx = np.unravel_index(flat, shape)
    strides = np.cumprod((1,) + shape[::-1])[::-1][1:]
    plus, minus = [], []
    for d, n in enumerate(shape):
        s = strides[d]
        if axes.periodic[d]:
            i = idx[d]
            plus.append(flat + (np.where(i == n - 1, -(n - 1), 1)) * s)
            minus.append(flat + (np.where(i == 0, n - 1, -1)) * s)
        else:
            plus.append(flat + s)
            minus.append(flat - s)
    return idx, plus, minus


def sweep(
    phi: np.ndarray, axes: GridAxes, model: DynamicsModel, backward: tuple[bool, ...], _planes=None
) -> float:
    """One in-place Gauss-Seidel sweep; returns the largest pointwise change.

    Per node the central costate ``p`` gives the optimal inputs,
    ``H = -p . f - 1``, ``sigma_d = |dH/dp_d|`` and the candidate::

        phi_new = (-H + sum_d sigma_d (phi[i+1] + phi[i-1]) / (2 dz_d)) / sum_d (sigma_d / dz_d)

    ``phi`` only ever decreases. Nodes with all ``sigma_d == 0`` are skipped.
    """
    flat_phi = phi.reshape(-1)
    planes = _planes if _planes is not None else _Planes(axes, backward)
    dz = axes.spacing
    max_change = 0.0
    for nodes in planes.planes:
        idx, plus, minus = _neighbors(axes, nodes)
        state = [axes.coords[d][idx[d]] for d in range(axes.dims)]
        phi_p = [flat_phi[p] for p in plus]
        phi_m = [flat_phi[m] for m in minus]
        costate = [(phi_p[d] - phi_m[d]) / (2.0 * dz[d]) for d in range(axes.dims)]
        ctrl = model.opt_ctrl(state, costate)
        dstb = model.opt_dstb(state, costate)
        f = model.rate(state, ctrl, dstb)
        H = -1.0
        denom = 0.0
        avg = 0.0
        for d in range(axes.dims):
            H = H - costate[d] * f[d]
            sigma = np.abs(model.partial_bound(d, state, costate[d], costate[d]))
            denom = denom + sigma / dz[d]
            avg = avg + sigma * (phi_p[d] + phi_m[d]) / (2.0 * dz[d])
        denom = np.broadcast_to(denom, nodes.shape)
        active = denom > 0
        if not active.all():
            nodes = nodes[active]
            H = np.broadcast_to(H, active.shape)[active]
            avg = np.broadcast_to(avg, active.shape)[active]
            denom = denom[active]
        old = flat_phi[nodes]
        new = np.minimum((-H + avg) / denom, old)
        flat_phi[nodes] = new
        if new.size:
            max_change = max(max_change, float(np.max(old - new)))
    return max_change


def boundary_update(phi: np.ndarray, axes: GridAxes) -> float:
    """Extrapolate onto both faces of every non-periodic dimension, in place.

    ``phi_0 <- min(max(2 phi_1 - phi_2, phi_2), phi_0)`` and the mirror
    image at the upper face. Returns the largest change.
    """
    change = 0.0
    for d in range(axes.dims):
        if axes.periodic[d]:
            continue
        for face, a, b in ((0, 1, 2), (-1, -2, -3)):
            f0 = np.take(phi, face, axis=d)
            f1 = np.take(phi, a, axis=d)
            f2 = np.take(phi, b, axis=d)
            new = np.minimum(np.maximum(2.0 * f1 - f2, f2), f0)
            if new.size:
                change = max(change, float(np.max(f0 - new)))
            idx = [slice(None)] * phi.ndim
            idx[d] = face
            phi[tuple(idx)] = new
    return change


def solve_ttr(
    target: np.ndarray, axes: GridAxes, model: DynamicsModel, options: TtrOptions | None = None
) -> TtrResult:
    """Sweep until the largest change of a sweep drops below ``epsilon``.

    Hitting ``max_sweeps`` first returns the current field with
    ``converged=False`` and emits a :class:`ConvergenceWarning`.
    """
    options = options or TtrOptions()
    options.validate()
    if model.dims != axes.dims:
        raise ValueError(f"model has {model.dims} dims, grid has {axes.dims}")
    if target.shape != axes.shape:
        raise ValueError(f"target shape {target.shape} != grid shape {axes.shape}")
    phi = init_ttr(target, options)
    schedule = sweep_orderings(axes.dims) if options.alternate else [(False,) * axes.dims]
    planes = {}
    change = np.inf
    sweeps = 0
    while sweeps < options.max_sweeps:
        backward = schedule[sweeps % len(schedule)]
        if backward not in planes:
            planes[backward] = _Planes(axes, backward)
        change = sweep(phi, axes, model, backward, planes[backward])
        change = max(change, boundary_update(phi, axes))
        sweeps += 1
        logger.debug("sweep %d: max change %.3g", sweeps, change)
        if change < options.epsilon:
            return TtrResult(ValueField(phi), sweeps, change, True)
    warnings.warn(
        f"time-to-reach did not converge in {sweeps} sweeps (last change {change:.3g})",
        ConvergenceWarning,
        stacklevel=2,
    )
    return TtrResult(ValueField(phi), sweeps, change, False)
