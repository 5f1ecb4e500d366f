"""Level-set solver for the time-dependent Hamilton-Jacobi equation.

The value function is advanced backward in time from the target
``phi(z, 0) = phi_0(z)``; elapsed backward time ``tau`` is reported as a
positive number, so the update is ``phi <- phi + dt * H_hat`` with
``H(z, p) = opt_d opt_u p . f(z, u, d)``.

Each step makes two passes over the grid:

1. Hamiltonian pass: derivatives, optimal inputs, ``H = p . f`` into the
   single temporary array, and the global costate range per dimension.
2. Dissipation pass: derivatives are recomputed (not stored), the
   Lax-Friedrichs term ``alpha_d (D+ - D-) / 2`` is added to ``H`` and the
   largest ``alpha_d`` is collected for the CFL condition.

The grid is cut into fixed blocks (:func:`hjdp.grid.iter_blocks`) that
workers process independently. Block boundaries do not depend on the
worker count and the only cross-block reductions are min/max, so results
are bit-identical for any number of workers.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .dynamics import DynamicsModel
from .grid import GridAxes, iter_blocks
from .numerics import SCHEMES, DissipationBounds, Scheme, block_derivatives, cfl_timestep
from .shapes import ValueField

logger = logging.getLogger(__name__)


class NumericalError(RuntimeError):
    """A solve produced NaN/Inf values or diverged."""


@dataclass
class PdeSolveOptions:
    """Options for :func:`solve_pde`.

    ``tube_mode=True`` takes the pointwise minimum with the previous field
    after every step (backward reachable tube); ``False`` gives the plain
    backward reachable set. ``workers=None`` uses every available CPU.
    ``max_steps`` stops early, returning the field at the time reached.
    """

    horizon: float
    scheme: Scheme = "upwind1"
    cfl_factor: float = 0.8
    tube_mode: bool = True
    save_every: float | None = None
    workers: int | None = None
    divergence_threshold: float = 1e10
    max_steps: int | None = None
    block_size: int = 1 << 16

    def validate(self) -> None:
        if not self.horizon > 0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        if not 0 < self.cfl_factor <= 1:
            raise ValueError(f"cfl_factor must be in (0, 1], got {self.cfl_factor}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.save_every is not None and not self.save_every > 0:
            raise ValueError("save_every must be positive")
        if self.workers is not None and self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.max_steps is not None and self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")


class _Pool:
    """Maps block functions over a fixed block list, serially or on threads."""

    def __init__(self, blocks: list, workers: int):
        self.blocks = blocks
        self.workers = workers
        self._executor = ThreadPoolExecutor(workers) if workers > 1 else None

    def map(self, fn: Callable) -> Iterable:
        if self._executor is None:
            return map(fn, self.blocks)
        return self._executor.map(fn, self.blocks)

    def close(self) -> None:
        if self._executor is not None:
            self._executor.shutdown()


def _pool_for(axes: GridAxes, pool: _Pool | None, workers: int = 1) -> _Pool:
    return pool if pool is not None else _Pool(list(iter_blocks(axes.shape)), workers)


def _raise_nonfinite(values: np.ndarray, block: tuple[slice, ...], what: str) -> None:
    local = np.argwhere(~np.isfinite(values))[0]
    node = tuple(int(s.start + i) for s, i in zip(block, local))
    raise NumericalError(f"non-finite {what} at grid node {node}")


def hamiltonian_pass(
    data: np.ndarray,
    axes: GridAxes,
    model: DynamicsModel,
    scheme: Scheme,
    out: np.ndarray,
    pool: _Pool | None = None,
) -> DissipationBounds:
    """Fill ``out`` with ``p . f(z, u*, d*)`` using the central costate.

    Returns the per-dimension range of every left and right derivative.
    """
    dims = axes.dims

    def work(block):
        state = axes.block_vs(block)
        costate = []
        lo = np.empty(dims)
        hi = np.empty(dims)
        for d in range(dims):
            left, right = block_derivatives(data, axes, block, d, scheme)
            costate.append(0.5 * (left + right))
            lo[d] = min(left.min(), right.min())
            hi[d] = max(left.max(), right.max())
        ctrl = model.opt_ctrl(state, costate)
        dstb = model.opt_dstb(state, costate)
        f = model.rate(state, ctrl, dstb)
        h = costate[0] * f[0]
        for d in range(1, dims):
            h = h + costate[d] * f[d]
        if not np.isfinite(h).all():
            _raise_nonfinite(np.broadcast_to(h, out[block].shape), block, "Hamiltonian")
        out[block] = h
        return lo, hi

    bounds = DissipationBounds.empty(dims)
    for lo, hi in _pool_for(axes, pool).map(work):
        np.minimum(bounds.min_deriv, lo, out=bounds.min_deriv)
        np.maximum(bounds.max_deriv, hi, out=bounds.max_deriv)
    return bounds


def dissipation_pass(
    H: np.ndarray,
    data: np.ndarray,
    axes: GridAxes,
    model: DynamicsModel,
    bounds: DissipationBounds,
    scheme: Scheme,
    pool: _Pool | None = None,
) -> np.ndarray:
    """Add Lax-Friedrichs dissipation to ``H`` in place; return ``alpha_max`` per dim.

    With ``phi_tau = H`` the monotone flux is ``H + alpha (D+ - D-) / 2``,
    i.e. dissipation raises ``H`` where the field has a convex kink.
    """
    dims = axes.dims

    def work(block):
        state = axes.block_vs(block)
        amax = np.zeros(dims)
        diss = 0.0
        for d in range(dims):
            left, right = block_derivatives(data, axes, block, d, scheme)
            alpha = model.partial_bound(d, state, bounds.min_deriv[d], bounds.max_deriv[d])
            amax[d] = np.max(alpha)
            diss = diss + alpha * (right - left) / 2.0
        H[block] += diss
        return amax

    alpha_max = np.zeros(dims)
    for amax in _pool_for(axes, pool).map(work):
        np.maximum(alpha_max, amax, out=alpha_max)
    bounds.alpha_max = alpha_max
    return alpha_max


def _advance(V: np.ndarray, H: np.ndarray, dt: float, tube: bool, pool: _Pool) -> float:
    def work(block):
        new = V[block] + dt * H[block]
        if tube:
            np.minimum(V[block], new, out=new)
        if not np.isfinite(new).all():
            _raise_nonfinite(new, block, "value")
        V[block] = new
        return float(np.max(np.abs(new)))

    return max(pool.map(work))


def _checkpoint_times(horizon: float, save_every: float | None) -> list[float]:
    times = []
    if save_every is not None:
        k = 1
        while k * save_every < horizon * (1 - 1e-12):
            times.append(k * save_every)
            k += 1
    times.append(horizon)
    return times


def solve_pde(
    initial: ValueField | np.ndarray,
    axes: GridAxes,
    model: DynamicsModel,
    options: PdeSolveOptions,
    on_step: Callable[[float, float, np.ndarray], None] | None = None,
    overwrite_initial: bool = False,
) -> list[ValueField]:
    """Advance ``initial`` to ``options.horizon``.

    Returns checkpoints at multiples of ``save_every`` plus the final field.
    Intermediate checkpoints are copies; the final one shares memory with
    the working array. ``on_step(time, dt, data)`` is called after every
    accepted step. With ``overwrite_initial`` the initial array is used as
    the working array, which saves one full copy on large grids.

    Raises
    ------
    NumericalError
        On NaN/Inf or when ``max|V|`` exceeds ``divergence_threshold``.
    """
    options.validate()
    if model.dims != axes.dims:
        raise ValueError(f"model has {model.dims} dims, grid has {axes.dims}")
    data = initial.data if isinstance(initial, ValueField) else initial
    if data.shape != axes.shape:
        raise ValueError(f"initial field shape {data.shape} != grid shape {axes.shape}")
    if not np.isfinite(data).all():
        raise ValueError("initial field contains NaN or Inf")
    if overwrite_initial and data.dtype == np.float64 and data.flags.c_contiguous:
        V = data
    else:
        V = np.array(data, dtype=np.float64, order="C")
    start = initial.time if isinstance(initial, ValueField) else 0.0

    workers = options.workers or os.cpu_count() or 1
    pool = _Pool(list(iter_blocks(axes.shape, options.block_size)), workers)
    H = np.empty_like(V)
    targets = _checkpoint_times(options.horizon, options.save_every)
    checkpoints: list[ValueField] = []
    elapsed = 0.0
    steps = 0
    try:
        for target in targets:
            while elapsed < target:
                bounds = hamiltonian_pass(V, axes, model, options.scheme, H, pool)
                alpha = dissipation_pass(H, V, axes, model, bounds, options.scheme, pool)
                remaining = target - elapsed
                dt = cfl_timestep(alpha, axes.spacing, options.cfl_factor, remaining)
                if dt >= remaining:
                    dt, elapsed = remaining, target
                else:
                    elapsed += dt
                vmax = _advance(V, H, dt, options.tube_mode, pool)
                steps += 1
                if vmax > options.divergence_threshold:
                    raise NumericalError(
                        f"max|V| = {vmax:.3g} exceeds {options.divergence_threshold:.3g} at "
                        f"t = {elapsed:.6g}; CFL violation or bad dynamics"
                    )
                logger.debug("step %d: t=%.6g dt=%.3g alpha=%s", steps, elapsed, dt, alpha)
                if on_step is not None:
                    on_step(start + elapsed, dt, V)
                if options.max_steps is not None and steps >= options.max_steps and elapsed < options.horizon:
                    logger.info("stopping after %d steps at t=%.6g", steps, elapsed)
                    checkpoints.append(ValueField(V, start + elapsed))
                    return checkpoints
            if target < options.horizon:
                checkpoints.append(ValueField(V.copy(), start + target))
    finally:
        pool.close()
    checkpoints.append(ValueField(V, start + options.horizon))
    logger.info("solved to t=%.6g in %d steps", options.horizon, steps)
    return checkpoints
