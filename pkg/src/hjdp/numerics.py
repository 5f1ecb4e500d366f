"""Spatial derivatives, Lax-Friedrichs dissipation, CFL step and RK1 update.

Two derivative schemes are available:

``upwind1``
    first-order one-sided differences.
``eno2``
    second-order ENO: the one-sided difference plus a curvature correction
    taken from whichever of the two candidate stencils has the smaller
    second difference (ties go to the left-biased stencil).

The scalar functions (:func:`upwind_first`, :func:`eno2`) evaluate a single
node through :func:`~hjdp.grid.neighbor_value`. The solvers use the
vectorised :func:`block_derivatives`, which must agree with them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .grid import GridAxes, extend_block, neighbor_value
from .shapes import ValueField

Scheme = Literal["upwind1", "eno2"]
SCHEMES = ("upwind1", "eno2")


@dataclass(frozen=True)
class DerivativePair:
    left: float
    right: float

    @property
    def central(self) -> float:
        return 0.5 * (self.left + self.right)


@dataclass
class DissipationBounds:
    """Per-dimension costate range and largest dissipation coefficient of one step."""

    min_deriv: np.ndarray
    max_deriv: np.ndarray
    alpha_max: np.ndarray

    @classmethod
    def empty(cls, dims: int) -> "DissipationBounds":
        return cls(np.full(dims, np.inf), np.full(dims, -np.inf), np.zeros(dims))

    def merge(self, other: "DissipationBounds") -> None:
        np.minimum(self.min_deriv, other.min_deriv, out=self.min_deriv)
        np.maximum(self.max_deriv, other.max_deriv, out=self.max_deriv)
        np.maximum(self.alpha_max, other.alpha_max, out=self.alpha_max)


def _check_scheme(scheme: str) -> None:
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")


def upwind_first(data: np.ndarray, axes: GridAxes, dim: int, index: Sequence[int]) -> DerivativePair:
    dz = axes.spacing[dim]
    v = float(data[tuple(index)])
    vm = neighbor_value(data, axes, dim, index, -1)
    vp = neighbor_value(data, axes, dim, index, +1)
    return DerivativePair((v - vm) / dz, (vp - v) / dz)


def _choose(a, b):
    return np.where(np.abs(a) <= np.abs(b), a, b)


def eno2(data: np.ndarray, axes: GridAxes, dim: int, index: Sequence[int]) -> DerivativePair:
    dz = axes.spacing[dim]
    v = [neighbor_value(data, axes, dim, index, k) if k else float(data[tuple(index)]) for k in range(-2, 3)]
    # v[2] is the node itself
    d1_minus = (v[2] - v[1]) / dz
    d1_plus = (v[3] - v[2]) / dz
    dd = [(v[j + 1] - 2.0 * v[j] + v[j - 1]) / (dz * dz) for j in (1, 2, 3)]
    left = d1_minus + 0.5 * dz * float(_choose(dd[0], dd[1]))
    right = d1_plus - 0.5 * dz * float(_choose(dd[1], dd[2]))
    return DerivativePair(left, right)


def _along(arr: np.ndarray, axis: int, start: int, stop: int | None) -> np.ndarray:
    idx = [slice(None)] * arr.ndim
    idx[axis] = slice(start, stop)
    return arr[tuple(idx)]


def block_derivatives(
    data: np.ndarray, axes: GridAxes, block: tuple[slice, ...], dim: int, scheme: Scheme
) -> tuple[np.ndarray, np.ndarray]:
    """Left and right derivative arrays along ``dim`` over ``block``."""
    dz = axes.spacing[dim]
    ext = extend_block(data, axes, block, dim, 2)
    m = ext.shape[dim] - 4
    d1 = np.diff(ext, axis=dim) / dz
    # d1[j] sits between ext[j] and ext[j+1]; block node i is ext[i + 2]
    left = _along(d1, dim, 1, m + 1)
    right = _along(d1, dim, 2, m + 2)
    if scheme == "upwind1":
        return left, right
    _check_scheme(scheme)
    # second differences at ext[1 .. m+2], same arithmetic as eno2()
    dd = (_along(ext, dim, 2, None) - 2.0 * _along(ext, dim, 1, -1) + _along(ext, dim, 0, -2)) / (
        dz * dz
    )
    left = left + 0.5 * dz * _choose(_along(dd, dim, 0, m), _along(dd, dim, 1, m + 1))
    right = right - 0.5 * dz * _choose(_along(dd, dim, 1, m + 1), _along(dd, dim, 2, m + 2))
    return left, right


def lax_friedrichs_dissipate(H: float, pairs: Sequence[DerivativePair], alpha: Sequence[float]) -> float:
    """Lax-Friedrichs numerical Hamiltonian ``H - sum_d alpha_d (right_d - left_d) / 2``.

    This is the flux for ``phi_t + H = 0``. The time-dependent solver
    advances ``phi_tau = H`` and therefore applies it to ``-H`` and negates
    the result (see :func:`hjdp.hj_solver.dissipation_pass`).
    """
    out = H
    for pair, a in zip(pairs, alpha):
        if a < 0:
            raise ValueError("dissipation coefficients must be non-negative")
        out = out - a * (pair.right - pair.left) / 2.0
    return out


def cfl_timestep(
    alpha_max: Sequence[float],
    spacing: Sequence[float],
    factor: float = 0.8,
    remaining: float | None = None,
) -> float:
    """Largest stable explicit step ``factor / sum_d(alpha_d / dz_d)``.

    When every coefficient is zero the field is stationary and
    ``remaining`` (the time left to the horizon) is returned instead.
    """
    if not 0 < factor <= 1:
        raise ValueError(f"CFL factor must be in (0, 1], got {factor}")
    rate = float(np.sum(np.abs(np.asarray(alpha_max, dtype=float)) / np.asarray(spacing, dtype=float)))
    if rate == 0.0:
        if remaining is None:
            raise ValueError("all dissipation coefficients are zero and no remaining time was given")
        return float(remaining)
    return factor / rate


def rk1_step(field: ValueField, H: np.ndarray, dt: float) -> ValueField:
    """Forward Euler update ``V + dt * H``."""
    if H.shape != field.data.shape:
        raise ValueError(f"shape mismatch: field {field.data.shape}, H {H.shape}")
    if not dt > 0:
        raise ValueError("dt must be positive")
    return ValueField(field.data + dt * H, field.time + dt)
