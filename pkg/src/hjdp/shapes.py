"""Signed-distance initial conditions and set operations on value fields.

Every constructor returns a C-ordered ``float64`` array with the grid's
shape. Negative values mark the inside of the set.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .grid import GridAxes


@dataclass
class ValueField:
    """A scalar field over a grid together with its solver time stamp."""

    data: np.ndarray
    time: float = 0.0

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape


def _squared_distance(axes: GridAxes, center: Sequence[float], dims: Sequence[int]) -> np.ndarray:
    out = np.zeros(axes.shape)
    for d in dims:
        out += (axes.vs[d] - center[d]) ** 2
    return out


def sphere_sdf(axes: GridAxes, center: Sequence[float], radius: float) -> np.ndarray:
    """Euclidean distance to ``center`` minus ``radius``."""
    return cylinder_sdf(axes, (), center, radius)


def cylinder_sdf(
    axes: GridAxes, ignore_dims: Sequence[int], center: Sequence[float], radius: float
) -> np.ndarray:
    """Like :func:`sphere_sdf` but constant along ``ignore_dims``.

    ``center`` has one entry per grid dimension; entries of ignored
    dimensions are not used.
    """
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius}")
    if len(center) != axes.dims:
        raise ValueError(f"center has {len(center)} entries, grid has {axes.dims} dims")
    ignore = set(int(d) for d in ignore_dims)
    if not ignore <= set(range(axes.dims)):
        raise ValueError(f"ignore_dims {sorted(ignore)} outside 0..{axes.dims - 1}")
    used = [d for d in range(axes.dims) if d not in ignore]
    if not used:
        raise ValueError("cylinder ignores every dimension")
    out = _squared_distance(axes, center, used)
    np.sqrt(out, out=out)
    out -= radius
    return out


def halfspace_sdf(
    axes: GridAxes, dim: int, threshold: float, side: Literal["lower", "upper"]
) -> np.ndarray:
    """Signed offset from the plane ``coord[dim] == threshold``.

    ``side="lower"`` makes the region below the threshold the inside,
    ``side="upper"`` the region above it.
    """
    if not 0 <= dim < axes.dims:
        raise ValueError(f"dim {dim} outside 0..{axes.dims - 1}")
    out = np.zeros(axes.shape)
    if side == "lower":
        out += axes.vs[dim] - threshold
    elif side == "upper":
        out += threshold - axes.vs[dim]
    else:
        raise ValueError(f"side must be 'lower' or 'upper', got {side!r}")
    return out


def _check_same(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ValueError(f"field shapes differ: {a.shape} vs {b.shape}")


def union_fields(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    _check_same(a, b)
    return np.minimum(a, b)


def intersect_fields(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    _check_same(a, b)
    return np.maximum(a, b)
