"""Cartesian grids, index/coordinate mapping and boundary ghost values.

Storage is row-major with dimension 0 outermost, so loops (and blocks, see
:func:`iter_blocks`) nest with the highest dimension innermost.

Periodic dimensions exclude the upper endpoint (it aliases the lower one);
non-periodic dimensions include both endpoints.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

MAX_DIMS = 6
MIN_NODES = 3


@dataclass(frozen=True)
class GridSpec:
    """User-facing description of a Cartesian grid."""

    mins: tuple[float, ...]
    maxs: tuple[float, ...]
    counts: tuple[int, ...]
    periodic: tuple[bool, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "mins", tuple(float(v) for v in self.mins))
        object.__setattr__(self, "maxs", tuple(float(v) for v in self.maxs))
        object.__setattr__(self, "counts", tuple(int(v) for v in self.counts))
        periodic = self.periodic or (False,) * len(self.counts)
        object.__setattr__(self, "periodic", tuple(bool(v) for v in periodic))

    @property
    def dims(self) -> int:
        return len(self.counts)

    def validate(self) -> None:
        dims = self.dims
        if not 1 <= dims <= MAX_DIMS:
            raise ValueError(f"grid must have 1..{MAX_DIMS} dimensions, got {dims}")
        for name in ("mins", "maxs", "periodic"):
            if len(getattr(self, name)) != dims:
                raise ValueError(
                    f"grid.{name} has {len(getattr(self, name))} entries, expected {dims}"
                )
        for d in range(dims):
            if self.counts[d] < MIN_NODES:
                raise ValueError(
                    f"grid.counts[{d}] = {self.counts[d]} < {MIN_NODES}; "
                    "stencils need two neighbours"
                )
            lo, hi = self.mins[d], self.maxs[d]
            if not (math.isfinite(lo) and math.isfinite(hi)) or not lo < hi:
                raise ValueError(f"grid bounds for dim {d} need min < max, got [{lo}, {hi}]")


@dataclass(frozen=True, eq=False)
class GridAxes:
    """A built grid: node spacing and coordinate vectors per dimension."""

    spec: GridSpec
    spacing: np.ndarray
    coords: tuple[np.ndarray, ...]
    _vs: tuple[np.ndarray, ...] = field(repr=False, default=())

    @property
    def dims(self) -> int:
        return self.spec.dims

    @property
    def shape(self) -> tuple[int, ...]:
        return self.spec.counts

    @property
    def size(self) -> int:
        return math.prod(self.spec.counts)

    @property
    def periodic(self) -> tuple[bool, ...]:
        return self.spec.periodic

    @property
    def mins(self) -> np.ndarray:
        return np.asarray(self.spec.mins)

    @property
    def maxs(self) -> np.ndarray:
        return np.asarray(self.spec.maxs)

    @property
    def vs(self) -> tuple[np.ndarray, ...]:
        """Coordinate vectors reshaped to broadcast against the grid shape."""
        return self._vs

    def node(self, index: Sequence[int]) -> np.ndarray:
        """Coordinates of the node at ``index``."""
        return np.array([self.coords[d][i] for d, i in enumerate(index)])

    def block_vs(self, block: tuple[slice, ...]) -> tuple[np.ndarray, ...]:
        """Broadcastable coordinate arrays restricted to ``block``."""
        return tuple(v[_axis_index(d, self.dims, block[d])] for d, v in enumerate(self._vs))

    def points(self) -> np.ndarray:
        """All node coordinates as a ``(size, dims)`` array, row-major order."""
        mesh = np.meshgrid(*self.coords, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)


def _axis_index(d: int, dims: int, item) -> tuple:
    idx = [slice(None)] * dims
    idx[d] = item
    return tuple(idx)


def build_grid(spec: GridSpec) -> GridAxes:
    """Construct spacing and node coordinates for ``spec``.

    Raises
    ------
    ValueError
        If the dimension count is outside 1..6, a count is below 3 or a
        lower bound is not below its upper bound.
    """
    spec.validate()
    spacing = np.empty(spec.dims)
    coords = []
    for d in range(spec.dims):
        lo, hi, n = spec.mins[d], spec.maxs[d], spec.counts[d]
        if spec.periodic[d]:
            spacing[d] = (hi - lo) / n
            coords.append(lo + spacing[d] * np.arange(n))
        else:
            spacing[d] = (hi - lo) / (n - 1)
            c = lo + spacing[d] * np.arange(n)
            c[-1] = hi
            coords.append(c)
    vs = []
    for d, c in enumerate(coords):
        shape = [1] * spec.dims
        shape[d] = c.size
        vs.append(c.reshape(shape))
    for c in coords:
        c.setflags(write=False)
    spacing.setflags(write=False)
    return GridAxes(spec=spec, spacing=spacing, coords=tuple(coords), _vs=tuple(vs))


def make_grid(mins, maxs, counts, periodic_dims=()) -> GridAxes:
    """Shorthand for ``build_grid(GridSpec(...))`` taking periodic dim indices."""
    counts = tuple(counts)
    periodic = tuple(d in set(periodic_dims) for d in range(len(counts)))
    return build_grid(GridSpec(tuple(mins), tuple(maxs), counts, periodic))


def _sign(x):
    return np.where(x >= 0, 1.0, -1.0)


def _ghost(edge, inner, k):
    slope = np.abs(edge - inner) * _sign(edge)
    return edge + k * slope


def neighbor_value(
    data: np.ndarray, axes: GridAxes, dim: int, index: Sequence[int], offset: int
) -> float:
    """Value ``offset`` nodes away from ``index`` along ``dim``.

    Out-of-range accesses wrap on periodic dimensions. On non-periodic
    dimensions the value is extrapolated linearly from the two outermost
    nodes, with the slope's sign forced to match the edge value so that
    ghosts move away from the zero level set.
    """
    if abs(offset) > 2:
        raise ValueError("offset must be within [-2, 2]")
    n = axes.shape[dim]
    index = list(index)
    j = index[dim] + offset
    if 0 <= j < n:
        index[dim] = j
        return float(data[tuple(index)])
    if axes.periodic[dim]:
        index[dim] = j % n
        return float(data[tuple(index)])
    if j < 0:
        edge_i, inner_i, k = 0, 1, -j
    else:
        edge_i, inner_i, k = n - 1, n - 2, j - (n - 1)
    index[dim] = edge_i
    edge = data[tuple(index)]
    index[dim] = inner_i
    inner = data[tuple(index)]
    return float(_ghost(edge, inner, k))


def extend_block(
    data: np.ndarray, axes: GridAxes, block: tuple[slice, ...], dim: int, width: int = 2
) -> np.ndarray:
    """Copy of ``data[block]`` padded by ``width`` neighbours along ``dim``.

    Padding uses the same wrap/extrapolation rule as :func:`neighbor_value`.
    """
    n = axes.shape[dim]
    sl = block[dim]
    lo, hi = sl.start, sl.stop
    rows = np.arange(lo - width, hi + width)
    outer = list(block)
    outer[dim] = slice(None)
    outer = tuple(outer)
    if axes.periodic[dim]:
        return np.take(data[outer], rows % n, axis=dim)
    ext = np.take(data[outer], np.clip(rows, 0, n - 1), axis=dim)
    if lo - width < 0:
        edge = np.take(data[outer], [0], axis=dim)
        inner = np.take(data[outer], [1], axis=dim)
        for pos, r in enumerate(rows):
            if r >= 0:
                break
            ext[_axis_index(dim, data.ndim, slice(pos, pos + 1))] = _ghost(edge, inner, -r)
    if hi + width > n:
        edge = np.take(data[outer], [n - 1], axis=dim)
        inner = np.take(data[outer], [n - 2], axis=dim)
        for pos in range(rows.size - 1, -1, -1):
            r = rows[pos]
            if r < n:
                break
            ext[_axis_index(dim, data.ndim, slice(pos, pos + 1))] = _ghost(edge, inner, r - (n - 1))
    return ext


def nearest_index(axes: GridAxes, point: Sequence[float]) -> tuple[int, ...]:
    """Index of the grid node closest to ``point``.

    Coordinates are clamped into the box on non-periodic dimensions and
    wrapped into the period otherwise; exact midpoints round up.
    """
    idx = nearest_indices(axes, np.asarray(point, dtype=float).reshape(1, -1))
    return tuple(int(i) for i in idx[0])


def nearest_indices(axes: GridAxes, points: np.ndarray) -> np.ndarray:
    """Vectorised :func:`nearest_index` for a ``(n, dims)`` array of points."""
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != axes.dims:
        raise ValueError(f"points must have shape (n, {axes.dims})")
    out = np.empty(points.shape, dtype=np.intp)
    for d in range(axes.dims):
        n = axes.shape[d]
        t = (points[:, d] - axes.spec.mins[d]) / axes.spacing[d]
        if axes.periodic[d]:
            t = np.mod(t, n)
            out[:, d] = np.mod(np.floor(t + 0.5), n).astype(np.intp)
        else:
            t = np.clip(t, 0.0, n - 1)
            out[:, d] = np.minimum(np.floor(t + 0.5), n - 1).astype(np.intp)
    return out


def iter_blocks(shape: Sequence[int], target_size: int = 1 << 16) -> Iterator[tuple[slice, ...]]:
    """Partition a row-major grid into contiguous blocks of about ``target_size`` nodes.

    The partition depends only on ``shape`` and ``target_size``; solvers
    rely on that to give bit-identical results for any worker count.
    Leading dimensions are split first, trailing dimensions stay whole.
    """
    shape = tuple(shape)
    dims = len(shape)
    split = 0
    tail = math.prod(shape[1:])
    while split < dims - 1 and tail > target_size:
        split += 1
        tail = math.prod(shape[split + 1 :])
    step = max(1, target_size // tail)
    outer_ranges = [range(n) for n in shape[:split]]
    for outer in itertools.product(*outer_ranges):
        for lo in range(0, shape[split], step):
            hi = min(lo + step, shape[split])
            blk = [slice(i, i + 1) for i in outer]
            blk.append(slice(lo, hi))
            blk.extend(slice(0, n) for n in shape[split + 1 :])
            yield tuple(blk)

