"""Binary field container, legacy VTK export and CSV slices.

Field container layout (all little-endian)::

    offset  size        content
    0       8           magic b"HJDPFLD\\0"
    8       4  uint32   version (1)
    12      4  uint32   dims (1..6)
    16      1  uint8    element kind (1 = float64)
    17      7           zero padding
    24      8  float64  time stamp
    32      8*dims      uint64 node counts
    ..      8*dims      float64 lower bounds
    ..      8*dims      float64 upper bounds
    ..      dims        uint8 periodic flags (0/1)
    ..      0-7         zero padding to a multiple of 8
    ..      8*prod(counts) float64 payload, row-major (last dim fastest)

Payloads are streamed in chunks in both directions, so reading and
writing never hold a second copy of the field.
"""

from __future__ import annotations

import io
import os
import struct
import sys
from dataclasses import dataclass
from typing import BinaryIO, Iterator, Mapping

import numpy as np

from .grid import GridAxes, GridSpec

MAGIC = b"HJDPFLD\x00"
VERSION = 1
KIND_FLOAT64 = 1
_HEAD = struct.Struct("<8sIIB7xd")
_CHUNK = 1 << 22  # bytes per streamed chunk


class FormatError(ValueError):
    """Malformed or unsupported field container."""


@dataclass
class FieldContainer:
    spec: GridSpec
    data: np.ndarray
    time: float = 0.0


def _header(spec: GridSpec, time: float) -> bytes:
    dims = spec.dims
    parts = [
        _HEAD.pack(MAGIC, VERSION, dims, KIND_FLOAT64, float(time)),
        struct.pack(f"<{dims}Q", *spec.counts),
        struct.pack(f"<{dims}d", *spec.mins),
        struct.pack(f"<{dims}d", *spec.maxs),
        struct.pack(f"<{dims}B", *(1 if p else 0 for p in spec.periodic)),
    ]
    head = b"".join(parts)
    return head + b"\x00" * (-len(head) % 8)


def _open(target, mode):
    if isinstance(target, (str, os.PathLike)):
        return open(target, mode), True
    return target, False


def write_field(target: str | os.PathLike | BinaryIO, spec: GridSpec, data: np.ndarray, time: float = 0.0) -> None:
    """Write ``data`` (grid-shaped) with its grid description to a path or binary file."""
    if tuple(data.shape) != spec.counts:
        raise FormatError(f"data shape {data.shape} does not match grid counts {spec.counts}")
    flat = np.asarray(data, dtype=np.float64).reshape(-1)
    if not flat.flags.c_contiguous:
        flat = np.ascontiguousarray(flat)
    fh, owned = _open(target, "wb")
    try:
        fh.write(_header(spec, time))
        step = _CHUNK // 8
        for i in range(0, flat.size, step):
            chunk = flat[i : i + step]
            if sys.byteorder != "little":
                chunk = chunk.astype("<f8")
            fh.write(memoryview(chunk).cast("B"))
    finally:
        if owned:
            fh.close()


def _read_exact(fh, n: int, what: str) -> bytes:
    buf = fh.read(n)
    if len(buf) != n:
        raise FormatError(f"truncated container: expected {n} bytes of {what}, got {len(buf)}")
    return buf


def _read_header(fh) -> tuple[GridSpec, float, int]:
    magic, version, dims, kind, time = _HEAD.unpack(_read_exact(fh, _HEAD.size, "header"))
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"unsupported container version {version}")
    if kind != KIND_FLOAT64:
        raise FormatError(f"unsupported element kind {kind}")
    if not 1 <= dims <= 6:
        raise FormatError(f"bad dimension count {dims}")
    counts = struct.unpack(f"<{dims}Q", _read_exact(fh, 8 * dims, "counts"))
    mins = struct.unpack(f"<{dims}d", _read_exact(fh, 8 * dims, "mins"))
    maxs = struct.unpack(f"<{dims}d", _read_exact(fh, 8 * dims, "maxs"))
    periodic = struct.unpack(f"<{dims}B", _read_exact(fh, dims, "periodic flags"))
    size = _HEAD.size + 24 * dims + dims
    pad = -size % 8
    _read_exact(fh, pad, "padding")
    spec = GridSpec(mins, maxs, counts, tuple(bool(p) for p in periodic))
    return spec, time, size + pad


def read_field(source: str | os.PathLike | BinaryIO, mmap: bool = False) -> FieldContainer:
    """Read a container written by :func:`write_field`.

    With ``mmap=True`` (paths only) the payload is memory-mapped read-only
    instead of loaded.
    """
    fh, owned = _open(source, "rb")
    try:
        spec, time, offset = _read_header(fh)
        shape = spec.counts
        count = int(np.prod(shape, dtype=np.int64))
        if mmap:
            if not owned:
                raise ValueError("mmap requires a file path")
            size = os.fstat(fh.fileno()).st_size
            if size < offset + 8 * count:
                raise FormatError(f"truncated container: payload needs {8 * count} bytes")
            data = np.memmap(source, dtype="<f8", mode="r", offset=offset, shape=shape)
            return FieldContainer(spec, data, time)
        data = np.empty(count, dtype=np.float64)
        view = memoryview(data).cast("B")
        pos = 0
        total = 8 * count
        while pos < total:
            n = fh.readinto(view[pos : min(pos + _CHUNK, total)])
            if not n:
                raise FormatError(f"truncated container: payload has {pos} of {total} bytes")
            pos += n
        if sys.byteorder != "little":
            data.byteswap(inplace=True)
        return FieldContainer(spec, data.reshape(shape), time)
    finally:
        if owned:
            fh.close()


def iter_field_chunks(
    source: str | os.PathLike | BinaryIO, chunk_values: int = _CHUNK // 8
) -> Iterator[tuple[GridSpec, float, np.ndarray]]:
    """Stream a container as ``(spec, time, chunk)`` with flat row-major chunks.

    Only one chunk is held at a time, so arbitrarily large fields can be
    verified or converted with constant memory.
    """
    fh, owned = _open(source, "rb")
    try:
        spec, time, _ = _read_header(fh)
        remaining = int(np.prod(spec.counts, dtype=np.int64))
        while remaining:
            n = min(chunk_values, remaining)
            chunk = np.frombuffer(_read_exact(fh, 8 * n, "payload"), dtype="<f8")
            yield spec, time, chunk.astype(np.float64, copy=False)
            remaining -= n
    finally:
        if owned:
            fh.close()


def field_to_bytes(spec: GridSpec, data: np.ndarray, time: float = 0.0) -> bytes:
    buf = io.BytesIO()
    write_field(buf, spec, data, time)
    return buf.getvalue()


def field_from_bytes(raw: bytes) -> FieldContainer:
    return read_field(io.BytesIO(raw))


def slice_field(
    data: np.ndarray, axes: GridAxes, fixed: Mapping[int, int] | None = None
) -> tuple[np.ndarray, list[int]]:
    """Pin the dimensions in ``fixed`` (dim -> node index); return the slice and its free dims."""
    fixed = dict(fixed or {})
    for d, i in fixed.items():
        if not 0 <= d < axes.dims:
            raise ValueError(f"slice dimension {d} outside 0..{axes.dims - 1}")
        if not 0 <= i < axes.shape[d]:
            raise ValueError(f"slice index {i} outside 0..{axes.shape[d] - 1} for dim {d}")
    idx = tuple(fixed.get(d, slice(None)) for d in range(axes.dims))
    free = [d for d in range(axes.dims) if d not in fixed]
    return data[idx], free


def export_vtk(
    data: np.ndarray,
    axes: GridAxes,
    path: str | os.PathLike,
    fixed: Mapping[int, int] | None = None,
    binary: bool = True,
    name: str = "value",
) -> None:
    """Write a legacy VTK ``STRUCTURED_POINTS`` file of at most three free dimensions.

    The header is ASCII; with ``binary=True`` the payload is big-endian
    float64 with grid dimension 0 varying fastest, as VTK expects.
    """
    sub, free = slice_field(data, axes, fixed)
    if len(free) > 3:
        raise ValueError(f"VTK export needs at most 3 free dimensions, got {len(free)}; pin some with a slice")
    dims3 = [axes.shape[d] for d in free] + [1] * (3 - len(free))
    origin = [axes.coords[d][0] for d in free] + [0.0] * (3 - len(free))
    spacing = [axes.spacing[d] for d in free] + [1.0] * (3 - len(free))
    lines = [
        "# vtk DataFile Version 3.0",
        f"{name} field, free dims {free}",
        "BINARY" if binary else "ASCII",
        "DATASET STRUCTURED_POINTS",
        "DIMENSIONS {} {} {}".format(*dims3),
        "ORIGIN {!r} {!r} {!r}".format(*map(float, origin)),
        "SPACING {!r} {!r} {!r}".format(*map(float, spacing)),
        f"POINT_DATA {sub.size}",
        f"SCALARS {name} double 1",
        "LOOKUP_TABLE default",
    ]
    values = np.asarray(sub, dtype=np.float64).ravel(order="F")
    with open(path, "wb") as fh:
        fh.write(("\n".join(lines) + "\n").encode("ascii"))
        if binary:
            fh.write(values.astype(">f8").tobytes())
            fh.write(b"\n")
        else:
            for row in range(0, values.size, 6):
                fh.write((" ".join(repr(float(v)) for v in values[row : row + 6]) + "\n").encode("ascii"))


def read_vtk(path: str | os.PathLike) -> tuple[np.ndarray, dict]:
    """Parse a file written by :func:`export_vtk`; returns ``(values (nz, ny, nx), header)``."""
    with open(path, "rb") as fh:
        header = {}
        for _ in range(10):
            line = fh.readline().decode("ascii").strip()
            key, _, rest = line.partition(" ")
            header[key] = rest
        nx, ny, nz = (int(v) for v in header["DIMENSIONS"].split())
        n = nx * ny * nz
        if "BINARY" in header:
            values = np.frombuffer(fh.read(8 * n), dtype=">f8").astype(np.float64)
        else:
            values = np.array(fh.read().split(), dtype=np.float64)
    return values.reshape(nz, ny, nx), header


def export_csv_slice(
    data: np.ndarray, axes: GridAxes, path: str | os.PathLike, fixed: Mapping[int, int] | None = None
) -> None:
    """CSV with one coordinate column per free dimension and a ``value`` column.

    Rows follow row-major order over the free dimensions.
    """
    sub, free = slice_field(data, axes, fixed)
    if len(free) > 3:
        raise ValueError(f"CSV slices need at most 3 free dimensions, got {len(free)}")
    if free:
        mesh = np.meshgrid(*(axes.coords[d] for d in free), indexing="ij")
        cols = [m.ravel() for m in mesh]
    else:
        cols = []
    table = np.column_stack(cols + [np.asarray(sub, dtype=float).ravel()])
    header = ",".join([f"x{d}" for d in free] + ["value"])
    np.savetxt(path, table, delimiter=",", header=header, comments="", fmt="%.17g")

