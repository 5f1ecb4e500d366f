import csv
import io
import struct

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import finite, fixed_seed, grid_specs
from hjdp.formats import (
    FormatError,
    export_csv_slice,
    export_vtk,
    field_from_bytes,
    field_to_bytes,
    iter_field_chunks,
    read_field,
    read_vtk,
    slice_field,
    write_field,
)
from hjdp.grid import GridSpec, build_grid, make_grid

SPEC5 = GridSpec((0.0,), (1.0,), (5,))


def test_round_trip_small_field():
    data = np.array([0.1, -2.5, np.pi, 1e-300, -0.0])
    raw = field_to_bytes(SPEC5, data, time=0.25)
    back = field_from_bytes(raw)
    assert back.spec == SPEC5 and back.time == 0.25
    assert back.data.tobytes() == data.tobytes()


def test_header_layout_is_fixed():
    raw = field_to_bytes(SPEC5, np.zeros(5), time=1.5)
    assert raw[:8] == b"HJDPFLD\x00"
    assert struct.unpack("<IIB", raw[8:17]) == (1, 1, 1)
    assert struct.unpack("<d", raw[24:32]) == (1.5,)
    assert struct.unpack("<Q", raw[32:40]) == (5,)
    header = 32 + 25
    header += -header % 8
    assert len(raw) == header + 5 * 8


@pytest.mark.parametrize(
    "mutate, message",
    [
        (lambda r: b"XXXXXXXX" + r[8:], "magic"),
        (lambda r: r[:8] + struct.pack("<I", 9) + r[12:], "version"),
        (lambda r: r[:16] + b"\x02" + r[17:], "element kind"),
        (lambda r: r[:-3], "truncated"),
        (lambda r: r[:30], "truncated"),
    ],
)
def test_corrupt_containers_rejected(mutate, message):
    raw = field_to_bytes(SPEC5, np.arange(5.0))
    with pytest.raises(FormatError, match=message):
        field_from_bytes(mutate(raw))


def test_shape_mismatch_rejected():
    with pytest.raises(FormatError):
        field_to_bytes(SPEC5, np.zeros(4))


def test_mmap_and_chunked_reads(tmp_path):
    g = make_grid([-1, 0], [1, 2], [7, 9], periodic_dims=[1])
    data = np.random.default_rng(1).normal(size=g.shape)
    path = tmp_path / "f.hjf"
    write_field(path, g.spec, data, 3.0)
    mapped = read_field(path, mmap=True)
    assert np.array_equal(mapped.data, data) and mapped.spec == g.spec
    chunks = list(iter_field_chunks(path, chunk_values=10))
    assert all(spec == g.spec and t == 3.0 for spec, t, _ in chunks)
    assert np.concatenate([c for _, _, c in chunks]).tobytes() == data.tobytes()


@fixed_seed
@given(grid_specs(max_dims=6, max_nodes=100_000, max_count=40), st.integers(0, 2**32 - 1), finite)
def test_round_trip_random_fields(spec, seed, t):
    rng = np.random.default_rng(seed)
    data = rng.normal(size=spec.counts) * 10.0 ** rng.integers(-300, 300, size=spec.counts)
    back = field_from_bytes(field_to_bytes(spec, data, t))
    assert back.spec == spec and back.time == t
    assert back.data.tobytes() == data.tobytes()


def test_vtk_binary_and_ascii_agree(tmp_path):
    g = make_grid([0, -1, -2], [1, 1, 2], [4, 5, 6])
    data = np.random.default_rng(2).normal(size=g.shape)
    for binary in (True, False):
        path = tmp_path / f"f{binary}.vtk"
        export_vtk(data, g, path, binary=binary)
        values, header = read_vtk(path)
        assert header["DIMENSIONS"] == "4 5 6"
        assert header["DATASET"] == "STRUCTURED_POINTS"
        # VTK stores x fastest: reading back gives (nz, ny, nx)
        np.testing.assert_array_equal(values, data.transpose(2, 1, 0))
        origin = [float(v) for v in header["ORIGIN"].split()]
        assert origin == [0.0, -1.0, -2.0]


def test_vtk_slices_high_dimensional_field(tmp_path):
    g = make_grid([0] * 6, [1] * 6, [3, 4, 5, 3, 3, 3])
    data = np.random.default_rng(3).normal(size=g.shape)
    with pytest.raises(ValueError, match="at most 3"):
        export_vtk(data, g, tmp_path / "x.vtk")
    export_vtk(data, g, tmp_path / "s.vtk", fixed={3: 1, 4: 0, 5: 2})
    values, header = read_vtk(tmp_path / "s.vtk")
    assert header["DIMENSIONS"] == "3 4 5"
    np.testing.assert_array_equal(values, data[:, :, :, 1, 0, 2].transpose(2, 1, 0))


def test_vtk_pads_lower_dimensional_fields(tmp_path):
    g = make_grid([0], [1], [6])
    export_vtk(np.arange(6.0), g, tmp_path / "a.vtk")
    values, header = read_vtk(tmp_path / "a.vtk")
    assert header["DIMENSIONS"] == "6 1 1"
    np.testing.assert_array_equal(values.ravel(), np.arange(6.0))


def test_csv_one_dimensional(tmp_path):
    g = make_grid([0], [1], [5])
    export_csv_slice(np.arange(5.0), g, tmp_path / "a.csv")
    rows = list(csv.reader(open(tmp_path / "a.csv")))
    assert rows[0] == ["x0", "value"]
    assert len(rows) == 1 + 5 and all(len(r) == 2 for r in rows)


@fixed_seed
@given(grid_specs(max_dims=5, max_nodes=3000), st.integers(0, 2**32 - 1), st.data())
def test_csv_values_equal_direct_lookups(spec, seed, data):
    g = build_grid(spec)
    field = np.random.default_rng(seed).normal(size=g.shape)
    n_fixed = data.draw(st.integers(max(0, g.dims - 3), g.dims))
    dims = data.draw(st.permutations(range(g.dims)))[:n_fixed]
    fixed = {d: data.draw(st.integers(0, g.shape[d] - 1)) for d in dims}
    buf = io.StringIO()
    export_csv_slice(field, g, buf, fixed)
    table = np.loadtxt(io.StringIO(buf.getvalue()), delimiter=",", skiprows=1, ndmin=2)
    free = [d for d in range(g.dims) if d not in fixed]
    for row in table:
        index = dict(fixed)
        for col, d in enumerate(free):
            index[d] = int(np.argmin(np.abs(g.coords[d] - row[col])))
            assert g.coords[d][index[d]] == row[col]
        assert field[tuple(index[d] for d in range(g.dims))] == row[-1]
    assert len(table) == np.prod([g.shape[d] for d in free])


def test_slice_validation():
    g = make_grid([0, 0], [1, 1], [3, 4])
    with pytest.raises(ValueError):
        slice_field(np.zeros(g.shape), g, {2: 0})
    with pytest.raises(ValueError):
        slice_field(np.zeros(g.shape), g, {1: 4})
