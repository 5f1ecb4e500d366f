"""Shared hypothesis strategies and small grid helpers for the test suite."""

import numpy as np
from hypothesis import seed
from hypothesis import strategies as st

from hjdp.grid import GridSpec, build_grid

PROPERTY_SEED = 20261015
fixed_seed = seed(PROPERTY_SEED)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


@st.composite
def grid_specs(draw, max_dims=4, max_nodes=4000, max_count=12):
    dims = draw(st.integers(1, max_dims))
    counts = []
    for _ in range(dims):
        counts.append(draw(st.integers(3, max_count)))
    while np.prod(counts) > max_nodes:
        counts[int(np.argmax(counts))] -= 1
    mins, maxs = [], []
    for _ in range(dims):
        lo = draw(st.floats(-10, 10, allow_nan=False))
        width = draw(st.floats(0.1, 20, allow_nan=False))
        mins.append(lo)
        maxs.append(lo + width)
    periodic = draw(st.lists(st.booleans(), min_size=dims, max_size=dims))
    return GridSpec(tuple(mins), tuple(maxs), tuple(counts), tuple(periodic))


@st.composite
def grids_with_field(draw, **kw):
    spec = draw(grid_specs(**kw))
    axes = build_grid(spec)
    rng = np.random.default_rng(draw(st.integers(0, 2**32 - 1)))
    return axes, rng.normal(size=axes.shape)
