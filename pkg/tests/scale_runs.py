"""Large-grid runs executed in a child process so peak memory can be measured.

Usage: ``python scale_runs.py dubins100 | grid25x6 [workdir]``; prints one JSON line.
"""

import json
import os
import resource
import sys
import tempfile
import time

import numpy as np

from hjdp.dynamics import DubinsCapture3D, UnderwaterTracker6D
from hjdp.formats import iter_field_chunks, write_field
from hjdp.grid import make_grid
from hjdp.hj_solver import PdeSolveOptions, solve_pde
from hjdp.shapes import cylinder_sdf


def peak_rss_bytes() -> int:
    return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss * 1024


def dubins100() -> dict:
    axes = make_grid([-5, -5, -np.pi], [5, 5, np.pi], [100, 100, 100], periodic_dims=[2])
    V = cylinder_sdf(axes, [2], [0, 0, 0], 0.5)
    start = time.perf_counter()
    out = solve_pde(V, axes, DubinsCapture3D(), PdeSolveOptions(horizon=1.0, workers=8), overwrite_initial=True)
    elapsed = time.perf_counter() - start
    final = out[-1].data
    return {
        "seconds": elapsed,
        "peak_rss": peak_rss_bytes(),
        "time": out[-1].time,
        "finite": bool(np.isfinite(final).all()),
    }


def grid25x6(workdir: str) -> dict:
    axes = make_grid([-1, -1, -0.5, -0.5, -5, -5], [1, 1, 0.5, 0.5, 5, 5], [25] * 6)
    t0 = time.perf_counter()
    V = cylinder_sdf(axes, [2, 3, 4, 5], [0] * 6, 0.3)
    path = os.path.join(workdir, "grid25x6.hjf")
    write_field(path, axes.spec, V, 0.0)
    rss_after_write = peak_rss_bytes()
    flat = V.reshape(-1)
    pos, identical = 0, True
    for spec, _, chunk in iter_field_chunks(path):
        identical &= spec == axes.spec and np.array_equal(
            flat[pos : pos + chunk.size].view(np.uint64), chunk.view(np.uint64)
        )
        pos += chunk.size
    identical &= pos == flat.size
    os.remove(path)
    rss_after_roundtrip = peak_rss_bytes()
    t1 = time.perf_counter()
    out = solve_pde(
        V,
        axes,
        UnderwaterTracker6D(),
        PdeSolveOptions(horizon=1.0, max_steps=1),
        overwrite_initial=True,
    )
    return {
        "nodes": int(V.size),
        "payload_bytes": int(V.nbytes),
        "roundtrip_identical": bool(identical),
        "roundtrip_seconds": t1 - t0,
        "step_seconds": time.perf_counter() - t1,
        "steps_time": out[-1].time,
        "finite": bool(np.isfinite(out[-1].data).all()),
        "peak_rss_write": rss_after_write,
        "peak_rss_roundtrip": rss_after_roundtrip,
        "peak_rss": peak_rss_bytes(),
    }


if __name__ == "__main__":
    which = sys.argv[1]
    if which == "dubins100":
        result = dubins100()
    else:
        with tempfile.TemporaryDirectory(dir=sys.argv[2] if len(sys.argv) > 2 else None) as tmp:
            result = grid25x6(tmp)
    print(json.dumps(result))
