"""JSON problem configuration: parsing, validation and object construction.

See ``docs/config.md`` for the schema. Every validation failure raises
:class:`ConfigError` whose ``path`` names the offending key, e.g.
``grid.mins`` or ``target.of[1].radius``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from . import dynamics as dyn
from .grid import MAX_DIMS, MIN_NODES, GridAxes, GridSpec, build_grid
from .hj_solver import PdeSolveOptions
from .numerics import SCHEMES
from .shapes import cylinder_sdf, halfspace_sdf, intersect_fields, sphere_sdf, union_fields
from .ttr_solver import TtrOptions

SOLVER_KEYS = ("pde", "ttr", "mdp")
OUTPUT_FORMATS = ("field", "vtk", "csv")


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}")


@dataclass
class DynamicsConfig:
    model: str
    params: dict[str, Any]
    control_mode: str | None = None
    disturbance_mode: str | None = None


@dataclass
class MdpConfig:
    actions: list[list[float]]
    discount: float = 0.9
    threshold: float = 1e-6
    max_iterations: int = 1000
    timestep: float = 0.1
    successors: list[tuple[list[float], float]] = field(default_factory=list)
    reward: dict[str, Any] = field(default_factory=lambda: {"kind": "target_indicator"})
    mode: str = "alternating"


@dataclass
class OutputConfig:
    path: str = "output"
    formats: tuple[str, ...] = ("field",)
    slice: dict[int, int] = field(default_factory=dict)


@dataclass
class ProblemConfig:
    grid: GridSpec
    dynamics: DynamicsConfig
    solver: str
    target: dict[str, Any] | None = None
    pde: PdeSolveOptions | None = None
    ttr: TtrOptions | None = None
    mdp: MdpConfig | None = None
    output: OutputConfig = field(default_factory=OutputConfig)


# ---- primitive validators -------------------------------------------------


def _obj(value, path: str, required: tuple[str, ...] = (), optional: tuple[str, ...] = ()) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(path, f"expected an object, got {type(value).__name__}")
    allowed = set(required) | set(optional)
    for key in value:
        if key not in allowed:
            raise ConfigError(_join(path, key), f"unknown key (allowed: {', '.join(sorted(allowed))})")
    for key in required:
        if key not in value:
            raise ConfigError(_join(path, key), "required key missing")
    return value


def _join(path: str, key) -> str:
    if isinstance(key, int):
        return f"{path}[{key}]"
    return key if path == "$" else f"{path}.{key}"


def _num(value, path: str, lo: float | None = None, hi: float | None = None, lo_open=False, hi_open=False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {type(value).__name__}")
    try:
        v = float(value)
    except OverflowError:
        raise ConfigError(path, "number out of range") from None
    if not math.isfinite(v):
        raise ConfigError(path, "must be finite")
    if lo is not None and (v <= lo if lo_open else v < lo):
        raise ConfigError(path, f"must be {'>' if lo_open else '>='} {lo}, got {v}")
    if hi is not None and (v >= hi if hi_open else v > hi):
        raise ConfigError(path, f"must be {'<' if hi_open else '<='} {hi}, got {v}")
    return v


def _int(value, path: str, lo: int | None = None, hi: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(path, f"expected an integer, got {type(value).__name__}")
    if lo is not None and value < lo:
        raise ConfigError(path, f"must be >= {lo}, got {value}")
    if hi is not None and value > hi:
        raise ConfigError(path, f"must be <= {hi}, got {value}")
    return value


def _bool(value, path: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(path, f"expected true/false, got {type(value).__name__}")
    return value


def _choice(value, path: str, choices) -> str:
    if not isinstance(value, str) or value not in choices:
        raise ConfigError(path, f"must be one of {', '.join(map(repr, choices))}, got {value!r}")
    return value


def _list(value, path: str, item: Callable, length: int | None = None, min_len: int = 0) -> list:
    if not isinstance(value, list):
        raise ConfigError(path, f"expected a list, got {type(value).__name__}")
    if length is not None and len(value) != length:
        raise ConfigError(path, f"expected {length} entries, got {len(value)}")
    if len(value) < min_len:
        raise ConfigError(path, f"expected at least {min_len} entries, got {len(value)}")
    return [item(v, _join(path, i)) for i, v in enumerate(value)]


# ---- sections ---------------------------------------------------------------


def _parse_grid(raw, path="grid") -> GridSpec:
    g = _obj(raw, path, ("mins", "maxs", "counts"), ("periodic", "dims"))
    counts = _list(g["counts"], _join(path, "counts"), lambda v, p: _int(v, p, MIN_NODES, 1 << 31), min_len=1)
    dims = len(counts)
    if "dims" in g:
        dims = _int(g["dims"], _join(path, "dims"), 1, MAX_DIMS)
        if len(counts) != dims:
            raise ConfigError(_join(path, "counts"), f"expected {dims} entries, got {len(counts)}")
    if dims > MAX_DIMS:
        raise ConfigError(_join(path, "counts"), f"at most {MAX_DIMS} dimensions are supported, got {dims}")
    mins = _list(g["mins"], _join(path, "mins"), _num, dims)
    maxs = _list(g["maxs"], _join(path, "maxs"), _num, dims)
    periodic = _list(g.get("periodic", [False] * dims), _join(path, "periodic"), _bool, dims)
    for d in range(dims):
        if not mins[d] < maxs[d]:
            raise ConfigError(_join(_join(path, "maxs"), d), f"must exceed grid.mins[{d}] = {mins[d]}")
    return GridSpec(tuple(mins), tuple(maxs), tuple(counts), tuple(periodic))


def _parse_target(raw, path: str, dims: int) -> dict:
    if not isinstance(raw, dict):
        raise ConfigError(path, f"expected an object, got {type(raw).__name__}")
    kind = _choice(raw.get("kind"), _join(path, "kind"), ("sphere", "cylinder", "halfspace", "union", "intersection"))

    def center(v, p):
        return _list(v, p, _num, dims)

    if kind == "sphere":
        t = _obj(raw, path, ("kind", "center", "radius"))
        return {
            "kind": kind,
            "center": center(t["center"], _join(path, "center")),
            "radius": _num(t["radius"], _join(path, "radius"), 0.0, lo_open=True),
        }
    if kind == "cylinder":
        t = _obj(raw, path, ("kind", "ignore_dims", "center", "radius"))
        ignore = _list(t["ignore_dims"], _join(path, "ignore_dims"), lambda v, p: _int(v, p, 0, dims - 1))
        if len(set(ignore)) >= dims:
            raise ConfigError(_join(path, "ignore_dims"), "cannot ignore every dimension")
        return {
            "kind": kind,
            "ignore_dims": ignore,
            "center": center(t["center"], _join(path, "center")),
            "radius": _num(t["radius"], _join(path, "radius"), 0.0, lo_open=True),
        }
    if kind == "halfspace":
        t = _obj(raw, path, ("kind", "dim", "threshold", "side"))
        return {
            "kind": kind,
            "dim": _int(t["dim"], _join(path, "dim"), 0, dims - 1),
            "threshold": _num(t["threshold"], _join(path, "threshold")),
            "side": _choice(t["side"], _join(path, "side"), ("lower", "upper")),
        }
    t = _obj(raw, path, ("kind", "of"))
    parts = _list(t["of"], _join(path, "of"), lambda v, p: _parse_target(v, p, dims), min_len=1)
    return {"kind": kind, "of": parts}


def build_target(desc: dict, axes: GridAxes) -> np.ndarray:
    kind = desc["kind"]
    if kind == "sphere":
        return sphere_sdf(axes, desc["center"], desc["radius"])
    if kind == "cylinder":
        return cylinder_sdf(axes, desc["ignore_dims"], desc["center"], desc["radius"])
    if kind == "halfspace":
        return halfspace_sdf(axes, desc["dim"], desc["threshold"], desc["side"])
    combine = union_fields if kind == "union" else intersect_fields
    out = build_target(desc["of"][0], axes)
    for part in desc["of"][1:]:
        out = combine(out, build_target(part, axes))
    return out


def _pair(v, p):
    pair = _list(v, p, _num, 2)
    if pair[0] > pair[1]:
        raise ConfigError(p, "lower bound exceeds upper bound")
    return tuple(pair)


def _nonneg(v, p):
    return _num(v, p, 0.0)


# model name -> (class, dims or None for "from params", {param: validator})
MODELS: dict[str, tuple[type, int | None, dict[str, Callable]]] = {
    "integrator1d": (dyn.Integrator1D, 1, {"u_max": _nonneg}),
    "constant_drift": (dyn.ConstantDrift, None, {"velocity": lambda v, p: _list(v, p, _num, min_len=1)}),
    "dubins3d": (
        dyn.DubinsCapture3D,
        3,
        {"v_a": _num, "v_b": _num, "a_max": _nonneg, "b_max": _nonneg},
    ),
    "underwater6d": (
        dyn.UnderwaterTracker6D,
        6,
        {
            **{k: _num for k in ("m", "m_bar", "X_udot", "Z_wdot", "X_u", "X_uu", "Z_w", "Z_ww", "g")},
            **{k: _num for k in ("V_fx", "V_fz", "A_fx", "A_fz")},
            **{
                k: _pair
                for k in ("thrust_a", "thrust_b", "planner_x", "planner_z", "dstb_x", "dstb_z", "dstb_u", "dstb_w")
            },
        },
    ),
}


def _parse_dynamics(raw, dims: int, path="dynamics") -> DynamicsConfig:
    d = _obj(raw, path, ("model",), ("params", "control_mode", "disturbance_mode"))
    name = _choice(d["model"], _join(path, "model"), tuple(MODELS))
    cls, model_dims, validators = MODELS[name]
    params_raw = _obj(d.get("params", {}), _join(path, "params"), (), tuple(validators))
    params = {k: validators[k](v, _join(_join(path, "params"), k)) for k, v in params_raw.items()}
    if name == "constant_drift":
        if "velocity" not in params:
            raise ConfigError(_join(path, "params.velocity"), "required key missing")
        model_dims = len(params["velocity"])
    if model_dims != dims:
        raise ConfigError(_join(path, "model"), f"{name} has {model_dims} state dims but the grid has {dims}")
    modes = {}
    for key in ("control_mode", "disturbance_mode"):
        if key in d:
            modes[key] = _choice(d[key], _join(path, key), ("max", "min"))
    if name == "constant_drift" and modes:
        raise ConfigError(path, "constant_drift takes no control or disturbance modes")
    return DynamicsConfig(name, params, modes.get("control_mode"), modes.get("disturbance_mode"))


def build_model(cfg: DynamicsConfig) -> dyn.DynamicsModel:
    cls = MODELS[cfg.model][0]
    kwargs = dict(cfg.params)
    if cfg.control_mode is not None:
        kwargs["control_mode"] = cfg.control_mode
    if cfg.disturbance_mode is not None:
        kwargs["disturbance_mode"] = cfg.disturbance_mode
    return cls(**kwargs)


def _parse_pde(raw, path="pde") -> PdeSolveOptions:
    p = _obj(
        raw,
        path,
        ("horizon",),
        ("scheme", "cfl_factor", "tube_mode", "save_every", "workers", "divergence_threshold", "max_steps"),
    )
    opts = PdeSolveOptions(horizon=_num(p["horizon"], _join(path, "horizon"), 0.0, lo_open=True))
    if "scheme" in p:
        opts.scheme = _choice(p["scheme"], _join(path, "scheme"), SCHEMES)
    if "cfl_factor" in p:
        opts.cfl_factor = _num(p["cfl_factor"], _join(path, "cfl_factor"), 0.0, 1.0, lo_open=True)
    if "tube_mode" in p:
        opts.tube_mode = _bool(p["tube_mode"], _join(path, "tube_mode"))
    if p.get("save_every") is not None:
        opts.save_every = _num(p["save_every"], _join(path, "save_every"), 0.0, lo_open=True)
    if "workers" in p and p["workers"] != "auto":
        opts.workers = _int(p["workers"], _join(path, "workers"), 1, 4096)
    if "divergence_threshold" in p:
        opts.divergence_threshold = _num(p["divergence_threshold"], _join(path, "divergence_threshold"), 0.0, lo_open=True)
    if p.get("max_steps") is not None:
        opts.max_steps = _int(p["max_steps"], _join(path, "max_steps"), 1)
    return opts


def _parse_ttr(raw, path="ttr") -> TtrOptions:
    t = _obj(raw, path, (), ("epsilon", "max_sweeps", "large_value", "alternate"))
    opts = TtrOptions()
    if "epsilon" in t:
        opts.epsilon = _num(t["epsilon"], _join(path, "epsilon"), 0.0, lo_open=True)
    if "max_sweeps" in t:
        opts.max_sweeps = _int(t["max_sweeps"], _join(path, "max_sweeps"), 1)
    if "large_value" in t:
        opts.large_value = _num(t["large_value"], _join(path, "large_value"), 0.0, lo_open=True)
    if "alternate" in t:
        opts.alternate = _bool(t["alternate"], _join(path, "alternate"))
    return opts


def _parse_mdp(raw, n_ctrl: int, dims: int, path="mdp") -> MdpConfig:
    m = _obj(
        raw,
        path,
        (),
        ("actions", "action_grid", "discount", "threshold", "max_iterations", "timestep", "successors", "reward", "mode"),
    )
    if ("actions" in m) == ("action_grid" in m):
        raise ConfigError(path, "give exactly one of 'actions' or 'action_grid'")
    if n_ctrl == 0:
        raise ConfigError(_join(path, "actions"), "the dynamics model has no control inputs")
    if "actions" in m:
        actions = _list(m["actions"], _join(path, "actions"), lambda v, p: _list(v, p, _num, n_ctrl), min_len=1)
    else:
        gpath = _join(path, "action_grid")
        g = _obj(m["action_grid"], gpath, ("mins", "maxs", "counts"))
        counts = _list(g["counts"], _join(gpath, "counts"), lambda v, p: _int(v, p, 1, 1 << 16), n_ctrl)
        mins = _list(g["mins"], _join(gpath, "mins"), _num, n_ctrl)
        maxs = _list(g["maxs"], _join(gpath, "maxs"), _num, n_ctrl)
        for d in range(n_ctrl):
            if mins[d] > maxs[d]:
                raise ConfigError(_join(_join(gpath, "maxs"), d), "must be >= the matching min")
        if math.prod(counts) > 1 << 16:
            raise ConfigError(_join(gpath, "counts"), "more than 65536 actions")
        axes = [np.linspace(lo, hi, n) for lo, hi, n in zip(mins, maxs, counts)]
        mesh = np.meshgrid(*axes, indexing="ij")
        actions = np.stack([a.ravel() for a in mesh], axis=1).tolist()
    cfg = MdpConfig(actions=actions)
    if "discount" in m:
        cfg.discount = _num(m["discount"], _join(path, "discount"), 0.0, 1.0, hi_open=True)
    if "threshold" in m:
        cfg.threshold = _num(m["threshold"], _join(path, "threshold"), 0.0, lo_open=True)
    if "max_iterations" in m:
        cfg.max_iterations = _int(m["max_iterations"], _join(path, "max_iterations"), 1)
    if "timestep" in m:
        cfg.timestep = _num(m["timestep"], _join(path, "timestep"), 0.0, lo_open=True)
    if "mode" in m:
        cfg.mode = _choice(m["mode"], _join(path, "mode"), ("alternating", "fixed", "jacobi"))
    if "successors" in m:

        def succ(v, p):
            s = _obj(v, p, ("offset", "probability"))
            return (
                _list(s["offset"], _join(p, "offset"), _num, dims),
                _num(s["probability"], _join(p, "probability"), 0.0, 1.0),
            )

        cfg.successors = _list(m["successors"], _join(path, "successors"), succ, min_len=1)
        total = sum(p for _, p in cfg.successors)
        if abs(total - 1.0) > 1e-12:
            raise ConfigError(_join(path, "successors"), f"probabilities sum to {total!r}, not 1")
    if "reward" in m:
        rpath = _join(path, "reward")
        r = m["reward"]
        if isinstance(r, dict) and "table" in r:
            _obj(r, rpath, ("table",))
            cfg.reward = {"table": _list(r["table"], _join(rpath, "table"), _num, min_len=1)}
        else:
            r = _obj(r, rpath, ("kind",))
            cfg.reward = {"kind": _choice(r["kind"], _join(rpath, "kind"), ("target_indicator", "zero"))}
    return cfg


def _parse_output(raw, dims: int, path="output") -> OutputConfig:
    o = _obj(raw, path, (), ("path", "formats", "slice"))
    out = OutputConfig()
    if "path" in o:
        if not isinstance(o["path"], str) or not o["path"]:
            raise ConfigError(_join(path, "path"), "expected a non-empty string")
        out.path = o["path"]
    if "formats" in o:
        out.formats = tuple(
            _list(o["formats"], _join(path, "formats"), lambda v, p: _choice(v, p, OUTPUT_FORMATS), min_len=1)
        )
    if "slice" in o:
        spath = _join(path, "slice")
        s = _obj(o["slice"], spath, (), tuple(str(d) for d in range(dims)))
        out.slice = {int(k): _int(v, _join(spath, k), 0) for k, v in s.items()}
    return out


def parse_config_dict(raw: Any) -> ProblemConfig:
    root = _obj(raw, "$", ("grid", "dynamics"), ("target", "output") + SOLVER_KEYS)
    solvers = [k for k in SOLVER_KEYS if k in root]
    if len(solvers) != 1:
        raise ConfigError("$", f"exactly one solver block (pde, ttr or mdp) is required, got {solvers or 'none'}")
    solver = solvers[0]
    grid = _parse_grid(root["grid"])
    dims = grid.dims
    dynamics = _parse_dynamics(root["dynamics"], dims)
    target = _parse_target(root["target"], "target", dims) if "target" in root else None
    cfg = ProblemConfig(grid=grid, dynamics=dynamics, solver=solver, target=target)
    if solver == "pde":
        cfg.pde = _parse_pde(root["pde"])
    elif solver == "ttr":
        cfg.ttr = _parse_ttr(root["ttr"])
    else:
        n_ctrl = len(build_model(dynamics).ctrl_bounds)
        cfg.mdp = _parse_mdp(root["mdp"], n_ctrl, dims)
        if "table" in cfg.mdp.reward:
            n = len(cfg.mdp.reward["table"])
            S, A = math.prod(grid.counts), len(cfg.mdp.actions)
            if n not in (S, S * A):
                raise ConfigError("mdp.reward.table", f"expected {S} or {S * A} entries, got {n}")
    needs_target = solver in ("pde", "ttr") or cfg.mdp.reward.get("kind") == "target_indicator"
    if needs_target and target is None:
        raise ConfigError("target", f"required key missing (needed by the {solver} solver)")
    if "output" in root:
        cfg.output = _parse_output(root["output"], dims)
    for d, i in cfg.output.slice.items():
        if i >= grid.counts[d]:
            raise ConfigError(f"output.slice.{d}", f"index {i} outside 0..{grid.counts[d] - 1}")
    return cfg


def parse_config(text: str | bytes) -> ProblemConfig:
    """Parse and validate a JSON configuration document.

    Raises :class:`ConfigError` for any malformed input.
    """
    try:
        raw = json.loads(text)
    except (ValueError, RecursionError) as exc:
        # JSONDecodeError and UnicodeDecodeError are both ValueErrors
        raise ConfigError("$", f"invalid JSON: {exc}") from None
    return parse_config_dict(raw)


def load_config(path) -> ProblemConfig:
    with open(path, "rb") as fh:
        return parse_config(fh.read())


def build_grid_from(cfg: ProblemConfig) -> GridAxes:
    return build_grid(cfg.grid)
