import copy
import json
from pathlib import Path

import jsonschema
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import fixed_seed
from hjdp.config import ConfigError, ProblemConfig, build_model, build_target, load_config, parse_config
from hjdp.dynamics import DubinsCapture3D, Integrator1D
from hjdp.grid import build_grid

DOCS = Path(__file__).resolve().parent.parent / "docs"
SCHEMA = json.loads((DOCS / "config.schema.json").read_text())
EXAMPLES = sorted((DOCS / "examples").glob("*.json"))

MINIMAL = {
    "grid": {"mins": [-1], "maxs": [1], "counts": [101]},
    "target": {"kind": "sphere", "center": [0], "radius": 0.25},
    "dynamics": {"model": "integrator1d"},
    "pde": {"horizon": 0.5},
}


def parse(obj) -> ProblemConfig:
    return parse_config(json.dumps(obj))


def with_changes(**changes):
    cfg = copy.deepcopy(MINIMAL)
    for path, value in changes.items():
        node = cfg
        keys = path.split("__")
        for k in keys[:-1]:
            node = node[k]
        if value is KeyError:
            del node[keys[-1]]
        else:
            node[keys[-1]] = value
    return cfg


def test_minimal_config_fills_defaults():
    cfg = parse(MINIMAL)
    assert cfg.solver == "pde"
    assert (cfg.pde.cfl_factor, cfg.pde.scheme, cfg.pde.tube_mode) == (0.8, "upwind1", True)
    assert cfg.grid.periodic == (False,)
    assert cfg.output.formats == ("field",)
    assert isinstance(build_model(cfg.dynamics), Integrator1D)
    target = build_target(cfg.target, build_grid(cfg.grid))
    assert target[50] == -0.25


def test_length_mismatch_names_grid_mins():
    bad = {**MINIMAL, "grid": {"dims": 3, "mins": [0, 0], "maxs": [1, 1, 1], "counts": [5, 5, 5]}}
    with pytest.raises(ConfigError) as err:
        parse(bad)
    assert err.value.path == "grid.mins"
    bad = {**MINIMAL, "grid": {"mins": [0, 0], "maxs": [1, 1, 1], "counts": [5, 5, 5]}}
    with pytest.raises(ConfigError, match=r"^grid\.mins"):
        parse(bad)


def test_two_solver_blocks_rejected():
    with pytest.raises(ConfigError, match="exactly one solver"):
        parse({**MINIMAL, "ttr": {}})
    no_solver = {k: v for k, v in MINIMAL.items() if k != "pde"}
    with pytest.raises(ConfigError, match="exactly one solver"):
        parse(no_solver)


@pytest.mark.parametrize(
    "changes, path",
    [
        ({"pde__sheme": "eno2"}, "pde.sheme"),
        ({"grid__counts": [2]}, "grid.counts[0]"),
        ({"grid__maxs": [-1]}, "grid.maxs[0]"),
        ({"grid__periodic": [1]}, "grid.periodic[0]"),
        ({"pde__horizon": -1}, "pde.horizon"),
        ({"pde__cfl_factor": 1.5}, "pde.cfl_factor"),
        ({"pde__scheme": "weno"}, "pde.scheme"),
        ({"pde__workers": 0}, "pde.workers"),
        ({"target__radius": 0}, "target.radius"),
        ({"target__center": [0, 0]}, "target.center"),
        ({"target": {"kind": "cube"}}, "target.kind"),
        ({"target": {"kind": "union", "of": [{"kind": "sphere", "center": [0], "radius": "x"}]}}, "target.of[0].radius"),
        ({"target": {"kind": "halfspace", "dim": 1, "threshold": 0, "side": "lower"}}, "target.dim"),
        ({"target": {"kind": "cylinder", "ignore_dims": [0], "center": [0], "radius": 1}}, "target.ignore_dims"),
        ({"dynamics__model": "dubins3d"}, "dynamics.model"),
        ({"dynamics__params": {"u_max": -1}}, "dynamics.params.u_max"),
        ({"dynamics__params": {"v_a": 1}}, "dynamics.params.v_a"),
        ({"dynamics__control_mode": "maximise"}, "dynamics.control_mode"),
        ({"target": KeyError}, "target"),
        ({"output": {"formats": ["png"]}}, "output.formats[0]"),
        ({"output": {"slice": {"0": 101}}}, "output.slice.0"),
        ({"output": {"slice": {"1": 0}}}, "output.slice.1"),
        ({"pde__horizon": True}, "pde.horizon"),
        ({"pde__horizon": 1e400}, "pde.horizon"),
    ],
)
def test_errors_name_their_path(changes, path):
    with pytest.raises(ConfigError) as err:
        parse(with_changes(**changes))
    assert err.value.path == path, str(err.value)


def test_mdp_block():
    cfg = parse(
        {
            "grid": {"mins": [-1], "maxs": [1], "counts": [11]},
            "target": {"kind": "sphere", "center": [0], "radius": 0.1},
            "dynamics": {"model": "integrator1d"},
            "mdp": {
                "action_grid": {"mins": [-1], "maxs": [1], "counts": [3]},
                "successors": [{"offset": [0], "probability": 0.5}, {"offset": [0.1], "probability": 0.5}],
            },
        }
    )
    assert cfg.mdp.actions == [[-1.0], [0.0], [1.0]]
    assert cfg.mdp.reward == {"kind": "target_indicator"}
    base = {
        "grid": {"mins": [-1], "maxs": [1], "counts": [11]},
        "dynamics": {"model": "integrator1d"},
    }
    with pytest.raises(ConfigError, match="sum to"):
        parse({**base, "mdp": {"actions": [[0]], "successors": [{"offset": [0], "probability": 0.4}]}})
    with pytest.raises(ConfigError, match="exactly one of"):
        parse({**base, "mdp": {}})
    with pytest.raises(ConfigError) as err:
        parse({**base, "mdp": {"actions": [[0]], "reward": {"table": [1, 2]}}})
    assert err.value.path == "mdp.reward.table"
    with pytest.raises(ConfigError) as err:
        parse({**base, "mdp": {"actions": [[0]]}})
    assert err.value.path == "target"
    cfg = parse({**base, "mdp": {"actions": [[0]], "reward": {"kind": "zero"}}})
    assert cfg.target is None


def test_model_construction():
    cfg = parse(
        {
            "grid": {"mins": [0, 0, 0], "maxs": [1, 1, 6], "counts": [5, 5, 5], "periodic": [False, False, True]},
            "target": {"kind": "cylinder", "ignore_dims": [2], "center": [0, 0, 0], "radius": 1},
            "dynamics": {"model": "dubins3d", "params": {"v_a": 2}, "control_mode": "min"},
            "ttr": {"epsilon": 0.01},
        }
    )
    model = build_model(cfg.dynamics)
    assert isinstance(model, DubinsCapture3D)
    assert model.v_a == 2 and model.control_mode == "min" and model.disturbance_mode == "min"


def test_intersection_target():
    cfg = parse(
        with_changes(
            target={
                "kind": "intersection",
                "of": [
                    {"kind": "halfspace", "dim": 0, "threshold": 0.5, "side": "lower"},
                    {"kind": "halfspace", "dim": 0, "threshold": -0.5, "side": "upper"},
                ],
            }
        )
    )
    target = build_target(cfg.target, build_grid(cfg.grid))
    x = build_grid(cfg.grid).coords[0]
    np.testing.assert_allclose(target, np.abs(x) - 0.5, atol=1e-15)


@pytest.mark.parametrize("path", EXAMPLES, ids=lambda p: p.name)
def test_shipped_examples_valid(path):
    jsonschema.Draft202012Validator.check_schema(SCHEMA)
    jsonschema.validate(json.loads(path.read_text()), SCHEMA)
    load_config(path)


@pytest.mark.parametrize("text", [b"", b"{", b"\xff\xfe\x00", b"[]", b"null", b"1e999", b"[" * 100_000])
def test_malformed_documents(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def _outcome(doc):
    try:
        parse_config(doc)
        return True
    except ConfigError:
        return False


@fixed_seed
@given(st.binary(max_size=300))
def test_parsing_total_on_bytes(raw):
    _outcome(raw)


json_values = st.recursive(
    st.none() | st.booleans() | st.integers(-(10**20), 10**20) | st.floats() | st.text(max_size=8),
    lambda inner: st.lists(inner, max_size=4) | st.dictionaries(st.text(max_size=8), inner, max_size=4),
    max_leaves=20,
)


@fixed_seed
@given(json_values)
def test_parsing_total_on_json(value):
    _outcome(json.dumps(value))


def _paths(obj, prefix=()):
    yield prefix
    if isinstance(obj, dict):
        for k, v in obj.items():
            yield from _paths(v, prefix + (k,))
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            yield from _paths(v, prefix + (i,))


@fixed_seed
@given(st.sampled_from(EXAMPLES), st.data())
def test_mutated_examples_never_crash_and_respect_schema(path, data):
    doc = json.loads(path.read_text())
    paths = [p for p in _paths(doc) if p]
    target = data.draw(st.sampled_from(paths))
    node = doc
    for k in target[:-1]:
        node = node[k]
    if data.draw(st.booleans()) and isinstance(node, dict):
        del node[target[-1]]
    else:
        node[target[-1]] = data.draw(json_values)
    accepted = _outcome(json.dumps(doc))
    schema_ok = jsonschema.Draft202012Validator(SCHEMA).is_valid(doc)
    # the parser is at least as strict as the schema
    assert not accepted or schema_ok
