import json

import pytest

from stein_hellinger import config as C
from stein_hellinger.errors import ConfigError


def base():
    return json.loads(C.default_config().to_json())


def test_default_loads():
    cfg = C.default_config()
    assert cfg.n_grid == (100, 400, 1600) and cfg.reps == 100_000 and cfg.seed == 42
    assert cfg.distribution.family == "shifted-beta" and cfg.kernel == {"kind": "chaos"}


def test_repo_config_matches_packaged():
    from pathlib import Path
    repo = Path(__file__).resolve().parents[1] / "configs" / "default.json"
    assert C.load(str(repo)).to_dict() == C.default_config().to_dict()


def test_round_trip():
    cfg = C.default_config()
    again = C.loads(cfg.to_json())
    assert again.to_dict() == cfg.to_dict()
    assert C.loads(again.to_json()).to_json() == cfg.to_json()


def test_with_seed():
    assert C.default_config().with_seed(7).seed == 7


def test_invalid_json_line_number():
    text = '{\n  "reps": 10,\n  "seed": oops\n}'
    with pytest.raises(ConfigError) as ei:
        C.loads(text)
    assert ei.value.line == 3 and "line 3" in str(ei.value)


@pytest.mark.parametrize("key,value,fragment", [
    ("reps", 0, "reps"),
    ("seed", -1, "seed"),
    ("n_grid", [100, 50], "increasing"),
    ("n_grid", [2], ">= 3"),
    ("D", 50.0, "D must lie"),
    ("bound_source", "guess", "bound_source"),
    ("kernel", {"kind": "cubic"}, "kernel"),
    ("u_grid", [], "u_grid"),
    ("norms", {"rho_l2": 1}, "norms"),
    ("bogus", 1, "unknown"),
])
def test_validation_errors_point_at_key(key, value, fragment):
    d = base()
    d[key] = value
    text = json.dumps(d, indent=2)
    with pytest.raises(ConfigError) as ei:
        C.loads(text)
    assert fragment in str(ei.value)
    expected = text.splitlines().index(next(l for l in text.splitlines() if l.strip().startswith(f'"{key}"'))) + 1
    assert ei.value.line == expected


def test_missing_key():
    d = base()
    del d["seed"]
    with pytest.raises(ConfigError, match="seed"):
        C.from_dict(d)


def test_sweep_mode_requires_reps():
    d = base()
    d["reps"] = 500
    C.from_dict(d)
    with pytest.raises(ConfigError, match="sweep"):
        C.from_dict(d, mode="sweep")


def test_bad_distribution():
    d = base()
    d["distribution"] = {"family": "gamma", "support": [0, 1], "params": {}}
    with pytest.raises(ConfigError, match="distribution"):
        C.from_dict(d)


def test_nested_defaults_fill_in():
    d = base()
    d["pair"] = {"truncation_K": 10}
    d["hellinger"] = {"bandwidth": 0.05}
    cfg = C.from_dict(d)
    assert cfg.pair["t_grid"] == [0.06, 0.2, 0.7] and cfg.hellinger["grid"] == [-12.0, 12.0, 4001]
    d["pair"] = {"truncation_K": 31}
    with pytest.raises(ConfigError, match="truncation_K"):
        C.from_dict(d)


def test_unreadable_path(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        C.load(str(tmp_path / "nope.json"))
