"""Experiment configuration: JSON in, validated dataclass out, and back."""
from __future__ import annotations

import copy
import json
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

from .dists import DistributionSpec
from .errors import ConfigError

_TOP_KEYS = {"distribution", "kernel", "n_grid", "reps", "seed", "D", "bound_source", "hellinger",
             "pair", "u_grid", "output_dir", "norms", "score_reps", "verify"}
_VERIFY_DEFAULTS = {"pair_reps": 10000, "tau_reps": 20000, "ou_reps": 200000}
_PAIR_DEFAULTS = {"truncation_K": 20, "t_grid": [0.06, 0.2, 0.7], "s": None}
_HELLINGER_DEFAULTS = {"grid": [-12.0, 12.0, 4001], "bandwidth": "auto"}


@dataclass(frozen=True)
class ExperimentConfig:
    distribution: DistributionSpec
    kernel: dict
    n_grid: tuple
    reps: int
    seed: int
    D: float = 1.0
    bound_source: str = "analytic"
    hellinger: dict = field(default_factory=lambda: dict(_HELLINGER_DEFAULTS))
    pair: dict = field(default_factory=lambda: dict(_PAIR_DEFAULTS))
    u_grid: tuple = (-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0)
    output_dir: str = "out"
    norms: Optional[dict] = None
    score_reps: int = 20000
    verify: dict = field(default_factory=lambda: dict(_VERIFY_DEFAULTS))

    def to_dict(self) -> dict:
        out = {
            "distribution": self.distribution.to_dict(),
            "kernel": copy.deepcopy(self.kernel),
            "n_grid": list(self.n_grid),
            "reps": self.reps,
            "seed": self.seed,
            "D": self.D,
            "bound_source": self.bound_source,
            "hellinger": copy.deepcopy(self.hellinger),
            "pair": copy.deepcopy(self.pair),
            "u_grid": list(self.u_grid),
            "output_dir": self.output_dir,
            "score_reps": self.score_reps,
            "verify": dict(self.verify),
        }
        if self.norms is not None:
            out["norms"] = dict(self.norms)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"

    def with_seed(self, seed: int) -> "ExperimentConfig":
        d = self.to_dict()
        d["seed"] = seed
        return from_dict(d)


def _line_of(text: Optional[str], key: str) -> Optional[int]:
    if not text:
        return None
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _fail(msg, text, key):
    raise ConfigError(msg, line=_line_of(text, key))


def _int(v, name, text, lo=None):
    if isinstance(v, bool) or not isinstance(v, int):
        _fail(f"{name} must be an integer, got {v!r}", text, name)
    if lo is not None and v < lo:
        _fail(f"{name} must be >= {lo}, got {v}", text, name)
    return v


def _number(v, name, text):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        _fail(f"{name} must be a number, got {v!r}", text, name)
    return float(v)


def from_dict(d: dict, text: Optional[str] = None, mode: str = "any") -> ExperimentConfig:
    if not isinstance(d, dict):
        raise ConfigError("config must be a JSON object", line=1)
    unknown = sorted(set(d) - _TOP_KEYS)
    if unknown:
        _fail(f"unknown config key {unknown[0]!r}", text, unknown[0])
    for key in ("distribution", "kernel", "n_grid", "reps", "seed"):
        if key not in d:
            raise ConfigError(f"missing required key {key!r}", line=1 if text else None)
    try:
        dist = DistributionSpec.from_dict(d["distribution"])
    except ConfigError as exc:
        _fail(f"distribution: {exc}", text, "distribution")
    kernel = d["kernel"]
    if not isinstance(kernel, dict) or kernel.get("kind") not in ("chaos", "custom"):
        _fail('kernel must be {"kind": "chaos"} or {"kind": "custom", "table": ...}', text, "kernel")
    grid = d["n_grid"]
    if not isinstance(grid, list) or not grid:
        _fail("n_grid must be a nonempty list", text, "n_grid")
    grid = tuple(_int(n, "n_grid", text, 3) for n in grid)
    if any(b <= a for a, b in zip(grid, grid[1:])):
        _fail("n_grid must be strictly increasing", text, "n_grid")
    reps = _int(d["reps"], "reps", text, 1)
    if mode == "sweep" and reps < 1000:
        _fail(f"reps must be >= 1000 for sweep mode, got {reps}", text, "reps")
    seed = _int(d["seed"], "seed", text, 0)
    if seed >= 1 << 64:
        _fail("seed must fit in 64 bits", text, "seed")
    D = _number(d.get("D", 1.0), "D", text)
    if not 0 < D < min(grid) ** 0.5:
        _fail(f"D must lie in (0, sqrt(min n)), got {D}", text, "D")
    source = d.get("bound_source", "analytic")
    if source not in ("analytic", "mc"):
        _fail(f"bound_source must be 'analytic' or 'mc', got {source!r}", text, "bound_source")
    hel = {**_HELLINGER_DEFAULTS, **d.get("hellinger", {})}
    g = hel["grid"]
    if not (isinstance(g, list) and len(g) == 3 and g[0] < g[1] and isinstance(g[2], int) and g[2] >= 3):
        _fail("hellinger.grid must be [lo, hi, points] with lo < hi and points >= 3", text, "grid")
    bw = hel["bandwidth"]
    if bw != "auto" and not (isinstance(bw, (int, float)) and not isinstance(bw, bool) and bw > 0):
        _fail("hellinger.bandwidth must be 'auto' or a positive number", text, "bandwidth")
    pair = {**_PAIR_DEFAULTS, **d.get("pair", {})}
    K = _int(pair["truncation_K"], "truncation_K", text, 1)
    if K > 30:
        _fail("pair.truncation_K must be <= 30", text, "truncation_K")
    if not isinstance(pair["t_grid"], list) or not all(
            isinstance(t, (int, float)) and t > 0 for t in pair["t_grid"]):
        _fail("pair.t_grid must be a list of positive numbers", text, "t_grid")
    if pair["s"] is not None:
        _number(pair["s"], "s", text)
    u_grid = d.get("u_grid", list(ExperimentConfig.u_grid))
    if not isinstance(u_grid, list) or not u_grid:
        _fail("u_grid must be a nonempty list", text, "u_grid")
    u_grid = tuple(_number(u, "u_grid", text) for u in u_grid)
    norms = d.get("norms")
    if norms is not None:
        if not isinstance(norms, dict) or set(norms) != {"rho_l2", "i_l2", "urho_l2"}:
            _fail("norms must have exactly rho_l2, i_l2, urho_l2", text, "norms")
        norms = {k: _number(v, k, text) for k, v in norms.items()}
    verify = {**_VERIFY_DEFAULTS, **d.get("verify", {})}
    for k, v in verify.items():
        _int(v, k, text, 100)
    out_dir = d.get("output_dir", "out")
    if not isinstance(out_dir, str):
        _fail("output_dir must be a string", text, "output_dir")
    return ExperimentConfig(dist, kernel, grid, reps, seed, D, source, hel, pair, u_grid, out_dir,
                            norms, _int(d.get("score_reps", 20000), "score_reps", text, 100), verify)


def loads(text: str, mode: str = "any") -> ExperimentConfig:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", line=exc.lineno) from None
    return from_dict(d, text, mode)


def load(path: Optional[str] = None, mode: str = "any") -> ExperimentConfig:
    if path is None:
        text = resources.files("stein_hellinger").joinpath("default_config.json").read_text()
    else:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return loads(text, mode)


def default_config() -> ExperimentConfig:
    return load(None)
