"""Experiment drivers shared by the CLI and the acceptance tests."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Optional

from . import bounds as B
from .concentration import efficiency_check
from .config import ExperimentConfig
from .errors import ConfigError
from .hellinger import HellingerEstimate, hellinger_from_samples
from .numerics import RngStream
from .ustat import KernelSpec, kernel_from_dict, kernel_l4_sq, simulate_batch, standardize

SWEEP_HEADER = ("n", "H_hat", "H_err", "bound_total_over_sqrt2", "ratio", "pass")


def kernel_of(cfg: ExperimentConfig) -> KernelSpec:
    return kernel_from_dict(cfg.distribution, cfg.kernel)


def bound_inputs(cfg: ExperimentConfig, n: int) -> B.BoundInputs:
    dist = cfg.distribution
    kernel = kernel_of(cfg)
    if cfg.norms is not None:
        _, std = standardize(kernel, dist)
        return B.BoundInputs(n, cfg.D, std.bound_R, kernel_l4_sq(dist, std), cfg.norms["rho_l2"],
                             cfg.norms["i_l2"], cfg.norms["urho_l2"], source="config")
    if kernel.kind != "chaos":
        raise ConfigError("custom kernels need explicit score norms under the 'norms' key")
    rng = RngStream(cfg.seed, 0xB0).child(n)
    return B.inputs_for_chaos(dist, n, cfg.D, cfg.bound_source, cfg.score_reps, rng,
                              R=cfg.kernel.get("R"))


def bound_reports(cfg: ExperimentConfig):
    return [B.bound_report(bound_inputs(cfg, n)) for n in cfg.n_grid]


def _batch_stream(cfg, n):
    return RngStream(cfg.seed, n)


def estimate_hellinger(cfg: ExperimentConfig, values) -> HellingerEstimate:
    g = cfg.hellinger["grid"]
    return hellinger_from_samples(values, cfg.hellinger["bandwidth"], (g[0], g[1], g[2]))


@dataclass(frozen=True)
class SweepRow:
    n: int
    H_hat: float
    H_err: float
    bound_total: float
    reps: int

    @property
    def bound_over_sqrt2(self) -> float:
        return self.bound_total / math.sqrt(2.0)

    @property
    def ratio(self) -> float:
        return self.bound_over_sqrt2 / self.H_hat if self.H_hat > 0 else math.inf

    @property
    def passed(self) -> bool:
        return math.sqrt(2.0) * (self.H_hat + self.H_err) <= self.bound_total

    def csv_fields(self):
        return [str(self.n), repr(self.H_hat), repr(self.H_err), repr(self.bound_over_sqrt2),
                repr(self.ratio), str(self.passed).lower()]


def sweep_row(cfg: ExperimentConfig, n: int, reps: Optional[int] = None):
    reps = cfg.reps if reps is None else reps
    batch = simulate_batch(kernel_of(cfg), cfg.distribution, n, reps, _batch_stream(cfg, n),
                           keep_data=False)
    est = estimate_hellinger(cfg, batch.values)
    total = B.bound_report(bound_inputs(cfg, n)).total
    return SweepRow(n, est.value, est.mc_stderr_budget, total, reps), batch


def sweep_csv_header() -> str:
    return ",".join(SWEEP_HEADER) + "\n"


def sweep_line(row: SweepRow) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerow(row.csv_fields())
    return buf.getvalue()


def tail_rows(cfg: ExperimentConfig, n: int, h: Optional[float] = None, batch=None):
    """Concentration rows at n; h defaults to H_hat plus its error budget."""
    if batch is None:
        batch = simulate_batch(kernel_of(cfg), cfg.distribution, n, cfg.reps,
                               _batch_stream(cfg, n), keep_data=False)
    if h is None:
        est = estimate_hellinger(cfg, batch.values)
        h = est.value + est.mc_stderr_budget
    return efficiency_check(batch.values, h, cfg.u_grid), h
