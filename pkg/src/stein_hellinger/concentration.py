"""Gaussian tail bands implied by a Hellinger bound.

If H(S, Z) <= h then |sqrt(P(S > u)) - sqrt(Phi^c(u))| <= sqrt(2) h, and the same
with P(|S| > u) against 2 Phi^c(u). The square-root scale is primary; the
probability-scale bands are squares of it, clipped to [0, 1].
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError
from .numerics import normal_ccdf

CSV_HEADER = ("u", "phi_c", "empirical", "lower", "upper", "pass")
DEFAULT_U_GRID = (-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0)


@dataclass(frozen=True)
class TailRow:
    u: float
    phi_c: float
    lower_bound: float
    upper_bound: float
    two_sided_bound: float
    empirical_tail: Optional[float] = None
    passed: Optional[bool] = None
    slack: Optional[float] = None  # allowed sqrt-scale deviation

    def csv_fields(self):
        emp = "" if self.empirical_tail is None else repr(float(self.empirical_tail))
        ok = "" if self.passed is None else str(bool(self.passed)).lower()
        return [repr(float(self.u)), repr(self.phi_c), emp, repr(self.lower_bound),
                repr(self.upper_bound), ok]


def tail_bounds_from_hellinger(h: float, u: float) -> TailRow:
    if not h >= 0 or not math.isfinite(h):
        raise DomainError(f"h must be finite and nonnegative, got {h}")
    pc = normal_ccdf(u)
    r = math.sqrt(2.0) * h
    rt = math.sqrt(pc)
    # clamp so rounding never puts Phi^c outside its own band
    upper = min(1.0, max(pc, (rt + r) ** 2))
    lower = min(pc, max(0.0, rt - r) ** 2)
    two = min(1.0, (math.sqrt(2 * pc) + r) ** 2) if u >= 0 else 1.0
    return TailRow(float(u), pc, lower, upper, two)


def efficiency_check(values, h_bound: float, u_grid: Sequence[float] = DEFAULT_U_GRID,
                     z: float = 3.0):
    """Rows of empirical P(S > u) against the band from ``h_bound``.

    A row passes when |sqrt(p) - sqrt(Phi^c(u))| <= sqrt(2) h + z sqrt((1 - p) / (4 reps)),
    the binomial standard error carried to the square-root scale by the delta
    method (sd(sqrt(p)) = sqrt(p(1-p)/reps) / (2 sqrt(p))).
    """
    v = np.asarray(getattr(values, "values", values), dtype=float)
    reps = v.size
    rows = []
    for u in u_grid:
        base = tail_bounds_from_hellinger(h_bound, u)
        p = float(np.count_nonzero(v > u)) / reps
        se = math.sqrt(max(1.0 - p, 1.0 / reps) / (4.0 * reps))
        slack = math.sqrt(2.0) * h_bound + z * se
        ok = abs(math.sqrt(p) - math.sqrt(base.phi_c)) <= slack
        rows.append(TailRow(base.u, base.phi_c, base.lower_bound, base.upper_bound,
                            base.two_sided_bound, p, ok, slack))
    return rows


def band_widths(h: float, u: float) -> float:
    row = tail_bounds_from_hellinger(h, u)
    return row.upper_bound - row.lower_bound


def rows_to_csv(rows, comment: Optional[str] = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow(r.csv_fields())
    if comment:
        buf.write(f"# {comment}\n")
    return buf.getvalue()
