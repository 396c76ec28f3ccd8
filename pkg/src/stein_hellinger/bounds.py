"""Explicit Hellinger bounds for standardized U-statistics and their constants.

The canonical contract is sqrt(2) H(U_n, Z) <= beta + beta0 for any D in
(0, sqrt(n)); the five-term H-scale display at D = 1 is a derived, slightly
looser report.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

from .dists import DistributionSpec
from .errors import ConfigError, DomainError
from .numerics import RngStream

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class BoundInputs:
    n: int
    D: float
    R: float
    u4sq: float  # ||u(X1, X2)||_4^2
    rho_l2: float = 0.0
    i_l2: float = 0.0
    urho_l2: float = 0.0
    source: str = "given"

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 2:
            raise ConfigError(f"n must be an integer >= 2, got {self.n!r}")
        if not self.R > 0 or not self.u4sq > 0:
            raise ConfigError("R and u4sq must be positive")
        for name in ("D", "R", "u4sq", "rho_l2", "i_l2", "urho_l2"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ConfigError(f"{name} must be finite and nonnegative, got {v!r}")
        if not 0 < self.D < math.sqrt(self.n):
            raise DomainError(f"D must lie in (0, sqrt(n)) = (0, {math.sqrt(self.n):.6g}), got {self.D}")


@dataclass(frozen=True)
class BoundReport:
    n: int
    kappa: float
    alpha: float
    Bn: float
    beta: float
    beta0: float
    total: float
    terms: dict = field(default_factory=dict)
    inputs: Optional[BoundInputs] = None

    def to_dict(self) -> dict:
        out = {"n": self.n, "kappa": self.kappa, "alpha": self.alpha, "Bn": self.Bn,
               "beta": self.beta, "beta0": self.beta0, "total": self.total,
               "terms": dict(self.terms)}
        if self.inputs is not None:
            out["inputs"] = asdict(self.inputs)
        return out


def alpha_const() -> float:
    """e^{19/300} pi^{1/4}."""
    return math.exp(19.0 / 300.0) * math.pi**0.25


def kappa_of(inp: BoundInputs) -> float:
    return inp.R**2 / (inp.D * math.sqrt(inp.n))


def Bn_value(n: int, u4sq: float) -> float:
    if n < 2:
        raise DomainError("B_n needs n >= 2")
    return (8.0 / (n - 1) + (16.0 + 2.0 * SQRT2) / math.sqrt(n - 1)) * u4sq


def Bn_of(inp: BoundInputs) -> float:
    return Bn_value(inp.n, inp.u4sq)


def beta_terms(inp: BoundInputs) -> dict:
    n, D, R = inp.n, inp.D, inp.R
    a = alpha_const()
    kap = kappa_of(inp)
    e2k = math.exp(2 * kap) if 2 * kap < 709 else math.inf  # D -> 0 blows the bound up
    rn = math.sqrt(n)
    return {
        "beta_small_t": 3 * R**4 * a * e2k / rn * (math.sqrt(1 - D / rn) / D + math.log(4 * rn / D) / (2 * rn)),
        "beta_odd": 6 * a * R**3 * e2k / ((n * kap) ** 0.75 * math.sqrt(D) * math.sqrt(n - 1)),
        "beta_even": 2 * math.sqrt(3) * a * R**3 * e2k / (n**0.75 * math.sqrt(D)),
        "beta_Bn": Bn_of(inp) * math.log(n / D**2) / (2 * SQRT2),
    }


def beta_of(inp: BoundInputs) -> float:
    return math.fsum(beta_terms(inp).values())


def beta0_terms(inp: BoundInputs) -> dict:
    rn = math.sqrt(inp.n)
    r = inp.D / (rn - inp.D)
    return {
        "beta0_log": -0.5 * math.log1p(-inp.D / rn) * (1 + inp.urho_l2),
        "beta0_info": r * inp.i_l2,
        "beta0_rho": r**1.5 * inp.rho_l2 / 3.0,
    }


def beta0_of(inp: BoundInputs) -> float:
    return math.fsum(beta0_terms(inp).values())


def bound_report(inp: BoundInputs) -> BoundReport:
    bt, b0 = beta_terms(inp), beta0_terms(inp)
    beta, beta0 = math.fsum(bt.values()), math.fsum(b0.values())
    return BoundReport(inp.n, kappa_of(inp), alpha_const(), Bn_of(inp), beta, beta0,
                       beta + beta0, {**bt, **b0}, inp)


def simplified_bound_terms(n: int, R: float, u4sq: float, rho_l2=0.0, i_l2=0.0, urho_l2=0.0) -> dict:
    """The five-term bound on H (not sqrt(2) H) at D = 1."""
    if n < 2:
        raise DomainError("need n >= 2")
    a = alpha_const()
    rn = math.sqrt(n)
    return {
        "R_terms": 3 * a * R**3 / math.sqrt(2 * n)
        * (R + R * math.log(4 * rn) / (2 * rn) + 4 / n**0.25) * math.exp(2 * R * R / rn),
        "Bn_term": math.log(n) / (SQRT2 * math.sqrt(n - 1)) * u4sq
        * (16 + 2 * SQRT2 + 8 / math.sqrt(n - 1)),
        "log_term": -math.log1p(-1 / rn) * (1 + urho_l2) / (2 * SQRT2),
        "info_term": i_l2 / (SQRT2 * (rn - 1)),
        "rho_term": rho_l2 / (3 * SQRT2 * (rn - 1) ** 1.5),
    }


def simplified_bound(inp: BoundInputs, check: bool = True) -> float:
    """Five-term H-scale display; with ``check`` it must dominate (beta + beta0)/sqrt(2).

    The display relaxes the D = 1 instance of beta + beta0 (the B_n term by a
    factor 2 sqrt(2); the R-terms need R >= 1), so the check runs only for R >= 1.
    """
    val = math.fsum(simplified_bound_terms(inp.n, inp.R, inp.u4sq, inp.rho_l2, inp.i_l2,
                                        inp.urho_l2).values())
    if check and inp.R >= 1:
        exact = bound_report(BoundInputs(inp.n, 1.0, inp.R, inp.u4sq, inp.rho_l2, inp.i_l2,
                                         inp.urho_l2)).total
        if SQRT2 * val < exact * (1 - 1e-9):
            raise ArithmeticError(f"display {SQRT2 * val:.6g} below beta + beta0 = {exact:.6g}")
    return val


def asymptotic_constant(u4sq: float) -> float:
    """Leading constant c in H <~ c log(n)/sqrt(n)."""
    return (8 * SQRT2 + 2) * u4sq


def general_b1_term(D: float, rho_l2: float, i_l2: float, srho_l2: float) -> float:
    """Small-time block of the general bound, for 0 < D < 1."""
    if not 0 < D < 1:
        raise DomainError(f"D must lie in (0, 1), got {D}")
    x = math.sqrt(D / (1 - D))
    return (-0.5 * math.log1p(-D) * (1 + srho_l2) + rho_l2 * (x - math.atan(x))
            + D / (1 - D) * i_l2)


def second_order_score_product(rho1_l2: float, rho2_l2: float) -> float:
    """||I_S||_2 <= ||rho_{S1}||_2 ||rho_{S2}||_2 for S = S1 + S2 independent."""
    if rho1_l2 < 0 or rho2_l2 < 0:
        raise DomainError("norms must be nonnegative")
    return rho1_l2 * rho2_l2


@dataclass(frozen=True)
class ChaosScoreBounds:
    rho_bound: float
    i_bound: float
    urho_bound: float
    sigma: float

    def standardized(self) -> "ChaosScoreBounds":
        """Bounds for U_n / sigma: the scores scale by sigma and sigma^2."""
        s = self.sigma
        return ChaosScoreBounds(s * self.rho_bound, s * s * self.i_bound, self.urho_bound, 1.0)


def chaos_score_norm_bounds(dist: DistributionSpec, n: int) -> ChaosScoreBounds:
    """Analytic bounds on ||t1||_2, ||t2||_2 and ||U_n t1||_2 for the unscaled chaos statistic."""
    if n < 3:
        raise DomainError("need n >= 3")
    a = dist.a
    if not a > 0:
        raise DomainError("the chaos score bounds need a > 0")
    m = dist.moments
    r2, r4, xr4 = m.score_l2**2, m.score_l4**4, m.xscore_l4**4
    rho = math.sqrt(2 * r2 / a**2 * (1 + m.x_l2**2 / a**2))
    n1 = n - 1
    i = n1 * math.sqrt(3 * n**2 / (n1**4 * a**6) * r2 + 3 * n**2 / (n1**4 * a**4) * r4
                       + 144 / (n**2 * a**4) * r4 + 16 / (n1**4 * a**8) * xr4)
    urho = ((72 / a**4 * r4 + 8 * n**2 / (n1**4 * a**8) * xr4) ** 0.25
            * (math.sqrt(12) * m.mean * m.central_l4
               + (7 * m.abs8_central**2 + m.sq_dev_l4) / math.sqrt(n)))
    return ChaosScoreBounds(rho, i, urho, 2 * m.mean * math.sqrt(m.var))


def inputs_for_chaos(dist: DistributionSpec, n: int, D: float = 1.0, source: str = "analytic",
                     reps: int = 20000, rng: Optional[RngStream] = None, R: Optional[float] = None) -> BoundInputs:
    """Bound inputs for the standardized chaos statistic."""
    from .ustat import chaos_kernel, kernel_l4_sq, score_norm_estimates, standardize

    _, std = standardize(chaos_kernel(dist, R), dist)
    u4sq = kernel_l4_sq(dist, std)
    if source == "analytic":
        b = chaos_score_norm_bounds(dist, n).standardized()
        norms = (b.rho_bound, b.i_bound, b.urho_bound)
    elif source == "mc":
        est = score_norm_estimates(dist, std, n, reps, rng or RngStream(0))
        norms = (est.rho_l2, est.i_l2, est.urho_l2)
    else:
        raise ConfigError(f"bound_source must be 'analytic' or 'mc', got {source!r}")
    return BoundInputs(n, float(D), std.bound_R, u4sq, *norms, source=source)


def scan_D(inp: BoundInputs, grid: Sequence[float]):
    """(D, beta, beta0, total) over admissible D values."""
    rows = []
    for D in grid:
        if not 0 < D < math.sqrt(inp.n):
            continue
        r = bound_report(BoundInputs(inp.n, float(D), inp.R, inp.u4sq, inp.rho_l2, inp.i_l2,
                                     inp.urho_l2, inp.source))
        rows.append((float(D), r.beta, r.beta0, r.total))
    return rows


def rate_profile(ns: Sequence[int], R: float, u4sq: float, norms=(1.0, 1.0, 1.0), D: float = 1.0):
    """total(n) sqrt(n) / log(n) for each n."""
    out = []
    for n in ns:
        total = bound_report(BoundInputs(int(n), D, R, u4sq, *norms)).total
        out.append(total * math.sqrt(n) / math.log(n))
    return out


def _log_factorial(k: int) -> float:
    return math.log(math.factorial(k)) if k <= 30 else math.lgamma(k + 1)


@dataclass(frozen=True)
class StirlingRow:
    m: int
    parity: str
    lhs: float
    rhs: float
    holds: bool


def stirling_checks(m_max: int = 30):
    """sqrt((2m+1)!) >= sqrt(2m+1) 2^m m! / (m^{1/4} alpha) and
    sqrt((2m)!) >= 2^m m! / (m^{1/4} alpha) for m = 1..m_max, compared in logs."""
    if not 1 <= m_max <= 30:
        raise ConfigError(f"m_max must lie in [1, 30], got {m_max}")
    la = math.log(alpha_const())
    rows = []
    for m in range(1, m_max + 1):
        common = m * math.log(2) + _log_factorial(m) - 0.25 * math.log(m) - la
        for parity, k, extra in (("odd", 2 * m + 1, 0.5 * math.log(2 * m + 1)), ("even", 2 * m, 0.0)):
            lhs = 0.5 * _log_factorial(k)
            rhs = common + extra
            rows.append(StirlingRow(m, parity, math.exp(lhs), math.exp(rhs), lhs >= rhs))
    return rows
