"""Exchangeable pairs for U-statistics and the Hermite sum built from them.

X^t replaces coordinate I ~ Unif([n]) of X by an independent copy X'_I, and

    F(X^t, X) = (g(X^t) - g(X)) / 2 + g1(X^t) - g1(X)

with g = U_n and g1 the Hajek projection. All conditional expectations here are
given the full data X (averaging exactly over I and integrating X' by
quadrature); since E[. | U_n] = E[E[. | X] | U_n], L2 norms computed this way
dominate the ones conditioned on U_n.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from math import comb
from typing import Callable, Optional, Sequence

import numpy as np

from .dists import DistributionSpec
from .errors import ConfigError, DomainError
from .hermite import HermiteSeries, hermite_all
from .numerics import RngStream
from .ustat import KernelSpec, map_blocks, standardize, u_value, u_values

MAX_K = 12  # for the reported pair moments
MAX_TRUNCATION = 30
DEFAULT_K = 20


@dataclass(frozen=True)
class PairDraw:
    data: np.ndarray
    index_I: int  # 1-based
    replacement: float
    data_t: np.ndarray
    f_value: float
    delta_g: float
    delta_g1: float


def g1_values(kernel: KernelSpec, data) -> np.ndarray:
    data = np.asarray(data, dtype=float)
    n = data.shape[-1]
    return (kernel.u1(data) - kernel.mean_u2).sum(axis=-1) / math.sqrt(n)


def g1_value(dist: DistributionSpec, kernel: KernelSpec, data) -> float:
    """g1(X) = n^{-1/2} sum_i (E[u(X_i, X') | X_i] - E u)."""
    data = np.asarray(data, dtype=float)
    if data.size < 2:
        raise DomainError("need n >= 2")
    return float(g1_values(kernel, data))


def pair_function(dist: DistributionSpec, kernel: KernelSpec, data_t, data) -> float:
    """F(data_t, data) evaluated from its definition."""
    dg = u_value(kernel, data_t) - u_value(kernel, data)
    dg1 = g1_value(dist, kernel, data_t) - g1_value(dist, kernel, data)
    return 0.5 * dg + dg1


def draw_pair(dist: DistributionSpec, kernel: KernelSpec, data, rng: RngStream) -> PairDraw:
    data = np.asarray(data, dtype=float)
    n = data.size
    if n < 2:
        raise DomainError("need n >= 2")
    gen = rng.generator()
    i = int(gen.integers(n))
    x_new = float(dist.sample_matrix((1,), gen)[0])
    return make_pair(dist, kernel, data, i + 1, x_new)


def make_pair(dist, kernel, data, index_I: int, replacement: float) -> PairDraw:
    data = np.asarray(data, dtype=float)
    data_t = data.copy()
    data_t[index_I - 1] = replacement
    dg = u_value(kernel, data_t) - u_value(kernel, data)
    dg1 = g1_value(dist, kernel, data_t) - g1_value(dist, kernel, data)
    return PairDraw(data, index_I, float(replacement), data_t, 0.5 * dg + dg1, dg, dg1)


def _chaos_coeffs(kernel: KernelSpec, data):
    """Delta g = alpha_I d and Delta g1 = gamma d with d = X' - X_I."""
    n = data.shape[-1]
    c = kernel.scale
    Sm = data.sum(axis=-1, keepdims=True) - data
    alpha = 2.0 * c * Sm / (math.sqrt(n) * (n - 1))
    gamma = c * kernel.mu / math.sqrt(n)
    return alpha, gamma


def _chaos_moments(dist: DistributionSpec, kernel: KernelSpec, data, kmax: int):
    alpha, gamma = _chaos_coeffs(kernel, data)
    cm = dist.central_moments(kmax)
    delta = dist.moments.mean - data  # X' - X_I = (X' - mu) + delta
    dpow = [np.ones_like(delta)]
    for _ in range(kmax):
        dpow.append(dpow[-1] * delta)
    lead = alpha / 2.0 + gamma
    out = np.empty(data.shape[:-1] + (kmax,))
    apow = np.ones_like(alpha)
    for k in range(1, kmax + 1):
        ed = sum(comb(k, j) * cm[j] * dpow[k - j] for j in range(k + 1))
        out[..., k - 1] = (lead * apow * ed).mean(axis=-1)
        apow = apow * alpha
    return out


def _generic_tables(dist: DistributionSpec, kernel: KernelSpec, x):
    """Delta g and F on (I, node) for one dataset, plus the node weights."""
    n = x.size
    r = dist.replacement_rule
    y, w = r.nodes, r.weights
    Kq = kernel.evaluate(y[:, None], x[None, :])  # u(y_q, X_j)
    M = kernel.evaluate(x[:, None], x[None, :])
    rowM = M.sum(axis=1) - np.diag(M)
    c0 = 2.0 / (math.sqrt(n) * (n - 1))
    dg = c0 * (Kq.sum(axis=1)[None, :] - Kq.T - rowM[:, None])  # (I, q)
    dg1 = (kernel.u1(y)[None, :] - kernel.u1(x)[:, None]) / math.sqrt(n)
    return dg, 0.5 * dg + dg1, w


def _generic_moments(dist, kernel, data, kmax):
    data2 = np.atleast_2d(data)
    out = np.empty((data2.shape[0], kmax))
    for r, x in enumerate(data2):
        dg, F, w = _generic_tables(dist, kernel, x)
        prod = F.copy()
        for k in range(1, kmax + 1):
            out[r, k - 1] = (prod @ w).mean()
            prod *= dg
    return out.reshape(np.shape(data)[:-1] + (kmax,))


def pair_moments(dist: DistributionSpec, kernel: KernelSpec, data, kmax: int,
                 method: str = "auto") -> np.ndarray:
    """m_k = E[F (Delta g)^{k-1} | X] for k = 1..kmax along the last axis.

    ``method`` is "closed" (chaos kernel only), "quadrature" or "auto".
    """
    data = np.asarray(data, dtype=float)
    if data.shape[-1] < 2:
        raise DomainError("need n >= 2")
    if method == "auto":
        method = "closed" if kernel.kind == "chaos" else "quadrature"
    if method == "closed":
        if kernel.kind != "chaos":
            raise ConfigError("closed-form pair moments need the chaos kernel")
        return _chaos_moments(dist, kernel, data, kmax)
    return _generic_moments(dist, kernel, data, kmax)


def conditional_F_mean(dist, kernel, data, method="auto"):
    """E[F | X]; equals -U_n / n exactly."""
    m = pair_moments(dist, kernel, data, 1, method)[..., 0]
    return float(m) if np.ndim(m) == 0 else m


def conditional_FdeltaG_mean(dist, kernel, data, method="auto"):
    """(n/2) E[F (g(X^t) - g(X)) | X]; close to 1 for the standardized statistic."""
    n = np.shape(data)[-1]
    m = 0.5 * n * pair_moments(dist, kernel, data, 2, method)[..., 1]
    return float(m) if np.ndim(m) == 0 else m


def conditional_higher_moment(dist, kernel, data, k: int, method="auto"):
    """n E[F (g(X^t) - g(X))^{k-1} | X] for 3 <= k <= 12."""
    if not 3 <= k <= MAX_K:
        raise ConfigError(f"k must lie in [3, {MAX_K}], got {k}")
    n = np.shape(data)[-1]
    m = n * pair_moments(dist, kernel, data, k, method)[..., k - 1]
    return float(m) if np.ndim(m) == 0 else m


def admissible_t(n: int, D: float = 1.0) -> float:
    """Smallest t with e^{-2t} <= 1 - D / sqrt(n)."""
    if not 0 < D < math.sqrt(n):
        raise DomainError(f"D must lie in (0, sqrt(n)), got {D}")
    return -0.5 * math.log1p(-D / math.sqrt(n))


def _sup_bounds(dist, kernel, data):
    """Almost-sure bounds on |F| and |Delta g| given X (over I and X')."""
    data = np.atleast_2d(np.asarray(data, dtype=float))
    if kernel.kind == "chaos":
        alpha, gamma = _chaos_coeffs(kernel, data)
        dmax = np.maximum(dist.b - data, data - dist.a)
        fsup = (np.abs(alpha / 2 + gamma) * dmax).max(axis=-1)
        gsup = (np.abs(alpha) * dmax).max(axis=-1)
        return fsup, gsup
    n = data.shape[-1]
    R = kernel.bound_R
    full = np.full(data.shape[0], 4.0 * R / math.sqrt(n))
    return full, full


def _log_tail_sum(log_r, K, log_pref):
    """log sum_{k>K} exp(log_pref + k log_r - lgamma(k+1)/2)."""
    terms = []
    k = K + 1
    while True:
        lt = log_pref + k * log_r - 0.5 * math.lgamma(k + 1)
        terms.append(lt)
        if k > K + 5 and 2 * log_r < math.log(k + 1) and lt < max(terms) - 40:
            break
        k += 1
    mx = max(terms)
    return mx + math.log(math.fsum(math.exp(t - mx) for t in terms))


def tau_tail_bounds(dist, kernel, data, t, s, K) -> np.ndarray:
    """L2 bound on the Hermite terms k > K of tau_tilde, per dataset."""
    fsup, gsup = _sup_bounds(dist, kernel, data)
    out = np.zeros_like(fsup)
    if s == 0:
        return out
    v = -math.expm1(-2 * t)
    for i, (fs, gs) in enumerate(zip(fsup, gsup)):
        if fs == 0 or gs == 0:
            continue
        # |a_k| sqrt(k!) <= |s| e^{-kt} v^{-k/2} fs gs^{k-1} / sqrt(k!)
        log_r = -t - 0.5 * math.log(v) + math.log(gs)
        out[i] = math.exp(_log_tail_sum(log_r, K, math.log(abs(s) * fs / gs)))
    return out


def _tau_coefficients(m, t, s):
    K = m.shape[-1]
    v = -math.expm1(-2 * t)
    k = np.arange(1, K + 1)
    lf = np.array([math.lgamma(j + 1) for j in k])
    scale = np.exp(-k * t - 0.5 * k * math.log(v) - lf)
    return s * scale * m


def tau_series(dist, kernel, data, t: float, s: Optional[float] = None,
               K: int = DEFAULT_K, D: float = 1.0) -> HermiteSeries:
    """Hermite coefficients of tau_tilde_{t,s} for one dataset."""
    data = np.asarray(data, dtype=float)
    n = data.size
    s = float(n if s is None else s)
    _check_tau_args(n, t, K, D)
    m = pair_moments(dist, kernel, data, K)
    coef = _tau_coefficients(m, t, s)
    tail = float(tau_tail_bounds(dist, kernel, data, t, s, K)[0])
    return HermiteSeries(tuple(coef), tail)


def _check_tau_args(n, t, K, D):
    if not 1 <= K <= MAX_TRUNCATION:
        raise ConfigError(f"truncation K must lie in [1, {MAX_TRUNCATION}], got {K}")
    t0 = admissible_t(n, D)
    if not t >= t0 * (1 - 1e-12):
        raise DomainError(f"t = {t} is below the admissible threshold {t0:.6g}")


def tau_tilde(dist, kernel, data, t: float, s: Optional[float], z: float,
              K: int = DEFAULT_K, D: float = 1.0) -> dict:
    """Truncated Hermite sum at Gaussian point z, with an L2 tail bound."""
    series = tau_series(dist, kernel, data, t, s, K, D)
    return {"value": float(series(z)), "tail_bound": series.declared_tail_bound}


def geometric_majorant(n: int, R: float, t: float, kmin: int = 3, kmax: int = 64) -> float:
    """sum_{k=kmin}^{kmax} (3k / (2 sqrt((k-1)!))) (1 + sqrt(k/(n-1))) x^{k/2},
    x = 4 R^2 / ((e^{2t} - 1) n), followed by a geometric bound on k > kmax."""
    x = 4 * R * R / (math.expm1(2 * t) * n)
    logt = lambda k: (math.log(1.5 * k) - 0.5 * math.lgamma(k) + math.log1p(math.sqrt(k / (n - 1)))
                      + 0.5 * k * math.log(x))
    total = math.fsum(math.exp(logt(k)) for k in range(kmin, kmax + 1))
    ratio = math.exp(logt(kmax + 1) - logt(kmax))
    if ratio >= 1:
        return math.inf
    return total + math.exp(logt(kmax + 1)) / (1 - ratio)


@dataclass(frozen=True)
class PairMomentReport:
    n: int
    t: float
    c_t: float
    kappa: float
    claim1_residual: float
    claim2_l2: float
    claim2_bound_Bn: float
    higher_l2: dict
    higher_bounds: dict
    reps: int


def higher_moment_bound(k: int, n: int, R: float, c_t: float) -> float:
    if k % 2 == 0:
        return 2**k * 3 * c_t ** (k - 4) * R**4 / (2 * n)
    return 2**k * 3 * c_t ** (k - 3) * R**3 / (2 * n) * (1 + math.sqrt(k) / math.sqrt(n - 1))


def pair_moment_report(dist: DistributionSpec, kernel: KernelSpec, n: int, reps: int,
                       rng: RngStream, t: Optional[float] = None, ks: Sequence[int] = (3, 4, 5),
                       D: float = 1.0, u4sq: Optional[float] = None) -> PairMomentReport:
    """Monte Carlo check of the two pair-moment claims at time t."""
    from .bounds import Bn_value  # local: bounds imports nothing from here

    _, std = standardize(kernel, dist)
    t = admissible_t(n, D) if t is None else t
    R = std.bound_R
    kappa = R * R / (D * math.sqrt(n))
    c_t = math.sqrt(kappa * -math.expm1(-2 * t))
    kmax = max([2, *ks])
    if u4sq is None:
        from .ustat import kernel_l4_sq
        u4sq = kernel_l4_sq(dist, std)

    def block(size, gen):
        X = dist.sample_matrix((size, n), gen)
        m = pair_moments(dist, std, X, kmax)
        U = u_values(std, X)
        return np.abs(n * m[:, 0] + U).max(), 0.5 * n * m[:, 1] - 1.0, n * m

    parts = map_blocks(block, reps, rng)
    resid = max(p[0] for p in parts)
    dev = np.concatenate([p[1] for p in parts])
    nm = np.concatenate([p[2] for p in parts])
    higher = {k: float(np.sqrt(np.mean(nm[:, k - 1] ** 2))) for k in ks}
    bounds = {k: higher_moment_bound(k, n, R, c_t) for k in ks}
    return PairMomentReport(n, t, c_t, kappa, float(resid), float(np.sqrt(np.mean(dev**2))),
                            Bn_value(n, u4sq), higher, bounds, reps)


@dataclass(frozen=True)
class TestFunction:
    name: str
    fn: Callable = field(repr=False)
    sup: float


def _bump(z, width=4.0):
    z = np.asarray(z, dtype=float) / width
    inside = np.abs(z) < 1
    zc = np.where(inside, z, 0.0)
    return np.where(inside, np.exp(1.0 - 1.0 / (1.0 - zc * zc)), 0.0)


def default_test_functions():
    grid = np.linspace(-4, 4, 8001)
    shifted = lambda z: _bump(np.asarray(z) - 1.0, 2.0)
    zb = lambda z: np.asarray(z) * _bump(z)
    return [
        TestFunction("one", lambda z: np.ones_like(np.asarray(z, dtype=float)), 1.0),
        TestFunction("bump", _bump, 1.0),
        TestFunction("z_bump", zb, float(np.abs(zb(grid)).max())),
        TestFunction("shifted_bump", shifted, 1.0),
    ]


@dataclass(frozen=True)
class TauResidual:
    name: str
    t: float
    estimate: float
    stderr: float
    tail: float
    passed: bool


def verify_tau_zero_mean(dist, kernel, n: int, t, reps: int, rng: RngStream,
                         test_functions=None, s: Optional[float] = None,
                         K: int = DEFAULT_K, D: float = 1.0):
    """Monte Carlo E[tau_tilde * Psi(Z_t)] for each test function and each t.

    A residual passes when |estimate| <= 4 stderr + sup|Psi| * mean tail bound.
    """
    _, std = standardize(kernel, dist)
    ts = [float(t)] if np.ndim(t) == 0 else [float(x) for x in t]
    for tt in ts:
        _check_tau_args(n, tt, K, D)
    tfs = default_test_functions()[:3] if test_functions is None else list(test_functions)
    s = float(n if s is None else s)

    def block(size, gen):
        X = dist.sample_matrix((size, n), gen)
        Z = gen.standard_normal(size)
        U = u_values(std, X)
        m = pair_moments(dist, std, X, K)
        H = hermite_all(K, Z)[1:]
        out = []
        for tt in ts:
            coef = _tau_coefficients(m, tt, s)
            tau = np.einsum("rk,kr->r", coef, H)
            Zt = math.exp(-tt) * U + math.sqrt(-math.expm1(-2 * tt)) * Z
            tail = tau_tail_bounds(dist, std, X, tt, s, K)
            out.append((np.stack([tau * tf.fn(Zt) for tf in tfs]), tail))
        return out

    parts = map_blocks(block, reps, rng)
    residuals = []
    for j, tt in enumerate(ts):
        vals = np.concatenate([p[j][0] for p in parts], axis=1)
        tail = float(np.concatenate([p[j][1] for p in parts]).mean())
        for i, tf in enumerate(tfs):
            est = float(vals[i].mean())
            se = float(vals[i].std(ddof=1) / math.sqrt(reps)) if reps > 1 else math.inf
            allowed = 4 * se + tf.sup * tail
            residuals.append(TauResidual(tf.name, tt, est, se, tf.sup * tail,
                                         abs(est) <= allowed if s != 0 else est == 0.0))
    return residuals


def exchangeability_check(dist, kernel, n: int, reps: int, rng: RngStream):
    """Differences E[U^a (U^t)^b] - E[U^b (U^t)^a] with standard errors, a + b <= 3."""
    _, std = standardize(kernel, dist)

    def block(size, gen):
        X = dist.sample_matrix((size, n), gen)
        idx = gen.integers(n, size=size)
        Xt = X.copy()
        Xt[np.arange(size), idx] = dist.sample_matrix((size,), gen)
        return u_values(std, X), u_values(std, Xt)

    parts = map_blocks(block, reps, rng)
    U = np.concatenate([p[0] for p in parts])
    Ut = np.concatenate([p[1] for p in parts])
    rows = []
    for a, b in ((1, 0), (2, 0), (3, 0), (2, 1)):
        d = U**a * Ut**b - U**b * Ut**a
        rows.append(((a, b), float(d.mean()), float(d.std(ddof=1) / math.sqrt(reps))))
    return rows
