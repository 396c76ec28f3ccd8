"""Gaussian-mixture densities, OU interpolation and Hellinger distance to N(0, 1).

Mixtures are closed under x -> e^{-t} x + sqrt(1 - e^{-2t}) Z, so the interpolant
Z_t of a smoothed sample density, its score rho = f'/f and its second-order
score I = f''/f are all exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .dists import DistributionSpec
from .errors import ConfigError, DomainError, NumericError
from .numerics import GRID_HI, GRID_LO, GRID_POINTS, SQRT_2PI, RngStream, trapezoid_integrate
from .ustat import map_blocks

DENSITY_FLOOR = 1e-300
MIN_KDE_SAMPLES = 100
BIN_FRACTION = 20  # linear-binning cells per bandwidth
_CHUNK = 4_000_000  # points x components per evaluation chunk


@dataclass(frozen=True)
class GaussianMixture:
    weights: np.ndarray
    means: np.ndarray
    stddevs: np.ndarray

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        m = np.atleast_1d(np.asarray(self.means, dtype=float))
        s = np.broadcast_to(np.asarray(self.stddevs, dtype=float), m.shape).copy()
        if not (w.shape == m.shape and w.size > 0):
            raise ConfigError("weights and means must be nonempty and of equal length")
        if np.any(w < 0) or not np.all(np.isfinite(w)) or not np.all(np.isfinite(m)):
            raise ConfigError("mixture weights must be nonnegative and parameters finite")
        if np.any(s <= 0) or not np.all(np.isfinite(s)):
            raise ConfigError("mixture stddevs must be positive")
        total = math.fsum(w)
        if abs(total - 1.0) > 1e-9:
            raise ConfigError(f"mixture weights must sum to 1, got {total}")
        object.__setattr__(self, "weights", w / total)
        object.__setattr__(self, "means", m)
        object.__setattr__(self, "stddevs", s)

    @classmethod
    def normal(cls, mean=0.0, sd=1.0):
        return cls(np.array([1.0]), np.array([mean]), np.array([sd]))

    @property
    def size(self) -> int:
        return self.weights.size

    def _chunks(self, x):
        step = max(1, _CHUNK // self.size)
        for i in range(0, x.size, step):
            yield slice(i, i + step), x[i:i + step, None]

    def derivatives(self, x):
        """(f, f', f'') at x."""
        xa = np.atleast_1d(np.asarray(x, dtype=float)).ravel()
        out = np.empty((3, xa.size))
        c = self.weights / (self.stddevs * SQRT_2PI)
        inv2 = 1.0 / self.stddevs**2
        for sl, xc in self._chunks(xa):
            d = xc - self.means
            phi = c * np.exp(-0.5 * d * d * inv2)
            g = d * inv2
            out[0, sl] = phi.sum(axis=1)
            out[1, sl] = -(phi * g).sum(axis=1)
            out[2, sl] = (phi * (g * g - inv2)).sum(axis=1)
        if np.ndim(x) == 0:
            return tuple(float(v[0]) for v in out)
        shape = np.shape(x)
        return tuple(v.reshape(shape) for v in out)

    def pdf(self, x):
        return self.derivatives(x)[0]

    def log_scores(self, x):
        """(log f, f'/f, f''/f) by responsibilities, stable far in the tails."""
        xa = np.atleast_1d(np.asarray(x, dtype=float)).ravel()
        logf = np.empty(xa.size)
        rho = np.empty(xa.size)
        i2 = np.empty(xa.size)
        lc = np.log(self.weights, where=self.weights > 0, out=np.full(self.size, -np.inf)) \
            - np.log(self.stddevs * SQRT_2PI)
        inv2 = 1.0 / self.stddevs**2
        for sl, xc in self._chunks(xa):
            d = xc - self.means
            lp = lc - 0.5 * d * d * inv2
            mx = lp.max(axis=1, keepdims=True)
            r = np.exp(lp - mx)
            z = r.sum(axis=1, keepdims=True)
            r /= z
            g = d * inv2
            logf[sl] = (mx + np.log(z))[:, 0]
            rho[sl] = -(r * g).sum(axis=1)
            i2[sl] = (r * (g * g - inv2)).sum(axis=1)
        shape = np.shape(x)
        return logf.reshape(shape), rho.reshape(shape), i2.reshape(shape)

    def sample(self, size: int, gen: np.random.Generator) -> np.ndarray:
        idx = gen.choice(self.size, size=size, p=self.weights)
        return self.means[idx] + self.stddevs[idx] * gen.standard_normal(size)


def silverman_bandwidth(samples) -> float:
    x = np.asarray(samples, dtype=float)
    q75, q25 = np.percentile(x, [75, 25])
    spread = min(x.std(ddof=1), (q75 - q25) / 1.34)
    if not spread > 0:
        spread = x.std(ddof=1)
    if not spread > 0:
        raise DomainError("cannot choose a bandwidth for constant samples")
    return float(0.9 * spread * x.size ** -0.2)


def kde_mixture(samples, bandwidth: Union[float, str] = "auto", binned: bool = True) -> GaussianMixture:
    """Gaussian KDE as a mixture with common stddev ``bandwidth``.

    With ``binned`` the atoms are linearly binned onto a grid of spacing
    bandwidth/20 first; this preserves the sample mean exactly and changes
    the density by O((spacing/bandwidth)^2).
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < MIN_KDE_SAMPLES:
        raise DomainError(f"KDE needs at least {MIN_KDE_SAMPLES} samples, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise DomainError("samples must be finite")
    h = silverman_bandwidth(x) if bandwidth == "auto" else float(bandwidth)
    if not h > 0:
        raise ConfigError(f"bandwidth must be positive, got {bandwidth!r}")
    if not binned or x.max() == x.min():
        vals, counts = np.unique(x, return_counts=True)
        return GaussianMixture(counts / x.size, vals, np.full(vals.size, h))
    delta = h / BIN_FRACTION
    lo = x.min()
    pos = (x - lo) / delta
    j = np.floor(pos).astype(np.int64)
    frac = pos - j
    nb = int(j.max()) + 2
    w = np.bincount(j, 1.0 - frac, nb) + np.bincount(j + 1, frac, nb)
    keep = w > 0
    centers = lo + delta * np.arange(nb)
    return GaussianMixture(w[keep] / x.size, centers[keep], np.full(int(keep.sum()), h))


def ou_interpolate(model: GaussianMixture, t: float) -> GaussianMixture:
    """Law of e^{-t} S + sqrt(1 - e^{-2t}) Z for S ~ model."""
    if not t >= 0:
        raise DomainError(f"t must be nonnegative, got {t}")
    e2 = math.exp(-2 * t)
    sd = np.sqrt(e2 * model.stddevs**2 - math.expm1(-2 * t))
    return GaussianMixture(model.weights, math.exp(-t) * model.means, sd)


def scores_of(model: GaussianMixture, x):
    """{'rho': f'/f, 'i2': f''/f}; raises where the density underflows."""
    logf, rho, i2 = model.log_scores(x)
    bad = np.asarray(logf) < math.log(DENSITY_FLOOR)
    if np.any(bad):
        x0 = float(np.atleast_1d(x)[np.argmax(np.atleast_1d(bad))])
        raise NumericError(f"mixture density underflows at x={x0}", x=x0)
    if np.ndim(x) == 0:
        return {"rho": float(rho), "i2": float(i2)}
    return {"rho": rho, "i2": i2}


@dataclass(frozen=True)
class HellingerEstimate:
    value: float
    grid: dict
    mc_stderr_budget: float
    bandwidth: Optional[float] = None
    samples: Optional[int] = None

    @property
    def upper(self) -> float:
        return self.value + self.mc_stderr_budget


def _grid_dict(grid):
    lo, hi, points = grid
    return {"lo": float(lo), "hi": float(hi), "points": int(points)}


def hellinger_sq(model: GaussianMixture, grid=(GRID_LO, GRID_HI, GRID_POINTS)) -> float:
    lo, hi, points = grid
    x = np.linspace(lo, hi, int(points))
    f = np.maximum(model.pdf(x), DENSITY_FLOOR)
    phi = np.maximum(np.exp(-0.5 * x * x) / SQRT_2PI, DENSITY_FLOOR)
    y = 0.5 * (np.sqrt(f) - np.sqrt(phi)) ** 2
    val = trapezoid_integrate(lambda _: y, lo, hi, int(points))  # same nodes as x
    return min(max(val, 0.0), 1.0)


def hellinger_distance(model: GaussianMixture, grid=(GRID_LO, GRID_HI, GRID_POINTS),
                       budget: float = 0.0, bandwidth: Optional[float] = None) -> HellingerEstimate:
    """H(model, N(0,1)) = (1/2 int (sqrt f - sqrt phi)^2)^{1/2} on a trapezoid grid."""
    h = math.sqrt(hellinger_sq(model, grid))
    return HellingerEstimate(h, _grid_dict(grid), float(budget), bandwidth)


def hellinger_from_samples(samples, bandwidth: Union[float, str] = "auto",
                           grid=(GRID_LO, GRID_HI, GRID_POINTS)) -> HellingerEstimate:
    """KDE path. The budget adds the spread between bandwidths h and 1.5 h to
    the noise floor sqrt(1 / (16 sqrt(pi) m h)) of a KDE with m atoms."""
    x = np.asarray(samples, dtype=float).ravel()
    h = float(silverman_bandwidth(x) if bandwidth == "auto" else bandwidth)
    main = math.sqrt(hellinger_sq(kde_mixture(x, h), grid))
    wide = math.sqrt(hellinger_sq(kde_mixture(x, 1.5 * h), grid))
    noise = math.sqrt(1.0 / (16.0 * math.sqrt(math.pi) * x.size * h))
    return HellingerEstimate(main, _grid_dict(grid), abs(main - wide) + noise, h, x.size)


def normal_hellinger(mean: float = 0.0, sd: float = 1.0) -> float:
    """Closed-form H(N(mean, sd^2), N(0, 1))."""
    h2 = 1.0 - math.sqrt(2 * sd / (1 + sd * sd)) * math.exp(-mean * mean / (4 * (1 + sd * sd)))
    return math.sqrt(max(h2, 0.0))


def delta_t_integrand(model: GaussianMixture, t: float,
                      grid=(GRID_LO, GRID_HI, GRID_POINTS)) -> float:
    """|| I_t - (x^2 - 1) + x (rho_t + x) ||_2 under the law of Z_t."""
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    zt = ou_interpolate(model, t)
    lo, hi, points = grid
    x = np.linspace(lo, hi, int(points))
    logf, rho, i2 = zt.log_scores(x)
    f = np.exp(logf)
    g = i2 - (x * x - 1) + x * (rho + x)
    val = trapezoid_integrate(lambda _: np.where(f > DENSITY_FLOOR, f * g * g, 0.0), lo, hi, int(points))
    return math.sqrt(max(val, 0.0))


def delta_integral(model: GaussianMixture, t_min=1e-4, t_max=40.0, points=400,
                   grid=(GRID_LO, GRID_HI, GRID_POINTS)) -> float:
    """(1/sqrt 2) int_0^inf Delta_t dt on a log-spaced grid (Delta taken flat on [0, t_min])."""
    ts = np.geomspace(t_min, t_max, points)
    vals = np.array([delta_t_integrand(model, float(t), grid) for t in ts])
    total = vals[0] * t_min + math.fsum(0.5 * (vals[1:] + vals[:-1]) * np.diff(ts))
    return total / math.sqrt(2.0)


@dataclass(frozen=True)
class BinResidual:
    order: int  # 1 for rho, 2 for I
    t: float
    bin: int
    mean_diff: float
    stderr: float
    passed: bool


def _standardized_source(source):
    """(sampler(size, gen), rho_S, I_S, mixture-of-S-for-Z_t(t))."""
    if isinstance(source, DistributionSpec):
        mo = source.moments
        mu, sd = mo.mean, math.sqrt(mo.var)
        r = source.replacement_rule
        nodes = (r.nodes - mu) / sd
        sampler = lambda size, gen: (source.sample_matrix((size,), gen) - mu) / sd
        rho = lambda s: sd * source.score(mu + sd * s)
        i2 = lambda s: sd * sd * source.score2(mu + sd * s)

        def zt_model(t):
            v = -math.expm1(-2 * t)
            return GaussianMixture(r.weights, math.exp(-t) * nodes, np.full(nodes.size, math.sqrt(v)))

        return sampler, rho, i2, zt_model
    if isinstance(source, GaussianMixture):
        sampler = lambda size, gen: source.sample(size, gen)
        rho = lambda s: source.log_scores(s)[1]
        i2 = lambda s: source.log_scores(s)[2]
        return sampler, rho, i2, lambda t: ou_interpolate(source, t)
    if source == "normal":
        return _standardized_source(GaussianMixture.normal())
    raise ConfigError(f"unsupported score source {source!r}")


def verify_ou_score_identities(source, t: float, reps: int, rng: RngStream, bins: int = 20):
    """Binned check of rho_{Z_t}(Z_t) = e^t E[rho_S(S) | Z_t] and
    I_{Z_t}(Z_t) = e^{2t} E[I_S(S) | Z_t].

    Within each quantile bin of Z_t the paired difference of the two sides has
    mean zero; a bin passes when its mean is within 4 standard errors.
    """
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    sampler, rho_s, i_s, zt_model = _standardized_source(source)
    model = zt_model(t)
    a, b = math.exp(-t), math.sqrt(-math.expm1(-2 * t))

    def block(size, gen):
        S = sampler(size, gen)
        Zt = a * S + b * gen.standard_normal(size)
        _, rz, iz = model.log_scores(Zt)
        return Zt, math.exp(t) * rho_s(S) - rz, math.exp(2 * t) * i_s(S) - iz

    parts = map_blocks(block, reps, rng)
    Zt = np.concatenate([p[0] for p in parts])
    diffs = {1: np.concatenate([p[1] for p in parts]), 2: np.concatenate([p[2] for p in parts])}
    edges = np.quantile(Zt, np.linspace(0, 1, bins + 1))
    label = np.clip(np.searchsorted(edges, Zt, side="right") - 1, 0, bins - 1)
    out = []
    for order, d in diffs.items():
        for k in range(bins):
            dk = d[label == k]
            m = float(dk.mean())
            se = float(dk.std(ddof=1) / math.sqrt(dk.size))
            out.append(BinResidual(order, float(t), k, m, se, abs(m) <= 4 * se))
    return out
