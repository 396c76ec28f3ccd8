"""Compactly supported input laws on [a, b] with a > 0.

Both families vanish together with their first derivative at the endpoints, so
f'/f and f''/f are valid first and second-order scores (integration by parts
leaves no boundary terms).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import integrate
from scipy.interpolate import PchipInterpolator
from scipy.special import betainc, betaln

from .errors import ConfigError, DomainError
from .numerics import QuadratureRule, RngStream, gauss_legendre

FAMILIES = ("shifted-beta", "raised-cosine-power")
INVERSE_CDF_KNOTS = 4097
REPLACEMENT_ORDER = 129


@dataclass(frozen=True)
class Moments:
    mean: float
    var: float
    m4: float  # E[X^4]
    x_l2: float  # ||X||_2
    central_l4: float  # ||X - mu||_4
    abs8_central: float  # ||X - mu||_8
    sq_dev_l4: float  # ||X^2 - mu^2||_4
    score_l2: float
    score_l4: float
    xscore_l4: float  # ||X rho(X)||_4
    score2_l2: float  # ||f''/f (X)||_2


@dataclass(frozen=True)
class DistributionSpec:
    family: str
    a: float
    b: float
    params: tuple  # (p, q) for shifted-beta, (m,) for raised-cosine-power

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if not (math.isfinite(self.a) and math.isfinite(self.b) and 0 < self.a < self.b):
            raise ConfigError(f"support must satisfy 0 < a < b, got [{self.a}, {self.b}]")
        params = tuple(float(p) for p in self.params)
        object.__setattr__(self, "params", params)
        if self.family == "shifted-beta":
            if len(params) != 2 or min(params) < 5:
                raise ConfigError(f"shifted-beta needs (p, q) with p, q >= 5, got {params}")
        elif len(params) != 1 or params[0] < 4:
            raise ConfigError(f"raised-cosine-power needs m >= 4, got {params}")

    @classmethod
    def shifted_beta(cls, p=5.0, q=5.0, a=1.0, b=2.0):
        return cls("shifted-beta", float(a), float(b), (p, q))

    @classmethod
    def raised_cosine(cls, m=4.0, a=1.0, b=2.0):
        return cls("raised-cosine-power", float(a), float(b), (m,))

    @classmethod
    def from_dict(cls, d: dict) -> "DistributionSpec":
        try:
            family = d["family"]
            a, b = d["support"]
            params = d.get("params", {})
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed distribution entry: {exc}") from None
        if family == "shifted-beta":
            return cls(family, float(a), float(b), (params.get("p", 5), params.get("q", 5)))
        if family == "raised-cosine-power":
            return cls(family, float(a), float(b), (params.get("m", 4),))
        raise ConfigError(f"unknown family {family!r}")

    def to_dict(self) -> dict:
        if self.family == "shifted-beta":
            params = {"p": self.params[0], "q": self.params[1]}
        else:
            params = {"m": self.params[0]}
        return {"family": self.family, "support": [self.a, self.b], "params": params}

    @property
    def width(self) -> float:
        return self.b - self.a

    def _unit(self, x):
        return (np.asarray(x, dtype=float) - self.a) / self.width

    @cached_property
    def _log_norm(self) -> float:
        if self.family == "shifted-beta":
            p, q = self.params
            return betaln(p, q) + math.log(self.width)
        (m,) = self.params
        return betaln((m + 1) / 2, 0.5) - math.log(math.pi) + math.log(self.width)

    def pdf(self, x):
        y = self._unit(x)
        inside = (y > 0) & (y < 1)
        yc = np.where(inside, y, 0.5)
        if self.family == "shifted-beta":
            p, q = self.params
            logf = (p - 1) * np.log(yc) + (q - 1) * np.log1p(-yc)
        else:
            (m,) = self.params
            logf = m * np.log(np.sin(np.pi * yc))
        out = np.where(inside, np.exp(logf - self._log_norm), 0.0)
        return float(out) if np.ndim(x) == 0 else out

    def _interior(self, x):
        y = self._unit(x)
        if np.any((y <= 0) | (y >= 1)):
            raise DomainError(f"score diverges at or beyond the support [{self.a}, {self.b}]")
        return y

    def score(self, x):
        """rho = f'/f."""
        y = self._interior(x)
        if self.family == "shifted-beta":
            p, q = self.params
            r = ((p - 1) / y - (q - 1) / (1 - y)) / self.width
        else:
            (m,) = self.params
            r = m * math.pi / np.tan(math.pi * y) / self.width
        return float(r) if np.ndim(x) == 0 else r

    def score2(self, x):
        """Second-order score f''/f."""
        y = self._interior(x)
        w2 = self.width**2
        if self.family == "shifted-beta":
            p, q = self.params
            r = ((p - 1) * (p - 2) / y**2 - 2 * (p - 1) * (q - 1) / (y * (1 - y))
                 + (q - 1) * (q - 2) / (1 - y) ** 2) / w2
        else:
            (m,) = self.params
            cot = 1.0 / np.tan(math.pi * y)
            r = math.pi**2 * (m * (m - 1) * cot**2 - m) / w2
        return float(r) if np.ndim(x) == 0 else r

    def cdf(self, x):
        y = np.clip(self._unit(x), 0.0, 1.0)
        if self.family == "shifted-beta":
            p, q = self.params
            out = betainc(p, q, y)
        else:
            # sin^m integrates to an incomplete beta in sin^2 on each half
            (m,) = self.params
            yl = np.minimum(y, 1.0 - y)
            half = 0.5 * betainc((m + 1) / 2, 0.5, np.sin(np.pi * yl) ** 2)
            out = np.where(y <= 0.5, half, 1.0 - half)
        return float(out) if np.ndim(x) == 0 else out

    def _expect(self, g) -> float:
        with warnings.catch_warnings():
            # score integrands are singular-looking at the endpoints; quad still converges
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, _ = integrate.quad(lambda x: g(x) * self.pdf(x), self.a, self.b,
                                    epsabs=0.0, epsrel=1e-12, limit=200)
        return val

    @cached_property
    def moments(self) -> Moments:
        mu = self._expect(lambda x: x)
        var = self._expect(lambda x: (x - mu) ** 2)
        inner = lambda g: self._expect(lambda x: g(x) if self.a < x < self.b else 0.0)
        return Moments(
            mean=mu,
            var=var,
            m4=self._expect(lambda x: x**4),
            x_l2=math.sqrt(self._expect(lambda x: x * x)),
            central_l4=self._expect(lambda x: (x - mu) ** 4) ** 0.25,
            abs8_central=self._expect(lambda x: (x - mu) ** 8) ** 0.125,
            sq_dev_l4=self._expect(lambda x: (x * x - mu * mu) ** 4) ** 0.25,
            score_l2=math.sqrt(inner(lambda x: self.score(x) ** 2)),
            score_l4=inner(lambda x: self.score(x) ** 4) ** 0.25,
            xscore_l4=inner(lambda x: (x * self.score(x)) ** 4) ** 0.25,
            score2_l2=math.sqrt(inner(lambda x: self.score2(x) ** 2)),
        )

    @cached_property
    def replacement_rule(self) -> QuadratureRule:
        """Gauss-Legendre nodes on [a, b] weighted by the density, weights sum to 1."""
        gl = gauss_legendre(self.a, self.b, REPLACEMENT_ORDER)
        w = gl.weights * self.pdf(gl.nodes)
        return QuadratureRule(gl.nodes, w / math.fsum(w), "gauss-legendre-density", REPLACEMENT_ORDER)

    def expect(self, g) -> float:
        """E[g(X)] under the density-weighted Gauss-Legendre rule."""
        r = self.replacement_rule
        return float(np.dot(r.weights, g(r.nodes)))

    def central_moments(self, kmax: int) -> np.ndarray:
        """[E(X-mu)^0, ..., E(X-mu)^kmax]."""
        mu = self.moments.mean
        r = self.replacement_rule
        d = r.nodes - mu
        return np.array([np.dot(r.weights, d**j) for j in range(kmax + 1)])

    @cached_property
    def _inverse_cdf(self) -> PchipInterpolator:
        x = np.linspace(self.a, self.b, INVERSE_CDF_KNOTS)
        F = self.cdf(x)
        F[0], F[-1] = 0.0, 1.0
        keep = np.concatenate([[True], np.diff(F) > 0])
        return PchipInterpolator(F[keep], x[keep])

    def ppf(self, u):
        return self._inverse_cdf(u)

    def sample(self, n: int, rng: RngStream) -> np.ndarray:
        return self.sample_matrix((n,), rng.generator())

    def sample_matrix(self, shape, gen: np.random.Generator) -> np.ndarray:
        # shift uniforms off 0 so draws stay strictly inside (a, b)
        u = (np.floor(gen.random(shape) * 2.0**53) + 0.5) * 2.0**-53
        x = self._inverse_cdf(u)
        return np.clip(x, np.nextafter(self.a, self.b), np.nextafter(self.b, self.a))


def density(dist: DistributionSpec, x):
    return dist.pdf(x)


def score(dist: DistributionSpec, x):
    return dist.score(x)


def moments(dist: DistributionSpec) -> Moments:
    return dist.moments


def sample(dist: DistributionSpec, n: int, rng: RngStream) -> np.ndarray:
    if n < 1:
        raise DomainError(f"sample size must be positive, got {n}")
    return dist.sample(n, rng)
