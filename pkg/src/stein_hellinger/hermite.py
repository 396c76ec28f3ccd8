"""Probabilists' Hermite polynomials and truncated Hermite series."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

MAX_ORDER = 64


def _check_order(k):
    if not isinstance(k, (int, np.integer)) or k < 0:
        raise ConfigError(f"Hermite order must be a nonnegative integer, got {k!r}")
    if k > MAX_ORDER:
        raise ConfigError(f"Hermite order {k} exceeds the cap {MAX_ORDER}")


def hermite_all(kmax: int, x):
    """Stack ``[h_0(x), ..., h_kmax(x)]`` along a new leading axis."""
    _check_order(kmax)
    x = np.asarray(x, dtype=float)
    out = np.empty((kmax + 1,) + x.shape)
    out[0] = 1.0
    if kmax >= 1:
        out[1] = x
    for k in range(1, kmax):
        out[k + 1] = x * out[k] - k * out[k - 1]
    return out


def hermite_eval(k: int, x):
    """h_k(x) via h_{k+1} = x h_k - k h_{k-1}."""
    _check_order(k)
    val = hermite_all(k, x)[k]
    return float(val) if np.ndim(x) == 0 else val


def hermite_l2_norm(k: int) -> float:
    """||h_k(Z)||_2 = sqrt(k!) for standard normal Z."""
    _check_order(k)
    return math.sqrt(math.factorial(k))


@dataclass(frozen=True)
class HermiteSeries:
    """sum_{k>=1} c_k h_k with an L2 bound on the omitted tail.

    ``coefficients[0]`` multiplies h_1.
    """

    coefficients: tuple
    declared_tail_bound: float = 0.0

    def __post_init__(self):
        coef = tuple(float(c) for c in self.coefficients)
        if not coef:
            raise ConfigError("a Hermite series needs at least one coefficient")
        if not all(math.isfinite(c) for c in coef):
            raise ConfigError("Hermite coefficients must be finite")
        if not self.declared_tail_bound >= 0:
            raise ConfigError("declared_tail_bound must be nonnegative")
        if len(coef) > MAX_ORDER:
            raise ConfigError(f"series longer than {MAX_ORDER}")
        object.__setattr__(self, "coefficients", coef)

    @property
    def truncation_order(self) -> int:
        return len(self.coefficients)

    def __call__(self, x):
        h = hermite_all(self.truncation_order, x)[1:]
        c = np.asarray(self.coefficients).reshape((-1,) + (1,) * np.ndim(x))
        return (c * h).sum(axis=0)


def series_l2_norm_sq(s: HermiteSeries) -> float:
    """E[(sum c_k h_k(Z))^2] = sum c_k^2 k! by orthogonality."""
    return math.fsum(c * c * math.factorial(k) for k, c in enumerate(s.coefficients, start=1))
