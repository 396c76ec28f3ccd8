"""Order-2 U-statistics: kernels, standardization, batch simulation, score statistics.

The statistic is

    U_n = 1 / (sqrt(n) (n-1)) * sum_{i != j} [u(X_i, X_j) - E u(X_1, X_2)]

over ordered pairs, so Var(U_n) -> 4 Cov(u(X1,X2), u(X1,X3)).
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .dists import DistributionSpec
from .errors import ConfigError, DegeneracyError, DomainError
from .numerics import RngStream

DEGENERACY_TOL = 1e-10
BLOCK_REPS = 1024  # replications per random sub-stream; fixed so results never depend on threading
_DATA_KEEP_LIMIT = 20_000_000


@dataclass(frozen=True)
class KernelSpec:
    """Symmetric bounded kernel ``scale * base(x, y)``.

    ``u1`` is x -> E[u(x, X')] and ``mean_u2`` = E[u(X1, X2)] under the law the
    kernel was built for.
    """

    kind: str
    base: Callable = field(repr=False)
    bound_R: float
    mean_u2: float
    cov_quarter: float
    u1: Callable = field(repr=False)
    scale: float = 1.0
    mu: Optional[float] = None  # E[X1] for the chaos kernel

    def evaluate(self, x, y):
        return self.scale * self.base(x, y)

    def __call__(self, x, y):
        return self.evaluate(x, y)

    def scaled(self, c: float) -> "KernelSpec":
        return replace(
            self,
            scale=self.scale * c,
            bound_R=self.bound_R * abs(c),
            mean_u2=self.mean_u2 * c,
            cov_quarter=self.cov_quarter * c * c,
            u1=_scaled_fn(self.u1, c),
        )


def _scaled_fn(f, c):
    return lambda x: c * f(x)


def _mul(x, y):
    return np.multiply(x, y)


def chaos_kernel(dist: DistributionSpec, bound_R: Optional[float] = None) -> KernelSpec:
    """u(x, y) = x y; |u| <= b^2 on [a, b] with a > 0."""
    mo = dist.moments
    mu = mo.mean
    return KernelSpec(
        kind="chaos",
        base=_mul,
        bound_R=float(dist.b**2 if bound_R is None else bound_R),
        mean_u2=mu * mu,
        cov_quarter=mu * mu * mo.var,
        u1=lambda x, mu=mu: mu * np.asarray(x, dtype=float),
        mu=mu,
    )


def custom_kernel(dist: DistributionSpec, fn: Callable, bound_R: Optional[float] = None) -> KernelSpec:
    """Arbitrary symmetric vectorized kernel; u1, E u and Cov computed by quadrature."""
    r = dist.replacement_rule

    def u1(x):
        x = np.asarray(x, dtype=float)
        return np.tensordot(fn(x[..., None], r.nodes), r.weights, axes=([-1], [0]))

    u1_nodes = u1(r.nodes)
    mean = float(np.dot(r.weights, u1_nodes))
    cov = float(np.dot(r.weights, (u1_nodes - mean) ** 2))
    if bound_R is None:
        g = np.linspace(dist.a, dist.b, 257)
        bound_R = float(np.abs(fn(g[:, None], g[None, :])).max())
    return KernelSpec("custom", fn, float(bound_R), mean, cov, u1)


def table_kernel(dist: DistributionSpec, grid, values, bound_R=None) -> KernelSpec:
    """Bilinear interpolation of a symmetric table on grid x grid covering [a, b]."""
    grid = np.asarray(grid, dtype=float)
    values = np.asarray(values, dtype=float)
    if values.shape != (grid.size, grid.size):
        raise ConfigError("kernel table must be square and match the grid")
    if not np.allclose(values, values.T, rtol=0, atol=1e-12):
        raise ConfigError("kernel table must be symmetric")
    if grid[0] > dist.a or grid[-1] < dist.b:
        raise ConfigError("kernel table grid must cover the support")
    interp = RegularGridInterpolator((grid, grid), values)

    def fn(x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        pts = np.stack([x.ravel(), y.ravel()], axis=-1)
        return interp(pts).reshape(x.shape)

    R = float(np.abs(values).max()) if bound_R is None else bound_R
    return custom_kernel(dist, fn, R)


def kernel_from_dict(dist: DistributionSpec, d: dict) -> KernelSpec:
    kind = d.get("kind")
    if kind == "chaos":
        return chaos_kernel(dist, d.get("R"))
    if kind == "custom":
        table = d.get("table")
        if not isinstance(table, dict) or "grid" not in table or "values" not in table:
            raise ConfigError('custom kernel needs "table": {"grid": [...], "values": [[...]]}')
        return table_kernel(dist, table["grid"], table["values"], d.get("R"))
    raise ConfigError(f"unknown kernel kind {kind!r}")


def u_value(kernel: KernelSpec, data) -> float:
    """U_n for one dataset (exact double sum; O(n) for the chaos kernel)."""
    data = np.asarray(data, dtype=float)
    if data.ndim != 1 or data.size < 2:
        raise DomainError("U-statistic needs at least two observations")
    return float(u_values(kernel, data[None, :])[0])


def u_values(kernel: KernelSpec, data: np.ndarray) -> np.ndarray:
    """Row-wise U_n for a (reps, n) array."""
    data = np.asarray(data, dtype=float)
    n = data.shape[-1]
    if n < 2:
        raise DomainError("U-statistic needs at least two observations")
    norm = math.sqrt(n) * (n - 1)
    if kernel.kind == "chaos":
        # sum_{i!=j} (x_i x_j - mu^2) = (sum y)^2 - sum y^2 + 2 (n-1) mu sum y,  y = x - mu
        mu = kernel.mu
        y = data - mu
        sy = y.sum(axis=-1)
        total = sy * sy - (y * y).sum(axis=-1) + 2.0 * (n - 1) * mu * sy
        return kernel.scale * total / norm
    return u_values_bruteforce(kernel, data)


def u_values_bruteforce(kernel: KernelSpec, data: np.ndarray) -> np.ndarray:
    data = np.atleast_2d(np.asarray(data, dtype=float))
    n = data.shape[-1]
    M = kernel.evaluate(data[:, :, None], data[:, None, :])
    off = M.sum(axis=(-1, -2)) - np.trace(M, axis1=-2, axis2=-1)
    return (off - n * (n - 1) * kernel.mean_u2) / (math.sqrt(n) * (n - 1))


def standardize(kernel: KernelSpec, dist: DistributionSpec):
    """Return (sigma, kernel / sigma) with 4 Cov(u(X1,X2), u(X1,X3)) = 1 after scaling."""
    sigma2 = 4.0 * kernel.cov_quarter
    if not sigma2 > DEGENERACY_TOL:
        raise DegeneracyError(f"degenerate kernel: sigma^2 = {sigma2:.3g}")
    sigma = math.sqrt(sigma2)
    return sigma, kernel.scaled(1.0 / sigma)


def kernel_l4_sq(dist: DistributionSpec, kernel: KernelSpec) -> float:
    """||u(X1, X2)||_4^2 = sqrt(E[u(X1, X2)^4])."""
    if kernel.kind == "chaos":
        return kernel.scale**2 * dist.moments.m4
    r = dist.replacement_rule
    U = kernel.evaluate(r.nodes[:, None], r.nodes[None, :])
    return math.sqrt(float(r.weights @ (U**4) @ r.weights))


@dataclass
class UStatBatch:
    n: int
    reps: int
    values: np.ndarray
    sigma: float
    datasets: Optional[np.ndarray] = None


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("STEIN_HELLINGER_THREADS", "1")))
    except ValueError:
        return 1


def map_blocks(fn, reps: int, rng: RngStream):
    """Apply ``fn(block_size, generator)`` over fixed-size replication blocks, in order."""
    nblocks = -(-reps // BLOCK_REPS)
    sizes = [min(BLOCK_REPS, reps - b * BLOCK_REPS) for b in range(nblocks)]
    jobs = [(sizes[b], rng.child(b)) for b in range(nblocks)]
    run = lambda job: fn(job[0], job[1].generator())
    threads = _threads()
    if threads > 1 and nblocks > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(run, jobs))
    return [run(j) for j in jobs]


def simulate_batch(kernel: KernelSpec, dist: DistributionSpec, n: int, reps: int,
                   rng: RngStream, keep_data: Optional[bool] = None) -> UStatBatch:
    """Simulate ``reps`` independent datasets and the standardized U_n of each."""
    if n < 2 or reps < 1:
        raise DomainError("need n >= 2 and reps >= 1")
    sigma, std_kernel = standardize(kernel, dist)
    if keep_data is None:
        keep_data = reps * n <= _DATA_KEEP_LIMIT

    def block(size, gen):
        X = dist.sample_matrix((size, n), gen)
        return u_values(std_kernel, X), (X if keep_data else None)

    parts = map_blocks(block, reps, rng)
    values = np.concatenate([p[0] for p in parts])
    data = np.concatenate([p[1] for p in parts]) if keep_data else None
    return UStatBatch(n=n, reps=reps, values=values, sigma=sigma, datasets=data)


def _score_parts(dist: DistributionSpec, data):
    data = np.atleast_2d(np.asarray(data, dtype=float))
    n = data.shape[-1]
    if n < 3:
        raise DomainError("score statistics need n >= 3")
    rho = dist.score(data)
    inv = 1.0 / (data.sum(axis=-1, keepdims=True) - data)  # 1 / S_{-i}
    return n, rho, inv


def score_statistics(dist: DistributionSpec, data):
    """Inner statistics (t1, t2) whose conditional means given U_n are its scores.

    For the unscaled chaos statistic (u = xy), E[t1 Psi(U_n)] = -E[Psi'(U_n)] and
    E[t2 Psi(U_n)] = E[Psi''(U_n)]. With ordered pairs dU_n/dX_i = 2 S_{-i}/(sqrt(n)(n-1)),
    hence the factors 1/2 and 1/4.
    """
    n, rho, inv = _score_parts(dist, data)
    ra = rho * inv
    s_ra = ra.sum(axis=-1)
    t1 = (n - 1) / (2.0 * math.sqrt(n)) * s_ra
    # sum_{i!=j} rho_j (rho_i - 1/S_{-j}) / (S_{-i} S_{-j})
    cross = s_ra * s_ra - (ra * ra).sum(axis=-1)
    corr = (rho * inv * inv * (inv.sum(axis=-1, keepdims=True) - inv)).sum(axis=-1)
    t2 = (n - 1) / 4.0 * (cross - corr)
    if np.ndim(data) == 1:
        return {"t1": float(t1[0]), "t2": float(t2[0])}
    return {"t1": t1, "t2": t2}


def score_statistics_bruteforce(dist: DistributionSpec, data):
    data = np.asarray(data, dtype=float)
    n = data.size
    rho = dist.score(data)
    Sm = data.sum() - data
    t1 = (n - 1) / (2 * math.sqrt(n)) * np.sum(rho / Sm)
    t2 = 0.0
    for i in range(n):
        for j in range(n):
            if i != j:
                t2 += rho[j] * (rho[i] - 1 / Sm[j]) / (Sm[i] * Sm[j])
    return {"t1": t1, "t2": (n - 1) / 4 * t2}


@dataclass(frozen=True)
class ScoreNormEstimates:
    rho_l2: float
    i_l2: float
    urho_l2: float
    ci_halfwidths: tuple
    reps: int
    t1_l4: float
    u_l4: float


def _l2_with_ci(x):
    sq = x * x
    m = sq.mean()
    norm = math.sqrt(m)
    se = sq.std(ddof=1) / math.sqrt(x.size)
    half = 1.96 * se / (2 * norm) if norm > 0 else 1.96 * math.sqrt(se)
    return norm, half


def score_norm_estimates(dist: DistributionSpec, kernel: KernelSpec, n: int, reps: int,
                         rng: RngStream) -> ScoreNormEstimates:
    """Monte Carlo L2 norms of t1, t2 and U_n t1.

    These are Jensen upper proxies: ||E[T | U_n]||_2 <= ||T||_2. For a chaos
    kernel scaled by c the statistics are rescaled to the scores of c U_n.
    """
    if kernel.kind != "chaos":
        raise ConfigError("score statistics are available for the chaos kernel only")
    c = kernel.scale

    def block(size, gen):
        X = dist.sample_matrix((size, n), gen)
        st = score_statistics(dist, X)
        return st["t1"] / c, st["t2"] / (c * c), u_values(kernel, X)

    parts = map_blocks(block, reps, rng)
    t1 = np.concatenate([p[0] for p in parts])
    t2 = np.concatenate([p[1] for p in parts])
    U = np.concatenate([p[2] for p in parts])
    r1, h1 = _l2_with_ci(t1)
    r2, h2 = _l2_with_ci(t2)
    r3, h3 = _l2_with_ci(U * t1)
    return ScoreNormEstimates(r1, r2, r3, (h1, h2, h3), reps,
                              float(np.mean(t1**4) ** 0.25), float(np.mean(U**4) ** 0.25))
