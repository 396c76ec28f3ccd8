"""Property suite behind ``stein-hellinger verify``: one line per property."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np

from . import bounds as B
from . import hellinger as Hl
from . import pairs as P
from .concentration import tail_bounds_from_hellinger
from .config import ExperimentConfig
from .hermite import hermite_all
from .numerics import RngStream, gauss_hermite, normal_ccdf, normal_pdf, trapezoid_integrate
from .ustat import kernel_from_dict, standardize, u_values, u_values_bruteforce

MODULES = ("numerics", "hermite", "dists", "ustat", "pairs", "hellinger", "bounds", "concentration")


@dataclass(frozen=True)
class Check:
    module: str
    name: str
    residual: float
    tolerance: float
    passed: bool

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.module}.{self.name} residual={self.residual:.3e} tol={self.tolerance:.3e}"


def _le(module, name, residual, tol):
    residual = float(residual)
    return Check(module, name, residual, float(tol), bool(residual <= tol))


def _numerics(cfg):
    rule = gauss_hermite(64)
    err = 0.0
    for k in range(0, 21):
        # odd moments vanish; measure them on the scale of E|Z|^k ~ k!!
        scale = float(np.prod(np.arange(k - 1 + k % 2, 0, -2))) if k > 1 else 1.0
        exact = 0.0 if k % 2 else scale
        err = max(err, abs(rule.integrate(lambda x: x**k) - exact) / scale)
    a = RngStream(cfg.seed, 7).generator().random(10_000)
    b = RngStream(cfg.seed, 7).generator().random(10_000)
    u = np.linspace(-8, 8, 161)
    refl = np.abs(normal_ccdf(u) + normal_ccdf(-u) - 1).max()
    norm = abs(trapezoid_integrate(normal_pdf, -10, 10, 4001) - 1)
    return [_le("numerics", "gauss_hermite_moments", err, 1e-10),
            _le("numerics", "rng_reproducible", float(np.abs(a - b).max()), 0.0),
            _le("numerics", "ccdf_reflection", refl, 1e-14),
            _le("numerics", "trapezoid_normal_mass", norm, 1e-10)]


def _hermite(cfg):
    rule = gauss_hermite(64)
    H = hermite_all(10, rule.nodes)
    G = (H * rule.weights) @ H.T
    fact = np.array([math.factorial(k) for k in range(11)], dtype=float)
    orth = np.abs(G - np.diag(fact)).max()
    x = RngStream(cfg.seed, 8).generator().uniform(-3, 3, 10)
    eps = 1e-6
    app = 0.0
    for k in range(1, 9):
        fd = (hermite_all(k, x + eps)[k] - hermite_all(k, x - eps)[k]) / (2 * eps)
        app = max(app, float(np.abs(fd - k * hermite_all(k - 1, x)[k - 1]).max()))
    return [_le("hermite", "orthogonality", orth, 1e-8), _le("hermite", "appell", app, 1e-6)]


def _test_functions(dist):
    c, w = 0.5 * (dist.a + dist.b), 0.5 * dist.width
    out = []
    for j, (shift, p) in enumerate([(0, 0), (0.3, 1), (-0.2, 2), (0.1, 3), (0, 4)]):
        def psi(x, s=shift, p=p):
            y = (np.asarray(x) - c) / w
            return np.exp(-((y - s) ** 2)) * (1 + y) ** p
        out.append(psi)
    return out


def _dists(cfg):
    d = cfg.distribution
    mass = abs(trapezoid_integrate(d.pdf, d.a, d.b, 20001) - 1)
    first = second = 0.0
    h = 1e-4
    for psi in _test_functions(d):
        d1 = lambda x: (psi(x + h) - psi(x - h)) / (2 * h)
        d2 = lambda x: (psi(x + h) - 2 * psi(x) + psi(x - h)) / h**2
        first = max(first, abs(d._expect(lambda x: d.score(x) * psi(x) if d.a < x < d.b else 0.0)
                                + d._expect(d1)))
        second = max(second, abs(d._expect(lambda x: d.score2(x) * psi(x) if d.a < x < d.b else 0.0)
                                 - d._expect(d2)))
    return [_le("dists", "density_mass", mass, 1e-10),
            _le("dists", "score_identity", first, 1e-6),
            _le("dists", "second_order_identity", second, 1e-6)]


def _ustat(cfg):
    d = cfg.distribution
    kernel = kernel_from_dict(d, cfg.kernel)
    X = d.sample_matrix((100, 50), RngStream(cfg.seed, 9).generator())
    fast = np.abs(u_values(kernel, X) - u_values_bruteforce(kernel, X)).max()
    g = np.linspace(d.a, d.b, 257)
    excess = float(np.abs(kernel.evaluate(g[:, None], g[None, :])).max() - kernel.bound_R)
    return [_le("ustat", "fast_path_equals_double_sum", fast, 1e-12),
            _le("ustat", "kernel_bound_R", max(excess, 0.0), 1e-12)]


def _pairs(cfg):
    d = cfg.distribution
    kernel = kernel_from_dict(d, cfg.kernel)
    _, std = standardize(kernel, d)
    n = cfg.n_grid[0]
    reps = cfg.verify["pair_reps"]
    X = d.sample_matrix((200, n), RngStream(cfg.seed, 10).generator())
    m = P.pair_moments(d, std, X, 1)[:, 0]
    exact = np.abs(n * m + u_values(std, X)).max()
    out = [_le("pairs", "exact_identity", exact, 1e-12)]
    rep = P.pair_moment_report(d, kernel, n, reps, RngStream(cfg.seed, 11))
    out.append(_le("pairs", "second_claim_vs_Bn", rep.claim2_l2, rep.claim2_bound_Bn))
    for k in sorted(rep.higher_l2):
        out.append(_le("pairs", f"higher_moment_k{k}", rep.higher_l2[k], rep.higher_bounds[k]))
    ts = [t for t in cfg.pair["t_grid"] if t >= P.admissible_t(n, cfg.D)]
    res = P.verify_tau_zero_mean(d, kernel, n, ts, cfg.verify["tau_reps"], RngStream(cfg.seed, 12),
                                 s=cfg.pair["s"], K=cfg.pair["truncation_K"], D=cfg.D)
    for r in res:
        tol = 4 * r.stderr + r.tail
        out.append(Check("pairs", f"tau_zero_mean[{r.name},t={r.t:g}]", abs(r.estimate), tol, r.passed))
    for (a, b), diff, se in P.exchangeability_check(d, kernel, n, reps, RngStream(cfg.seed, 13)):
        out.append(_le("pairs", f"exchangeable[{a},{b}]", abs(diff), 4 * se))
    return out


def _hellinger(cfg):
    h = Hl.hellinger_distance(Hl.GaussianMixture.normal(0, 2)).value
    m = Hl.GaussianMixture(np.array([0.3, 0.5, 0.2]), np.array([-1.0, 0.2, 1.5]),
                           np.array([0.6, 1.1, 0.4]))
    a = Hl.ou_interpolate(Hl.ou_interpolate(m, 0.3), 0.4)
    b = Hl.ou_interpolate(m, 0.7)
    semi = max(np.abs(a.means - b.means).max(), np.abs(a.stddevs - b.stddevs).max())
    gap = Hl.hellinger_distance(m).value - Hl.delta_integral(m)
    out = [_le("hellinger", "normal_oracle", abs(h - Hl.normal_hellinger(0, 2)), 2e-3),
           _le("hellinger", "ou_semigroup", semi, 1e-14),
           _le("hellinger", "delta_integral_dominates", max(gap, 0.0), 0.0)]
    for t in (0.5,):
        res = Hl.verify_ou_score_identities(cfg.distribution, t, cfg.verify["ou_reps"],
                                            RngStream(cfg.seed, 14))
        for order in (1, 2):
            rs = [r for r in res if r.order == order]
            worst = max(abs(r.mean_diff) / r.stderr for r in rs)
            out.append(Check("hellinger", f"ou_score_identity_order{order}[t={t:g}]", worst, 4.0,
                             all(r.passed for r in rs)))
    return out


def _bounds(cfg):
    rows = B.stirling_checks(30)
    worst = max(r.rhs / r.lhs for r in rows)
    alpha = abs(B.alpha_const() ** 2 - math.exp(19 / 150) * math.sqrt(math.pi))
    out = [_le("bounds", "stirling", worst, 1.0), _le("bounds", "alpha_squared", alpha, 1e-14)]
    for n in cfg.n_grid:
        inp = B.BoundInputs(n, 1.0, max(1.0, B.inputs_for_chaos(cfg.distribution, n).R), 1.0, 1, 1, 1)
        disp = math.sqrt(2) * B.simplified_bound(inp, check=False)
        out.append(_le("bounds", f"display_dominates_exact[n={n}]", B.bound_report(inp).total / disp, 1.0))
    if kernel_from_dict(cfg.distribution, cfg.kernel).kind == "chaos":
        from .ustat import chaos_kernel, score_norm_estimates
        d = cfg.distribution
        for n in (50, 200):
            bnd = B.chaos_score_norm_bounds(d, n)
            est = score_norm_estimates(d, chaos_kernel(d), n, cfg.score_reps, RngStream(cfg.seed, 15 + n))
            for name, b, e, h in (("rho", bnd.rho_bound, est.rho_l2, est.ci_halfwidths[0]),
                                  ("i", bnd.i_bound, est.i_l2, est.ci_halfwidths[1]),
                                  ("urho", bnd.urho_bound, est.urho_l2, est.ci_halfwidths[2])):
                se = h / 1.96
                out.append(_le("bounds", f"analytic_{name}_dominates_mc[n={n}]", e - 4 * se, b))
    return out


def _concentration(cfg):
    worst = 0.0
    order_ok = True
    for u in cfg.u_grid:
        r0 = tail_bounds_from_hellinger(0.0, u)
        worst = max(worst, abs(r0.upper_bound - r0.phi_c), abs(r0.lower_bound - r0.phi_c))
        for h in (0.01, 0.1, 1.0):
            r = tail_bounds_from_hellinger(h, u)
            order_ok &= 0 <= r.lower_bound <= r.upper_bound <= 1
    return [_le("concentration", "zero_h_collapse", worst, 1e-15),
            Check("concentration", "band_order", 0.0, 0.0, order_ok)]


_SUITES = {"numerics": _numerics, "hermite": _hermite, "dists": _dists, "ustat": _ustat,
           "pairs": _pairs, "hellinger": _hellinger, "bounds": _bounds,
           "concentration": _concentration}


def run_checks(cfg: ExperimentConfig, only: Optional[str] = None,
               emit: Optional[Callable[[str], None]] = None) -> List[Check]:
    from .errors import ConfigError

    if only is not None and only not in _SUITES:
        raise ConfigError(f"--only must be one of {', '.join(MODULES)}, got {only!r}")
    names = [only] if only else list(MODULES)
    checks = []
    for name in names:
        for c in _SUITES[name](cfg):
            checks.append(c)
            if emit:
                emit(c.line())
    return checks
