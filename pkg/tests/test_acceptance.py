"""Acceptance criteria 1-11, one PASS/FAIL line each (also runnable as a script)."""
import math
import time

import numpy as np
import pytest

import conftest
from stein_hellinger import bounds as B
from stein_hellinger import experiments as E
from stein_hellinger import pairs as P
from stein_hellinger.config import default_config
from stein_hellinger.hellinger import (GaussianMixture, hellinger_distance, hellinger_from_samples,
                                       verify_ou_score_identities)
from stein_hellinger.hermite import hermite_all
from stein_hellinger.numerics import RngStream, gauss_hermite
from stein_hellinger.ustat import chaos_kernel, score_norm_estimates, simulate_batch, u_values

SEED = 42


def record(k, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail}"
    conftest.CRITERIA.append(line)
    print(line)
    return ok


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.t0


@pytest.fixture(scope="module")
def cfg():
    return default_config()


def test_criterion_01_gaussian_oracle():
    with Timer() as tm:
        exact = math.sqrt(1 - math.sqrt(2 * 2 / (1 + 4)))
        quad = hellinger_distance(GaussianMixture.normal(0, 2)).value
        x = 2 * RngStream(SEED, 1).generator().standard_normal(100_000)
        kde = hellinger_from_samples(x).value
    ok = abs(quad - exact) <= 2e-3 and abs(kde - exact) <= 2e-2 and tm.seconds < 5
    assert record(1, ok, f"exact={exact:.6f} quadrature={quad:.6f} kde={kde:.6f} "
                         f"(tol 2e-3 / 2e-2) time={tm.seconds:.2f}s")


def test_criterion_02_exact_pair_identity(beta55):
    with Timer() as tm:
        n = 50
        from stein_hellinger.ustat import standardize
        _, std = standardize(chaos_kernel(beta55), beta55)
        X = beta55.sample_matrix((1000, n), RngStream(SEED, 2).generator())
        m1 = P.conditional_F_mean(beta55, std, X)
        worst = float(np.abs(n * m1 + u_values(std, X)).max())
    ok = worst <= 1e-12 and tm.seconds < 10
    assert record(2, ok, f"max |n E[F|X] + U_n| = {worst:.2e} over 1000 datasets (tol 1e-12) "
                         f"time={tm.seconds:.2f}s")


def test_criterion_03_second_claim(beta55):
    parts, ok = [], True
    with Timer() as tm:
        for n in (25, 100, 400):
            rep = P.pair_moment_report(beta55, chaos_kernel(beta55), n, 10_000, RngStream(SEED, 3).child(n))
            ok &= rep.claim2_l2 <= rep.claim2_bound_Bn
            parts.append(f"n={n}: {rep.claim2_l2:.4f} <= B_n={rep.claim2_bound_Bn:.3f}")
    ok &= tm.seconds < 120
    assert record(3, ok, "; ".join(parts) + f" time={tm.seconds:.1f}s")


def test_criterion_04_higher_moments(beta55):
    n = 100
    with Timer() as tm:
        rep = P.pair_moment_report(beta55, chaos_kernel(beta55), n, 10_000, RngStream(SEED, 4),
                                   t=P.admissible_t(n, 1.0), ks=(3, 4, 5))
    ok = all(rep.higher_l2[k] <= rep.higher_bounds[k] for k in (3, 4, 5)) and tm.seconds < 120
    parts = [f"k={k}: {rep.higher_l2[k]:.4g} <= {rep.higher_bounds[k]:.4g}" for k in (3, 4, 5)]
    assert record(4, ok, f"t={rep.t:.5f} " + "; ".join(parts) + f" time={tm.seconds:.1f}s")


def test_criterion_05_tau_zero_mean(beta55):
    fns = [f for f in P.default_test_functions() if f.name != "one"][:3]
    with Timer() as tm:
        res = P.verify_tau_zero_mean(beta55, chaos_kernel(beta55), 100, [0.06, 0.2, 0.7], 100_000,
                                     RngStream(SEED, 5), test_functions=fns)
    ok = len(res) == 9 and all(r.passed for r in res) and tm.seconds < 180
    worst = max(abs(r.estimate) / (4 * r.stderr + r.tail) for r in res)
    assert record(5, ok, f"{sum(r.passed for r in res)}/{len(res)} residuals within 4 stderr + tail, "
                         f"worst ratio {worst:.3f} time={tm.seconds:.1f}s")


def test_criterion_06_ou_score_identities(beta55):
    passed = total = 0
    with Timer() as tm:
        for i, t in enumerate((0.25, 0.5, 1.0)):
            res = verify_ou_score_identities(beta55, t, 1_000_000, RngStream(SEED, 60 + i), bins=20)
            passed += sum(r.passed for r in res)
            total += len(res)
    ok = passed == total == 120 and tm.seconds < 60
    assert record(6, ok, f"{passed}/{total} bins (2 identities x 20 bins x 3 times) "
                         f"time={tm.seconds:.1f}s")


def test_criterion_07_central_dominance(cfg):
    parts, ok = [], True
    with Timer() as tm:
        for n in cfg.n_grid:
            row, _ = E.sweep_row(cfg, n)
            ok &= row.passed
            parts.append(f"n={n}: sqrt2(H+err)={math.sqrt(2) * (row.H_hat + row.H_err):.4f} "
                         f"<= {row.bound_total:.3g} (ratio {row.ratio:.2g})")
    ok &= tm.seconds < 600
    assert record(7, ok, "; ".join(parts) + f" time={tm.seconds:.1f}s")


def test_criterion_08_rate_shape(beta55):
    ns = (100, 1000, 10_000)
    prof = B.rate_profile(ns, 1.0, 1.0, (1.0, 1.0, 1.0))
    spread = max(prof) / min(prof)
    a = B.inputs_for_chaos(beta55, 100)
    dflt = B.rate_profile(ns, a.R, a.u4sq, (1.0, 1.0, 1.0))
    record_detail = (f"R=1, ||u||_4^2=1: spread {spread:.3f} (< 2); "
                     f"for reference the default kernel (R={a.R:.3f}) spreads {max(dflt) / min(dflt):.3g}")
    assert record(8, spread < 2, record_detail)


def test_criterion_09_concentration(cfg):
    n = 400
    with Timer() as tm:
        batch = simulate_batch(E.kernel_of(cfg), cfg.distribution, n, 100_000, RngStream(cfg.seed, n))
        h = E.estimate_hellinger(cfg, batch.values).value
        rows, _ = E.tail_rows(cfg, n, h=h, batch=batch)
    worst = max(abs(math.sqrt(r.empirical_tail) - math.sqrt(r.phi_c)) - r.slack for r in rows)
    ok = all(r.passed for r in rows) and tm.seconds < 120
    assert record(9, ok, f"H_hat={h:.5f}, {sum(r.passed for r in rows)}/{len(rows)} u-values in band, "
                         f"worst margin {worst:.4f} time={tm.seconds:.1f}s")


def test_criterion_10_constants():
    with Timer() as tm:
        alpha = B.alpha_const()
        alpha_ok = abs(alpha - 1.418468) <= 1e-6
        stirling_ok = all(r.holds for r in B.stirling_checks(30))
        rule = gauss_hermite(64)
        H = hermite_all(10, rule.nodes)
        G = (H * rule.weights) @ H.T
        orth = float(np.abs(G - np.diag([math.factorial(k) for k in range(11)])).max())
    ok = alpha_ok and stirling_ok and orth <= 1e-8 and tm.seconds < 1
    assert record(10, ok, f"alpha=e^(19/300) pi^(1/4)={alpha:.7f} vs literal 1.418468 "
                          f"(|diff|={abs(alpha - 1.418468):.2e}, tol 1e-6, {'ok' if alpha_ok else 'MISMATCH'}); "
                          f"Stirling m=1..30 {'hold' if stirling_ok else 'FAIL'}; "
                          f"Hermite orthogonality max err {orth:.1e} time={tm.seconds:.2f}s")


def test_criterion_11_score_norm_bounds(beta55):
    parts, ok = [], True
    with Timer() as tm:
        for n in (50, 200):
            b = B.chaos_score_norm_bounds(beta55, n)
            e = score_norm_estimates(beta55, chaos_kernel(beta55), n, 20_000, RngStream(SEED, 11).child(n))
            for name, bound, est, half in zip(("rho", "I", "U rho"), (b.rho_bound, b.i_bound, b.urho_bound),
                                              (e.rho_l2, e.i_l2, e.urho_l2), e.ci_halfwidths):
                lower = est - 4 * half / 1.96
                ok &= lower <= bound
                parts.append(f"n={n} {name}: {lower:.3g} <= {bound:.3g}")
    ok &= tm.seconds < 60
    assert record(11, ok, "; ".join(parts) + f" time={tm.seconds:.1f}s")


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q", "-s"]))
