"""Static SVG figures (matplotlib, Agg backend, reproducible metadata)."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_RC = {"svg.hashsalt": "stein-hellinger", "svg.fonttype": "none", "font.size": 9}


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)


def sweep_figure(rows, path):
    """H_hat (with error bars) and bound/sqrt(2) against n on log-log axes."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5.0, 3.6))
        ns = [r.n for r in rows]
        ax.errorbar(ns, [r.H_hat for r in rows], yerr=[r.H_err for r in rows], marker="o",
                    capsize=3, label="estimated H")
        ax.plot(ns, [r.bound_over_sqrt2 for r in rows], marker="s", label="bound / sqrt(2)")
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("n")
        ax.set_ylabel("Hellinger distance to N(0, 1)")
        ax.legend(frameon=False)
        ax.grid(True, which="both", lw=0.3, alpha=0.5)
        fig.tight_layout()
        _save(fig, path)


def tail_figure(rows, n, path):
    """Empirical tail inside its Hellinger band."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5.0, 3.6))
        u = [r.u for r in rows]
        ax.fill_between(u, [r.lower_bound for r in rows], [r.upper_bound for r in rows],
                        alpha=0.3, label="band")
        ax.plot(u, [r.phi_c for r in rows], "k--", lw=1, label="Gaussian tail")
        ax.plot(u, [r.empirical_tail for r in rows], "o", ms=4, label=f"empirical, n={n}")
        ax.set_xlabel("u")
        ax.set_ylabel("P(U_n > u)")
        ax.legend(frameon=False)
        fig.tight_layout()
        _save(fig, path)
