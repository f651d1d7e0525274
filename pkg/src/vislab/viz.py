"""Report figures: survival curves against the limit law and the KS
convergence trend.

Uses the Agg backend and pinned savefig metadata so rendering the same
report twice yields identical PNG bytes (the reproducibility contract
covers opt-in figures too).
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["render_survival_figure", "render_ks_trend_figure"]

_SAVE_KW = dict(dpi=120, metadata={"Software": "vislab"})


def _finish(fig, path):
    fig.savefig(path, format="png", **_SAVE_KW)
    plt.close(fig)


def render_survival_figure(report, path):
    """Empirical conditional survival per r (points with 95% bars) on top
    of the limiting exponential curve."""
    lam = report["lambda"]
    records = [r for r in report["records"] if r["kind"] != "failed"]
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    s_max = 1.0
    for rec in records:
        pts = [(e["s"], e["estimate"], e["lo"], e["hi"])
               for e in rec["survival"] if e["estimate"] is not None]
        if not pts:
            continue
        s, est, lo, hi = (np.array(col) for col in zip(*pts))
        s_max = max(s_max, float(s.max()))
        ax.errorbar(s, est, yerr=[est - lo, hi - est], fmt="o", ms=4,
                    capsize=3, label=f"r = {rec['r']:g}")
    grid = np.linspace(0.0, 1.05 * s_max, 200)
    ax.plot(grid, np.exp(-lam * grid), "k-", lw=1.2,
            label=f"limit exp(-{lam:.4g} s)")
    ax.set_xlabel("s")
    ax.set_ylabel("P[Q / delta > s | visible]")
    ax.set_ylim(0.0, 1.02)
    ax.legend(frameon=False)
    ax.set_title(f"clearance survival, model {report['config']['model']}")
    fig.tight_layout()
    _finish(fig, path)


def render_ks_trend_figure(report, path):
    """KS against the exact finite-r law and against the limit law along
    r_list; scene records only."""
    records = [r for r in report["records"] if r["kind"] == "scenes"]
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    if records:
        rs = np.array([rec["r"] for rec in records])
        ax.plot(rs, [rec["ks_exact"] for rec in records], "o-",
                label="KS vs exact finite-r law")
        ax.plot(rs, [rec["ks_limit"] for rec in records], "s--",
                label="KS vs limit law")
        n = records[0]["n_scenes"]
        ax.axhline(1.63 / np.sqrt(n), color="gray", lw=0.8, ls=":",
                   label="99% band at n scenes")
        ax.set_xscale("log")
    else:
        ax.text(0.5, 0.5, "no scene records", ha="center", va="center",
                transform=ax.transAxes)
    ax.set_xlabel("r")
    ax.set_ylabel("KS statistic")
    if records:
        ax.legend(frameon=False)
    ax.set_title(f"convergence trend, model {report['config']['model']}")
    fig.tight_layout()
    _finish(fig, path)