"""Matplotlib renderings of the report tables, written next to the data files.

All figures use the Agg backend and fixed styling so repeated runs with
the same inputs produce byte-identical PNGs.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_SCENARIO_LABELS = {
    "well_ranked": "well ranked",
    "poorly_ranked_const": "poorly ranked (constant)",
    "adversarial": "adversarial",
}


def _save(fig, path: Path) -> Path:
    fig.savefig(path, dpi=120, metadata={"Software": "riskcal"})
    plt.close(fig)
    return path


def render_band_trajectories(
    tables: dict[str, list[dict]], alpha: float, out_path: Path
) -> Path:
    """Running error rate per scenario with the shrinking band overlaid."""
    fig, axes = plt.subplots(1, len(tables), figsize=(4 * len(tables), 3.2), sharey=True)
    if len(tables) == 1:
        axes = [axes]
    for ax, (kind, rows) in zip(axes, tables.items()):
        j = np.array([r["j"] for r in rows])
        ax.plot(j, [r["E_bar"] for r in rows], lw=1.2, label=r"$\bar{E}_j$")
        ax.plot(j, [r["band_lo"] for r in rows], lw=0.8, ls="--", color="gray")
        ax.plot(j, [r["band_hi"] for r in rows], lw=0.8, ls="--", color="gray",
                label="band")
        ax.axhline(alpha, color="k", lw=0.6, ls=":")
        ax.set_ylim(0.0, 1.0)
        ax.set_xlabel("j")
        ax.set_title(_SCENARIO_LABELS.get(kind, kind))
    axes[0].set_ylabel("running error rate")
    axes[0].legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    return _save(fig, out_path)


def render_experiment(rows: list[dict], alpha: float, out_path: Path) -> Path:
    """Histograms of per-method test risk and threshold over the trials."""
    methods = sorted({r["method"] for r in rows})
    fig, (ax_risk, ax_theta) = plt.subplots(1, 2, figsize=(8, 3.2))
    for method in methods:
        risks = [r["test_risk"] for r in rows if r["method"] == method]
        # A calibrator that never abstains reports theta = -inf; clip it to
        # just below the confidence range so the histogram stays finite.
        thetas = [
            max(r["theta"], -0.05) for r in rows if r["method"] == method
        ]
        ax_risk.hist(risks, bins=20, range=(0.0, 1.0), alpha=0.5, label=method)
        ax_theta.hist(thetas, bins=20, range=(-0.05, 1.0), alpha=0.5, label=method)
    ax_risk.axvline(alpha, color="k", lw=0.8, ls=":")
    ax_risk.set_xlabel("test risk")
    ax_theta.set_xlabel(r"$\hat{\theta}$")
    ax_risk.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, out_path)


def render_debias_groups(group_rows: list[dict], out_path: Path) -> Path:
    """Per-group in-sample bias with certificate half-width error bars."""
    names = [r["group"] for r in group_rows]
    bias = [r["in_sample_bias"] for r in group_rows]
    hw = [min(r["half_width"], 1e6) for r in group_rows]
    fig, ax = plt.subplots(figsize=(1.2 * len(names) + 2, 3.2))
    ax.errorbar(range(len(names)), bias, yerr=hw, fmt="o", capsize=4)
    ax.axhline(0.0, color="k", lw=0.6, ls=":")
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names)
    ax.set_ylabel("group bias")
    fig.tight_layout()
    return _save(fig, out_path)
