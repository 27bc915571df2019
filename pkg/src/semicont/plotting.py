"""SVG figures for a comparison report (Q-Q, predicted vs observed, mean-variance)."""
from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

LABELS = {"tweedie": "Tweedie", "twopart": "Two-part", "tobit": "Tobit"}

_RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "svg.hashsalt": "semicont",
    "svg.fonttype": "none",
}


def _size(ncols, scale=1.0):
    golden = (math.sqrt(5.0) - 1.0) / 2.0
    width = 3.2 * max(ncols, 1) * scale
    return width, 3.2 * golden * 1.2 * scale


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return Path(path)


def _panels(n):
    fig, axes = plt.subplots(1, max(n, 1), figsize=_size(n), squeeze=False)
    return fig, axes[0]


def plot_qq(tables: dict, path):
    with plt.rc_context(_RC):
        fig, axes = _panels(len(tables))
        for ax, (name, t) in zip(axes, tables.items()):
            ax.scatter(t.empirical, t.model, s=6, color="k")
            lim = max([1.0, *np.ravel(t.empirical), *np.ravel(t.model)])
            ax.plot([0, lim], [0, lim], ls="--", color="grey", lw=0.8)
            ax.set_title(LABELS.get(name, name))
            ax.set_xlabel("observed quantile")
        axes[0].set_ylabel("model quantile")
        fig.tight_layout()
        return _save(fig, path)


def plot_predictions(predictions: dict, path, upper_quantile=0.99):
    """Predicted against observed; points beyond the axis limits are dropped."""
    with plt.rc_context(_RC):
        fig, axes = _panels(len(predictions))
        for ax, (name, (pred, truth)) in zip(axes, predictions.items()):
            pred, truth = np.asarray(pred), np.asarray(truth)
            xmax = float(np.quantile(truth, upper_quantile)) if truth.size else 1.0
            ymax = float(np.quantile(pred, upper_quantile)) if pred.size else 1.0
            keep = (truth <= xmax) & (pred <= ymax)
            ax.scatter(truth[keep], pred[keep], s=4, color="k", alpha=0.6)
            lim = max(xmax, ymax, 1.0)
            ax.plot([0, lim], [0, lim], ls="--", color="grey", lw=0.8)
            ax.set_xlim(0, xmax if xmax > 0 else 1.0)
            ax.set_ylim(0, ymax if ymax > 0 else 1.0)
            ax.set_title(LABELS.get(name, name))
            ax.set_xlabel("observed")
        axes[0].set_ylabel("predicted")
        fig.tight_layout()
        return _save(fig, path)


def plot_meanvar(table, path):
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=_size(1.4))
        ok = (table.bin_mean > 0) & (table.bin_variance > 0)
        ax.scatter(table.bin_mean[ok], table.bin_variance[ok], s=10, color="k", zorder=3)
        if ok.any():
            grid = np.geomspace(table.bin_mean[ok].min(), table.bin_mean[ok].max(), 50)
            if math.isfinite(table.power):
                ax.plot(grid, table.reference_curve(table.power, grid), lw=1.2, color="k",
                        label=f"p = {table.power:.3f} (fitted)")
            for p in table.reference_powers:
                if not math.isclose(p, table.power, abs_tol=5e-4):
                    ax.plot(grid, table.reference_curve(p, grid), lw=1.0, ls=":", label=f"p = {p:g}")
            ax.legend(frameon=False)
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("bin mean")
        ax.set_ylabel("bin variance")
        fig.tight_layout()
        return _save(fig, path)


def render_figures(report, out_dir) -> list[Path]:
    out = Path(out_dir)
    return [
        plot_qq(report.qq, out / "fig_qq.svg"),
        plot_predictions(report.predictions, out / "fig_pred.svg"),
        plot_meanvar(report.meanvar, out / "fig_meanvar.svg"),
    ]
