"""Figure rendering for benchmark results.

Consumes the same flat result rows the reporting layer writes to disk
(one dict per evaluation cell) and renders the two summary figures:
selection quality versus training-environment bias strength, and
downstream error versus the number of selected features. Aggregation
is the per-group median, computed here so the plotted series and the
emitted plot-data files cannot drift apart.

Rendering uses the non-interactive Agg backend — this module is meant
for batch jobs writing image files, never for interactive windows.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)
import numpy as np

from .errors import ContractError

__all__ = ["median_by", "render_quality_panels", "render_size_sweep", "METHOD_COLORS"]

# Stable method -> color assignment so series keep their identity across
# figures and runs.
METHOD_COLORS = {
    "dwr": "#1f77b4",
    "srdo": "#d62728",
    "ols": "#2ca02c",
    "lasso": "#9467bd",
    "corr": "#8c564b",
}

_PANELS = (
    ("f1", "F1 of top-5 selection"),
    ("rank_average", "Rank average of true features"),
    ("rmse_mean", "Mean RMSE over test environments"),
    ("rmse_std", "Std of RMSE over test environments"),
)


def median_by(rows, group_keys, value_keys) -> list:
    """Median of each value key within each group, deterministically ordered.

    ``rows`` is an iterable of mappings. Returns one dict per distinct
    combination of ``group_keys`` (sorted by those keys) carrying the
    group labels plus the median of every value key.
    """
    groups: dict = {}
    for row in rows:
        try:
            key = tuple(row[k] for k in group_keys)
            values = [float(row[k]) for k in value_keys]
        except KeyError as exc:
            raise ContractError(f"result row missing key {exc}") from exc
        groups.setdefault(key, []).append(values)
    out = []
    for key in sorted(groups):
        stacked = np.asarray(groups[key])
        entry = dict(zip(group_keys, key))
        for j, vk in enumerate(value_keys):
            entry[vk] = float(np.median(stacked[:, j]))
        out.append(entry)
    return out


def _methods_in(rows) -> list:
    seen = []
    for row in rows:
        if row["method"] not in seen:
            seen.append(row["method"])
    order = {m: i for i, m in enumerate(METHOD_COLORS)}
    return sorted(seen, key=lambda m: order.get(m, len(order)))


def render_quality_panels(rows, path) -> list:
    """Four-panel summary across training bias strengths; returns medians.

    ``rows`` carry method, r_tr, seed, and the four metrics. Each panel
    plots the per-(method, r_tr) median of one metric against r_tr, one
    line per method. The aggregated medians are returned so callers can
    write them next to the image.
    """
    medians = median_by(rows, ("method", "r_tr"), tuple(k for k, _ in _PANELS))
    fig, axes = plt.subplots(2, 2, figsize=(9.5, 7.0))
    for ax, (metric, label) in zip(axes.ravel(), _PANELS):
        for method in _methods_in(medians):
            series = [m for m in medians if m["method"] == method]
            xs = [m["r_tr"] for m in series]
            ys = [m[metric] for m in series]
            ax.plot(xs, ys, marker="o", label=method.upper(), color=METHOD_COLORS.get(method))
        ax.set_xlabel("training bias strength r")
        ax.set_ylabel(label)
        ax.grid(True, alpha=0.3)
    axes[0, 0].legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150, metadata={"Software": None})
    plt.close(fig)
    return medians


def render_size_sweep(rows, path) -> list:
    """Downstream error against number of kept features; returns medians.

    ``rows`` carry k, seed, rmse_mean, rmse_std. Plots the per-k median
    of both statistics as two series on one panel.
    """
    medians = median_by(rows, ("k",), ("rmse_mean", "rmse_std"))
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    xs = [m["k"] for m in medians]
    ax.plot(xs, [m["rmse_mean"] for m in medians], marker="o", color="#1f77b4", label="RMSE mean")
    ax.plot(xs, [m["rmse_std"] for m in medians], marker="s", color="#d62728", label="RMSE std")
    ax.set_xlabel("number of selected features")
    ax.set_ylabel("RMSE across test environments")
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=150, metadata={"Software": None})
    plt.close(fig)
    return medians
