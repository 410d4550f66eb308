"""Matplotlib rendering of the report tables.

Figures are a convenience view over the CSV outputs; the CSVs stay the
authoritative, diffable artifacts.  The Agg backend keeps rendering
headless and file-only.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
from matplotlib.ticker import MaxNLocator

from .permissions import DANGEROUS
from .series import LibraryShare, PurgeReport, SeriesPoint

plt.rcParams.update(
    {
        "figure.figsize": (8.0, 4.5),
        "axes.grid": True,
        "grid.alpha": 0.3,
        "legend.fontsize": 8,
        "axes.titlesize": 11,
    }
)


def _month_axis(ax, months: list[str]) -> None:
    ax.set_xticks(range(len(months)))
    step = max(1, len(months) // 12)
    ax.set_xticklabels(
        [m if i % step == 0 else "" for i, m in enumerate(months)],
        rotation=45,
        ha="right",
        fontsize=7,
    )


def render_series(
    by_metric: dict[str, list[SeriesPoint]],
    title: str,
    ylabel: str,
    path: Path,
    percent: bool = False,
) -> None:
    """One line per metric across all months present in any series."""
    months = sorted({p.month for points in by_metric.values() for p in points})
    index = {m: i for i, m in enumerate(months)}
    fig, ax = plt.subplots()
    for metric in sorted(by_metric, key=lambda m: (m == DANGEROUS, m)):
        points = by_metric[metric]
        if not points:
            continue
        xs = [index[p.month] for p in points]
        ys = [p.value * 100 if percent else p.value for p in points]
        style = {"linewidth": 2, "color": "black"} if metric == DANGEROUS else {}
        ax.plot(xs, ys, marker=".", markersize=3, label=metric, **style)
    _month_axis(ax, months)
    if not percent:
        ax.yaxis.set_major_locator(MaxNLocator(integer=True))
    ax.set_title(title)
    ax.set_ylabel(ylabel)
    ax.legend(loc="upper left", ncol=2)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_market_share(
    shares: list[LibraryShare],
    display_names: dict[str, str],
    path: Path,
    top_n: int = 10,
) -> None:
    """App counts (bars, left axis) and installs (line, right axis) per library."""
    top = shares[:top_n]
    labels = [display_names.get(s.library_id, s.library_id) for s in top]
    fig, ax_apps = plt.subplots()
    xs = range(len(top))
    ax_apps.bar(xs, [s.app_count for s in top], color="#6699cc", label="apps")
    ax_apps.set_ylabel("apps containing library")
    ax_installs = ax_apps.twinx()
    ax_installs.plot(
        xs, [s.install_floor_total for s in top], "o-", color="#333333", label="installs"
    )
    ax_installs.set_ylabel("installs (floor)")
    ax_installs.grid(False)
    ax_apps.set_xticks(list(xs))
    ax_apps.set_xticklabels(labels, rotation=45, ha="right", fontsize=7)
    ax_apps.set_title(f"Top {len(top)} libraries by installs")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_purge(
    report: PurgeReport, display_names: dict[str, str], path: Path, top_n: int = 15
) -> None:
    """Removal rate per library, worst first."""
    rows = [r for r in report.rows if r.missing][:top_n] or list(report.rows[:top_n])
    labels = [display_names.get(r.library_id, r.library_id) for r in rows]
    fig, ax = plt.subplots(figsize=(8.0, 0.4 * max(len(rows), 4) + 1.5))
    ys = range(len(rows))
    ax.barh(list(ys), [r.removed_fraction * 100 for r in rows], color="#cc6666")
    ax.set_yticks(list(ys))
    ax.set_yticklabels(labels, fontsize=8)
    ax.invert_yaxis()
    ax.axvline(report.overall_fraction * 100, color="black", linestyle="--", linewidth=1)
    ax.set_xlabel("% of host apps removed from store")
    ax.set_title("Libraries in removed apps")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
