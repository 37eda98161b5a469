"""Scatter figures and correlation tables rendered next to the CSV export."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .indicators import IndicatorReport, pearson_correlation

_AXIS_LABELS = {
    "p": "publication output",
    "mcs": "mean citation score",
    "mncs": "mean normalized citation score",
    "pp_top5": "top 5% share",
    "pp_top10": "top 10% share",
    "pp_top20": "top 20% share",
    "pp_collab": "collaborative share",
    "pp_int_collab": "international share",
    "mgcd_km": "mean collaboration distance (km)",
    "pp_gt1000km": "share beyond 1000 km",
}

_SCATTER_PAIRS = (
    ("mcs", "mncs"),
    ("mncs", "pp_top10"),
    ("pp_top10", "pp_top5"),
    ("pp_top10", "pp_top20"),
    ("mgcd_km", "pp_gt1000km"),
)

COLLAB_INDICATORS = ("pp_collab", "pp_int_collab", "mgcd_km", "pp_gt1000km")


def _defined_pairs(
    rows: Sequence[IndicatorReport], x_name: str, y_name: str
) -> tuple[list[float], list[float]]:
    xs: list[float] = []
    ys: list[float] = []
    for row in rows:
        x = getattr(row, x_name)
        y = getattr(row, y_name)
        if x is not None and y is not None:
            xs.append(x)
            ys.append(y)
    return xs, ys


def _correlation_label(xs: Sequence[float], ys: Sequence[float]) -> str:
    if len(xs) < 2:
        return "r = n/a"
    r = pearson_correlation(xs, ys)
    return "r = n/a" if r is None else f"r = {r:.2f}"


def _scatter(
    xs: Sequence[float], ys: Sequence[float], x_label: str, y_label: str, path: Path
) -> None:
    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    ax.scatter(xs, ys, s=14, alpha=0.7, edgecolors="none")
    ax.set_xlabel(x_label)
    ax.set_ylabel(y_label)
    ax.set_title(_correlation_label(xs, ys))
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_report_figures(
    rows: Sequence[IndicatorReport],
    out_dir: str | Path,
    counterpart_pp_top10: Mapping[str, float | None] | None = None,
) -> list[Path]:
    """Render indicator-relation scatter plots; returns the written paths.

    Rows with undefined values are skipped per figure.  When the other
    counting scheme's top-10% values are supplied, a scheme-comparison figure
    is included.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    for x_name, y_name in _SCATTER_PAIRS:
        xs, ys = _defined_pairs(rows, x_name, y_name)
        path = out / f"{x_name}_vs_{y_name}.png"
        _scatter(xs, ys, _AXIS_LABELS[x_name], _AXIS_LABELS[y_name], path)
        written.append(path)
    if counterpart_pp_top10 is not None:
        xs, ys = [], []
        for row in rows:
            other = counterpart_pp_top10.get(row.institution_id)
            if row.pp_top10 is not None and other is not None:
                xs.append(row.pp_top10)
                ys.append(other)
        path = out / "pp_top10_scheme_comparison.png"
        _scatter(
            xs, ys, "top 10% share (reported scheme)", "top 10% share (other scheme)", path
        )
        written.append(path)
    written.append(write_collab_correlations(rows, out / "collab_correlations.csv"))
    return written


def write_collab_correlations(rows: Sequence[IndicatorReport], path: str | Path) -> Path:
    """Pairwise Pearson correlations between the four collaboration indicators."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["indicator", *COLLAB_INDICATORS])
        for a in COLLAB_INDICATORS:
            record: list[str] = [a]
            for b in COLLAB_INDICATORS:
                xs, ys = _defined_pairs(rows, a, b)
                if len(xs) < 2:
                    record.append("NA")
                    continue
                r = pearson_correlation(xs, ys)
                record.append("NA" if r is None else f"{r:.4f}")
            writer.writerow(record)
    return path
