"""Reference cells and per-publication normalized citation scores.

Publications are compared only within their (field, publication year,
document type) cell.  Each included publication contributes to each of its
field cells with weight inclusion_weight x field fraction; the cell stores
the weighted mean citation count and, for each percentile band, the citation
threshold together with a tie fraction that makes the cell hand out exactly
x% of its weight in top-x% credit.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Mapping

import numpy as np

from .corpus import (
    CitationGraph,
    Corpus,
    InclusionConfig,
    Publication,
    countable_citations,
    inclusion_weight,
)
from .errors import ConsistencyError

TOP_PERCENTS = (5, 10, 20)

CellKey = tuple[str, int, str]  # (field label, year, doc_type value)


@dataclass(frozen=True)
class NormalizationCell:
    key: CellKey
    expected_citations: float
    member_weight_total: float
    # percent -> (threshold citations, tie fraction at the threshold)
    top_thresholds: Mapping[int, tuple[int, float]]


class CellTable:
    """Immutable cell lookup built from one (corpus, graph, config) triple."""

    def __init__(self, cells: Iterable[NormalizationCell]):
        self.cells: dict[CellKey, NormalizationCell] = {c.key: c for c in cells}
        self.zero_mean_keys: frozenset[CellKey] = frozenset(
            k for k, c in self.cells.items() if c.expected_citations == 0.0
        )

    def __len__(self) -> int:
        return len(self.cells)

    def __iter__(self) -> Iterator[NormalizationCell]:
        return iter(self.cells.values())

    def get(self, key: CellKey) -> NormalizationCell | None:
        return self.cells.get(key)


def cell_keys(pub: Publication) -> list[tuple[CellKey, float]]:
    """The (cell key, field fraction) pairs a publication belongs to."""
    return [
        ((label, pub.year, pub.doc_type.value), frac) for label, frac in pub.fields
    ]


def _band_threshold(
    citations_desc: np.ndarray, cum_weight: np.ndarray, total_weight: float, percent: int
) -> tuple[int, float]:
    """Threshold and tie fraction assigning exactly percent% of cell weight.

    ``citations_desc`` is sorted descending with ``cum_weight`` its running
    weight sum.  Publications strictly above the threshold get full credit;
    those exactly at it share the remainder via the tie fraction.
    """
    target = percent / 100.0 * total_weight
    idx = int(np.searchsorted(cum_weight, target, side="left"))
    if idx >= len(citations_desc):
        idx = len(citations_desc) - 1
    threshold = int(citations_desc[idx])
    above = int(np.searchsorted(-citations_desc, -threshold, side="left"))
    at_end = int(np.searchsorted(-citations_desc, -threshold, side="right"))
    weight_above = float(cum_weight[above - 1]) if above > 0 else 0.0
    weight_at = float(cum_weight[at_end - 1]) - weight_above
    tie = (target - weight_above) / weight_at if weight_at > 0.0 else 0.0
    return threshold, min(max(tie, 0.0), 1.0)


def build_cells(
    corpus: Corpus,
    graph: CitationGraph,
    cfg: InclusionConfig,
    percents: tuple[int, ...] = TOP_PERCENTS,
    citation_counts: Mapping[str, int] | None = None,
) -> CellTable:
    """Build the cell table over every included publication.

    ``citation_counts`` lets callers that already computed countable
    citations reuse them; otherwise they are computed here.
    """
    members_c: dict[CellKey, list[int]] = {}
    members_w: dict[CellKey, list[float]] = {}
    for pub in corpus:
        w0 = inclusion_weight(pub, cfg)
        if w0 == 0.0:
            continue
        if citation_counts is not None:
            cites = citation_counts[pub.id]
        else:
            cites = countable_citations(pub, graph, cfg)
        for key, frac in cell_keys(pub):
            weight = w0 * frac
            try:
                members_c[key].append(cites)
                members_w[key].append(weight)
            except KeyError:
                members_c[key] = [cites]
                members_w[key] = [weight]

    cells: list[NormalizationCell] = []
    for key, c_list in members_c.items():
        c_arr = np.asarray(c_list, dtype=np.int64)
        w_arr = np.asarray(members_w[key], dtype=np.float64)
        total_weight = float(np.sum(w_arr))
        weighted_cites = float(np.dot(c_arr, w_arr))
        mean = weighted_cites / total_weight
        thresholds: dict[int, tuple[int, float]] = {}
        order = np.argsort(-c_arr, kind="stable")
        c_desc = c_arr[order]
        cum = np.cumsum(w_arr[order])
        for percent in percents:
            thresholds[percent] = _band_threshold(c_desc, cum, total_weight, percent)
        cells.append(NormalizationCell(key, mean, total_weight, thresholds))
    return CellTable(cells)


# ---------------------------------------------------------------------------
# Per-publication scores
# ---------------------------------------------------------------------------


def score_from_citations(
    cites: int, pub: Publication, cells: CellTable
) -> float:
    """Field-fraction-weighted ratio of citations to cell expectations.

    Zero-mean cells contribute 0 (those cells are flagged on the table as
    ``zero_mean_keys``).  A missing cell means the table was not built from
    this corpus/config pair.
    """
    score = 0.0
    for key, frac in cell_keys(pub):
        cell = cells.get(key)
        if cell is None:
            raise ConsistencyError(
                f"publication {pub.id!r} has no cell {key!r}; "
                "cell table was built from a different corpus or config"
            )
        if cell.expected_citations > 0.0:
            score += frac * (cites / cell.expected_citations)
    return score


def normalized_score(
    pub: Publication, cells: CellTable, graph: CitationGraph, cfg: InclusionConfig
) -> float:
    return score_from_citations(countable_citations(pub, graph, cfg), pub, cells)


def membership_from_citations(
    cites: int, percent: int, pub: Publication, cells: CellTable
) -> float:
    """Top-percent membership in [0, 1], combined over field cells.

    1 strictly above the cell threshold, the cell tie fraction exactly at it,
    0 below; cells the publication is missing from contribute 0.
    """
    membership = 0.0
    for key, frac in cell_keys(pub):
        cell = cells.get(key)
        if cell is None:
            continue
        threshold, tie = cell.top_thresholds[percent]
        if cites > threshold:
            membership += frac
        elif cites == threshold:
            membership += frac * tie
    return membership


def top_membership(
    pub: Publication,
    percent: int,
    cells: CellTable,
    graph: CitationGraph,
    cfg: InclusionConfig,
) -> float:
    return membership_from_citations(
        countable_citations(pub, graph, cfg), percent, pub, cells
    )


def write_cell_table(cells: CellTable, path: str | Path) -> None:
    """Audit export: field, year, doc_type, weight, mean and band thresholds."""
    percents = TOP_PERCENTS
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        header = ["field", "year", "doc_type", "member_weight", "expected_citations"]
        for percent in percents:
            header += [f"top{percent}_threshold", f"top{percent}_tie_fraction"]
        writer.writerow(header)
        for key in sorted(cells.cells):
            cell = cells.cells[key]
            row: list[object] = [
                key[0],
                key[1],
                key[2],
                f"{cell.member_weight_total:.6f}",
                f"{cell.expected_citations:.6f}",
            ]
            for percent in percents:
                threshold, tie = cell.top_thresholds[percent]
                row += [threshold, f"{tie:.6f}"]
            writer.writerow(row)
