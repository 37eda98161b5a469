"""University selection, full-pipeline report assembly, and delimited export."""

from __future__ import annotations

import csv
import hashlib
import json
from collections import Counter
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .assignment import (
    AssignmentConfig,
    AssignmentTable,
    AssignmentValidationReport,
    Thesaurus,
    assign_corpus,
    load_thesaurus,
)
from .corpus import (
    CitationGraph,
    Corpus,
    InclusionConfig,
    ParseResult,
    _gc_paused,
    countable_citations,
    inclusion_weight,
    load_citation_graph,
    parse_corpus,
)
from .errors import BiblioRankError, PipelineError
from .geo import GeoTable, load_geo_table
from .indicators import (
    INDICATOR_NAMES,
    CountingScheme,
    IndicatorReport,
    PubStats,
    compute_indicator_table,
    compute_pub_stats,
)
from .normalization import CellTable, build_cells
from .stability import StabilityInterval, bootstrap_intervals


@dataclass
class RankingConfig:
    """Everything one report run depends on; fingerprinted for provenance."""

    inclusion: InclusionConfig = dc_field(default_factory=InclusionConfig)
    scheme: CountingScheme = CountingScheme.FRACTIONAL
    assignment: AssignmentConfig = dc_field(default_factory=AssignmentConfig)
    top_n: int = 500
    min_pubs_per_year: int = 500
    bootstrap_samples: int = 1000
    bootstrap_level: float = 95.0
    seed: int = 0
    publications_path: str | Path = ""
    citations_path: str | Path = ""
    thesaurus_path: str | Path = ""
    institutions_path: str | Path | None = None
    geo_path: str | Path | None = None
    out_path: str | Path = ""
    figures_dir: str | Path | None = None

    def __post_init__(self) -> None:
        if self.top_n < 1:
            raise ValueError(f"top_n must be >= 1, got {self.top_n}")
        if self.min_pubs_per_year < 0:
            raise ValueError(f"min_pubs_per_year must be >= 0, got {self.min_pubs_per_year}")

    def fingerprint(self) -> str:
        """Short stable hash of the semantic configuration (paths excluded)."""
        payload = {
            "year_min": self.inclusion.year_min,
            "year_max": self.inclusion.year_max,
            "citation_window_end": self.inclusion.citation_window_end,
            "english_only": self.inclusion.english_only,
            "exclude_self_citations": self.inclusion.exclude_self_citations,
            "letter_weight": self.inclusion.letter_weight,
            "scheme": self.scheme.value,
            "min_occurrences": self.assignment.min_occurrences,
            "round2_threshold": self.assignment.round2_threshold,
            "top_n": self.top_n,
            "min_pubs_per_year": self.min_pubs_per_year,
            "bootstrap_samples": self.bootstrap_samples,
            "bootstrap_level": self.bootstrap_level,
            "seed": self.seed,
        }
        digest = hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()
        return digest[:12]


# ---------------------------------------------------------------------------
# Selection
# ---------------------------------------------------------------------------


@dataclass
class Selection:
    """Ordered selection outcome: institution ids plus bookkeeping."""

    institutions: list[str]
    eligible_count: int
    notice: str | None = None


def eligible_record_counts(
    corpus: Corpus, table: AssignmentTable, cfg: RankingConfig
) -> dict[str, Counter]:
    """Per-institution raw record counts by year.

    Eligibility deliberately uses a counting-scheme-independent rule so that
    full and fractional reports rank the same set of institutions: a linked
    publication inside the year window (and not arts-and-humanities) counts
    as one record in its year, whatever its language, document type, or
    address split.
    """
    incl = cfg.inclusion
    counts: dict[str, Counter] = {}
    for pub in corpus:
        if pub.year < incl.year_min or pub.year > incl.year_max or pub.is_arts_humanities:
            continue
        links = table.links_of_publication(pub.id)
        for link in links:
            counts.setdefault(link.institution_id, Counter())[pub.year] += 1
    return counts


def select_universities(
    corpus: Corpus, table: AssignmentTable, cfg: RankingConfig
) -> Selection:
    """Institutions meeting the per-year minimum, ordered by total output.

    Ordering is by total eligible record count descending with ties broken by
    institution id ascending; at most top_n institutions are returned, with a
    notice when fewer are eligible.
    """
    counts = eligible_record_counts(corpus, table, cfg)
    years = range(cfg.inclusion.year_min, cfg.inclusion.year_max + 1)
    eligible: list[tuple[int, str]] = []
    for inst, by_year in counts.items():
        if all(by_year.get(year, 0) >= cfg.min_pubs_per_year for year in years):
            eligible.append((sum(by_year.values()), inst))
    eligible.sort(key=lambda item: (-item[0], item[1]))
    chosen = [inst for _, inst in eligible[: cfg.top_n]]
    notice = None
    if len(eligible) < cfg.top_n:
        notice = (
            f"only {len(eligible)} institutions eligible for top_n={cfg.top_n}; "
            "returning all"
        )
    return Selection(chosen, len(eligible), notice)


# ---------------------------------------------------------------------------
# Summary
# ---------------------------------------------------------------------------


@dataclass
class ReportSummary:
    records_read: int = 0
    records_rejected: int = 0
    corpus_publications: int = 0
    included_publications: int = 0
    included_weight: float = 0.0
    non_english_share: float = 0.0
    unmatched_address_rate: float = 0.0
    zero_mean_cells: int = 0
    institutions_linked: int = 0
    institutions_eligible: int = 0
    institutions_selected: int = 0
    selected_publication_share: float = 0.0
    country_counts: dict[str, int] = dc_field(default_factory=dict)
    notice: str | None = None

    def lines(self) -> list[str]:
        out = [
            f"records read:            {self.records_read}",
            f"records rejected:        {self.records_rejected}",
            f"corpus publications:     {self.corpus_publications}",
            f"included publications:   {self.included_publications}",
            f"included weight:         {self.included_weight:.2f}",
            f"non-English share:       {self.non_english_share:.4f}",
            f"unmatched address rate:  {self.unmatched_address_rate:.4f}",
            f"zero-mean cells:         {self.zero_mean_cells}",
            f"institutions linked:     {self.institutions_linked}",
            f"institutions eligible:   {self.institutions_eligible}",
            f"institutions selected:   {self.institutions_selected}",
            f"selected pubs share:     {self.selected_publication_share:.4f}",
            "institutions per country:",
        ]
        for country, count in sorted(
            self.country_counts.items(), key=lambda kv: (-kv[1], kv[0])
        ):
            out.append(f"  {country}: {count}")
        if self.notice:
            out.append(f"notice: {self.notice}")
        return out


def write_summary(summary: ReportSummary, path: str | Path) -> None:
    Path(path).write_text("\n".join(summary.lines()) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Bootstrap plumbing
# ---------------------------------------------------------------------------

_MATRIX_COLS = (
    "weight",
    "citations",
    "norm_score",
    "top5",
    "top10",
    "top20",
    "collab",
    "intl",
    "dist",
    "gt1000",
)


def institution_matrix(
    institution_id: str,
    corpus: Corpus,
    table: AssignmentTable,
    pub_stats: Mapping[str, PubStats],
    scheme: CountingScheme,
) -> np.ndarray:
    """Rows of (weight, per-publication indicator inputs) for bootstrapping."""
    rows: list[tuple[float, ...]] = []
    full = scheme is CountingScheme.FULL
    for link in table.links_of_institution(institution_id):
        ps = pub_stats.get(link.publication_id)
        if ps is None:
            continue
        if full:
            w = ps.inclusion
        else:
            total = len(corpus.by_id[link.publication_id].addresses)
            if total == 0:
                continue
            w = ps.inclusion * link.matched_address_count / total
        rows.append(
            (
                w,
                float(ps.citations),
                ps.norm_score,
                ps.top5,
                ps.top10,
                ps.top20,
                1.0 if ps.collaborative else 0.0,
                1.0 if ps.international else 0.0,
                ps.distance_km,
                1.0 if ps.distance_km > 1000.0 else 0.0,
            )
        )
    return np.asarray(rows, dtype=np.float64).reshape(len(rows), len(_MATRIX_COLS))


def _sum_stat(rows: np.ndarray) -> float:
    return float(rows[:, 0].sum())


def _ratio_stat(col: int):
    def stat(rows: np.ndarray) -> float | None:
        weights = rows[:, 0]
        total = weights.sum()
        if total <= 0.0:
            return None
        return float(np.dot(weights, rows[:, col]) / total)

    return stat


INDICATOR_STATISTICS = {
    "p": _sum_stat,
    "mcs": _ratio_stat(1),
    "mncs": _ratio_stat(2),
    "pp_top5": _ratio_stat(3),
    "pp_top10": _ratio_stat(4),
    "pp_top20": _ratio_stat(5),
    "pp_collab": _ratio_stat(6),
    "pp_int_collab": _ratio_stat(7),
    "mgcd_km": _ratio_stat(8),
    "pp_gt1000km": _ratio_stat(9),
}


def institution_seed(master_seed: int, institution_id: str) -> int:
    """Stable per-institution bootstrap seed (independent of set ordering)."""
    digest = hashlib.sha256(f"{master_seed}:{institution_id}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


# ---------------------------------------------------------------------------
# Full pipeline
# ---------------------------------------------------------------------------


@dataclass
class ReportResult:
    rows: list[IndicatorReport]
    summary: ReportSummary
    selection: Selection
    validation: AssignmentValidationReport
    parse_result: ParseResult
    cells: CellTable
    counterpart_pp_top10: dict[str, float | None] | None = None
    fingerprint: str = ""


def _stage(stage: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except PipelineError:
        raise
    except (BiblioRankError, OSError, ValueError) as exc:
        raise PipelineError(stage, str(exc)) from exc


def build_report(
    corpus: Corpus,
    graph: CitationGraph,
    thesaurus: Thesaurus,
    geo: GeoTable,
    cfg: RankingConfig,
    parse_result: ParseResult | None = None,
) -> ReportResult:
    """Assemble the full report from already-loaded inputs."""
    with _gc_paused():
        return _build_report(corpus, graph, thesaurus, geo, cfg, parse_result)


def _build_report(
    corpus: Corpus,
    graph: CitationGraph,
    thesaurus: Thesaurus,
    geo: GeoTable,
    cfg: RankingConfig,
    parse_result: ParseResult | None = None,
) -> ReportResult:
    table, validation = _stage("assign", assign_corpus, corpus, thesaurus, None, cfg.assignment)

    incl = cfg.inclusion
    citation_counts = {
        pub.id: countable_citations(pub, graph, incl)
        for pub in corpus
        if inclusion_weight(pub, incl) > 0.0
    }
    cells = _stage("normalize", build_cells, corpus, graph, incl, citation_counts=citation_counts)
    pub_stats = _stage(
        "indicators", compute_pub_stats, corpus, graph, cells, geo, incl, citation_counts
    )
    selection = _stage("select", select_universities, corpus, table, cfg)
    indicator_rows = _stage(
        "indicators",
        compute_indicator_table,
        corpus,
        table,
        pub_stats,
        cfg.scheme,
        selection.institutions,
    )

    counterpart: dict[str, float | None] | None = None
    if cfg.figures_dir is not None:
        other = (
            CountingScheme.FULL
            if cfg.scheme is CountingScheme.FRACTIONAL
            else CountingScheme.FRACTIONAL
        )
        counterpart = {
            inst: row.pp_top10
            for inst, row in compute_indicator_table(
                corpus, table, pub_stats, other, selection.institutions
            ).items()
        }

    fingerprint = cfg.fingerprint()
    rows: list[IndicatorReport] = []
    for inst in selection.institutions:
        row = indicator_rows[inst]
        info = thesaurus.institution(inst)
        row.display_name = info.display_name
        row.country = info.country
        row.config_fingerprint = fingerprint
        if cfg.bootstrap_samples > 0 and row.p > 0.0:
            matrix = institution_matrix(inst, corpus, table, pub_stats, cfg.scheme)
            if len(matrix) > 0:
                row.intervals = _stage(
                    "stability",
                    bootstrap_intervals,
                    matrix,
                    INDICATOR_STATISTICS,
                    cfg.bootstrap_samples,
                    cfg.bootstrap_level,
                    institution_seed(cfg.seed, inst),
                )
        rows.append(row)

    summary = _build_summary(
        corpus, parse_result, validation, cells, table, selection, rows, cfg
    )
    return ReportResult(
        rows=rows,
        summary=summary,
        selection=selection,
        validation=validation,
        parse_result=parse_result
        or ParseResult(corpus, [], len(corpus.publications)),
        cells=cells,
        counterpart_pp_top10=counterpart,
        fingerprint=fingerprint,
    )


def _build_summary(
    corpus: Corpus,
    parse_result: ParseResult | None,
    validation: AssignmentValidationReport,
    cells: CellTable,
    table: AssignmentTable,
    selection: Selection,
    rows: Sequence[IndicatorReport],
    cfg: RankingConfig,
) -> ReportSummary:
    incl = cfg.inclusion
    included = 0
    weight_total = 0.0
    base_pubs = 0
    non_english = 0
    selected = set(selection.institutions)
    selected_pubs = 0
    for pub in corpus:
        in_base = (
            incl.year_min <= pub.year <= incl.year_max and not pub.is_arts_humanities
        )
        if in_base:
            base_pubs += 1
            if pub.language != "en":
                non_english += 1
        w = inclusion_weight(pub, incl)
        if w > 0.0:
            included += 1
            weight_total += w
            if any(
                link.institution_id in selected
                for link in table.links_of_publication(pub.id)
            ):
                selected_pubs += 1
    countries = Counter(row.country for row in rows)
    return ReportSummary(
        records_read=parse_result.record_count if parse_result else len(corpus.publications),
        records_rejected=len(parse_result.rejections) if parse_result else 0,
        corpus_publications=len(corpus.publications),
        included_publications=included,
        included_weight=weight_total,
        non_english_share=non_english / base_pubs if base_pubs else 0.0,
        unmatched_address_rate=validation.unmatched_rate,
        zero_mean_cells=len(cells.zero_mean_keys),
        institutions_linked=len(table.by_institution),
        institutions_eligible=selection.eligible_count,
        institutions_selected=len(selection.institutions),
        selected_publication_share=selected_pubs / included if included else 0.0,
        country_counts=dict(countries),
        notice=selection.notice,
    )


def generate_report(cfg: RankingConfig) -> ReportResult:
    """Run the whole pipeline from the configured input files.

    Cyclic GC is suspended for the duration: the pipeline allocates millions
    of acyclic objects that all stay live, so collections are pure overhead.
    """
    with _gc_paused():
        parse_result = _stage("parse", parse_corpus, cfg.publications_path)
        corpus = parse_result.corpus
        graph = _stage("citations", load_citation_graph, cfg.citations_path, corpus)
        thesaurus = _stage(
            "thesaurus", load_thesaurus, cfg.thesaurus_path, cfg.institutions_path
        )
        geo = _stage("geo", load_geo_table, cfg.geo_path) if cfg.geo_path else GeoTable()
        return _build_report(corpus, graph, thesaurus, geo, cfg, parse_result)


# ---------------------------------------------------------------------------
# Delimited export
# ---------------------------------------------------------------------------

NULL_MARKER = "NA"

_PROPORTIONS = {
    "pp_top5",
    "pp_top10",
    "pp_top20",
    "pp_collab",
    "pp_int_collab",
    "pp_gt1000km",
}


def _fmt(name: str, value: float | None) -> str:
    if value is None:
        return NULL_MARKER
    if name == "mgcd_km":
        return f"{value:.1f}"
    return f"{value:.4f}"


def export_columns() -> list[str]:
    cols = ["institution_id", "name", "country"]
    for name in INDICATOR_NAMES:
        cols.append(name)
        cols.append(f"{name}_lo")
        cols.append(f"{name}_hi")
    cols.append("config_fingerprint")
    return cols


def export_csv(rows: Sequence[IndicatorReport], path: str | Path) -> None:
    """Write the report as UTF-8 delimited text (see docs/columns.md).

    Proportions use 4 decimal places, distances 1; undefined indicators and
    missing intervals render as the NA null marker.
    """
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(export_columns())
        for row in rows:
            record: list[str] = [row.institution_id, row.display_name, row.country]
            for name in INDICATOR_NAMES:
                value = getattr(row, name)
                record.append(_fmt(name, value))
                interval = row.intervals.get(name)
                if isinstance(interval, StabilityInterval):
                    record.append(_fmt(name, interval.lower))
                    record.append(_fmt(name, interval.upper))
                else:
                    record.append(NULL_MARKER)
                    record.append(NULL_MARKER)
            record.append(row.config_fingerprint)
            writer.writerow(record)
