"""Per-institution output, impact, and collaboration indicators.

All indicators are weighted means over an institution's linked publications,
with weight inclusion_weight x institution_weight.  Under full counting the
institution weight is 1 for every link; under fractional counting it is the
linked address share, so a publication's weight is split across the
institutions on its address list.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, NamedTuple, Sequence

from .assignment import AssignmentLink, AssignmentTable
from .corpus import (
    CitationGraph,
    Corpus,
    InclusionConfig,
    Publication,
    countable_citations,
    inclusion_weight,
)
from .errors import ConsistencyError, UnknownInstitutionError
from .geo import GeoTable, collaboration_distance_km
from .normalization import CellTable, membership_from_citations, score_from_citations

LONG_DISTANCE_KM = 1000.0


class CountingScheme(str, Enum):
    FULL = "full"
    FRACTIONAL = "fractional"


@dataclass
class IndicatorReport:
    """One institution's indicator row.

    Indicators other than output are None when the institution has no
    weighted output (P = 0); exports render those as explicit null markers.
    """

    institution_id: str
    display_name: str = ""
    country: str = ""
    p: float = 0.0
    mcs: float | None = None
    mncs: float | None = None
    pp_top5: float | None = None
    pp_top10: float | None = None
    pp_top20: float | None = None
    pp_collab: float | None = None
    pp_int_collab: float | None = None
    mgcd_km: float | None = None
    pp_gt1000km: float | None = None
    config_fingerprint: str = ""
    intervals: dict[str, object] = field(default_factory=dict)


INDICATOR_NAMES = (
    "p",
    "mcs",
    "mncs",
    "pp_top5",
    "pp_top10",
    "pp_top20",
    "pp_collab",
    "pp_int_collab",
    "mgcd_km",
    "pp_gt1000km",
)


def institution_weight(
    pub: Publication,
    institution_id: str,
    table: AssignmentTable,
    scheme: CountingScheme,
) -> float:
    """Counting-scheme weight of a publication for one institution.

    Full counting: 1 for any link.  Fractional counting: linked address count
    over the publication's total address count (round-two links count their
    hospital addresses as matched).  0 when no link exists.
    """
    for link in table.links_of_publication(pub.id):
        if link.institution_id == institution_id:
            if scheme is CountingScheme.FULL:
                return 1.0
            total = len(pub.addresses)
            if total == 0:
                return 0.0
            return link.matched_address_count / total
    return 0.0


# ---------------------------------------------------------------------------
# Per-publication statistics reused by every indicator
# ---------------------------------------------------------------------------


class PubStats(NamedTuple):
    """Indicator inputs for one included publication."""

    inclusion: float
    citations: int
    norm_score: float
    top5: float
    top10: float
    top20: float
    collaborative: bool
    international: bool
    distance_km: float

    @property
    def long_distance(self) -> bool:
        return self.distance_km > LONG_DISTANCE_KM


def is_collaborative(pub: Publication) -> bool:
    """Two or more distinct normalized organizations on the address list."""
    return len({a.org_tokens for a in pub.addresses}) >= 2


def is_international(pub: Publication) -> bool:
    """Two or more distinct (non-empty) countries on the address list."""
    return len({a.country for a in pub.addresses if a.country}) >= 2


def compute_pub_stats(
    corpus: Corpus,
    graph: CitationGraph,
    cells: CellTable,
    geo: GeoTable,
    cfg: InclusionConfig,
    citation_counts: Mapping[str, int] | None = None,
) -> dict[str, PubStats]:
    """PubStats for every included publication, keyed by id.

    Fuses the normalized score and the three band memberships into one pass
    over a publication's cells; equivalent to the individual operations.
    """
    stats: dict[str, PubStats] = {}
    get_cell = cells.cells.get
    for pub in corpus:
        w0 = inclusion_weight(pub, cfg)
        if w0 == 0.0:
            continue
        if citation_counts is not None:
            cites = citation_counts[pub.id]
        else:
            cites = countable_citations(pub, graph, cfg)

        score = m5 = m10 = m20 = 0.0
        year = pub.year
        doc_type = pub.doc_type.value
        for label, frac in pub.fields:
            cell = get_cell((label, year, doc_type))
            if cell is None:
                raise ConsistencyError(
                    f"publication {pub.id!r} has no cell "
                    f"{(label, year, doc_type)!r}; cell table was built from "
                    "a different corpus or config"
                )
            if cell.expected_citations > 0.0:
                score += frac * (cites / cell.expected_citations)
            thresholds = cell.top_thresholds
            t, tie = thresholds[5]
            if cites > t:
                m5 += frac
            elif cites == t:
                m5 += frac * tie
            t, tie = thresholds[10]
            if cites > t:
                m10 += frac
            elif cites == t:
                m10 += frac * tie
            t, tie = thresholds[20]
            if cites > t:
                m20 += frac
            elif cites == t:
                m20 += frac * tie

        n_addr = len(pub.addresses)
        stats[pub.id] = PubStats(
            inclusion=w0,
            citations=cites,
            norm_score=score,
            top5=m5,
            top10=m10,
            top20=m20,
            collaborative=n_addr >= 2 and is_collaborative(pub),
            international=n_addr >= 2 and is_international(pub),
            distance_km=collaboration_distance_km(pub, geo) if n_addr >= 2 else 0.0,
        )
    return stats


def _institution_links(
    institution_id: str, table: AssignmentTable
) -> list[AssignmentLink]:
    links = table.links_of_institution(institution_id)
    if not links and institution_id not in table.by_institution:
        raise UnknownInstitutionError(
            f"institution {institution_id!r} has no assignment links"
        )
    return links


def _link_weight(
    link: AssignmentLink, pub: Publication, scheme: CountingScheme
) -> float:
    if scheme is CountingScheme.FULL:
        return 1.0
    total = len(pub.addresses)
    return link.matched_address_count / total if total else 0.0


def weighted_publications(
    institution_id: str,
    corpus: Corpus,
    table: AssignmentTable,
    cfg: InclusionConfig,
    scheme: CountingScheme,
) -> list[tuple[Publication, float]]:
    """(publication, inclusion x institution weight) for all included links."""
    out = []
    for link in _institution_links(institution_id, table):
        pub = corpus.by_id[link.publication_id]
        w0 = inclusion_weight(pub, cfg)
        if w0 == 0.0:
            continue
        out.append((pub, w0 * _link_weight(link, pub, scheme)))
    return out


# ---------------------------------------------------------------------------
# Individual indicator operations
# ---------------------------------------------------------------------------


def compute_p(
    institution_id: str,
    corpus: Corpus,
    table: AssignmentTable,
    cfg: InclusionConfig,
    scheme: CountingScheme,
) -> float:
    """Weighted publication output."""
    return sum(w for _, w in weighted_publications(institution_id, corpus, table, cfg, scheme))


def _weighted_mean(pairs: Iterable[tuple[float, float]]) -> float | None:
    """Mean of values weighted by weights; None when total weight is zero."""
    num = 0.0
    den = 0.0
    for value, weight in pairs:
        num += value * weight
        den += weight
    return num / den if den > 0.0 else None


def compute_mcs(
    institution_id: str,
    corpus: Corpus,
    graph: CitationGraph,
    table: AssignmentTable,
    cfg: InclusionConfig,
    scheme: CountingScheme,
) -> float | None:
    """Mean citations per publication; None when P = 0."""
    return _weighted_mean(
        (countable_citations(pub, graph, cfg), w)
        for pub, w in weighted_publications(institution_id, corpus, table, cfg, scheme)
    )


def compute_mncs(
    institution_id: str,
    corpus: Corpus,
    graph: CitationGraph,
    table: AssignmentTable,
    cells: CellTable,
    cfg: InclusionConfig,
    scheme: CountingScheme,
) -> float | None:
    """Mean field-normalized citation score; 1.0 is the reference average."""
    return _weighted_mean(
        (
            score_from_citations(countable_citations(pub, graph, cfg), pub, cells),
            w,
        )
        for pub, w in weighted_publications(institution_id, corpus, table, cfg, scheme)
    )


def compute_pp_top(
    institution_id: str,
    percent: int,
    corpus: Corpus,
    graph: CitationGraph,
    table: AssignmentTable,
    cells: CellTable,
    cfg: InclusionConfig,
    scheme: CountingScheme,
) -> float | None:
    """Weighted share of publications in the top percent band of their cells."""
    return _weighted_mean(
        (
            membership_from_citations(
                countable_citations(pub, graph, cfg), percent, pub, cells
            ),
            w,
        )
        for pub, w in weighted_publications(institution_id, corpus, table, cfg, scheme)
    )


def compute_collab_indicators(
    institution_id: str,
    corpus: Corpus,
    table: AssignmentTable,
    geo: GeoTable,
    cfg: InclusionConfig,
    scheme: CountingScheme,
) -> tuple[float | None, float | None, float | None, float | None]:
    """(PP_collab, PP_int_collab, MGCD km, PP_>1000km); Nones when P = 0."""
    pubs = weighted_publications(institution_id, corpus, table, cfg, scheme)
    distances = [(pub, w, collaboration_distance_km(pub, geo)) for pub, w in pubs]
    return (
        _weighted_mean((1.0 if is_collaborative(p) else 0.0, w) for p, w in pubs),
        _weighted_mean((1.0 if is_international(p) else 0.0, w) for p, w in pubs),
        _weighted_mean((d, w) for _, w, d in distances),
        _weighted_mean(
            (1.0 if d > LONG_DISTANCE_KM else 0.0, w) for _, w, d in distances
        ),
    )


# ---------------------------------------------------------------------------
# Bulk table computation
# ---------------------------------------------------------------------------


def compute_indicator_table(
    corpus: Corpus,
    table: AssignmentTable,
    pub_stats: Mapping[str, PubStats],
    scheme: CountingScheme,
    institutions: Sequence[str] | None = None,
) -> dict[str, IndicatorReport]:
    """All indicators for all (or the given) institutions in one pass.

    Equivalent to calling the individual operations per institution, but
    shares the per-publication statistics across institutions.
    """
    if institutions is None:
        wanted = None
    else:
        wanted = set(institutions)
    sums: dict[str, list[float]] = {}
    by_id = corpus.by_id
    full = scheme is CountingScheme.FULL
    for link in table.links:
        inst = link.institution_id
        if wanted is not None and inst not in wanted:
            continue
        ps = pub_stats.get(link.publication_id)
        if ps is None:
            continue
        if full:
            w = ps.inclusion
        else:
            total = len(by_id[link.publication_id].addresses)
            w = ps.inclusion * (link.matched_address_count / total) if total else 0.0
        acc = sums.get(inst)
        if acc is None:
            acc = sums[inst] = [0.0] * 10
        acc[0] += w
        acc[1] += w * ps.citations
        acc[2] += w * ps.norm_score
        acc[3] += w * ps.top5
        acc[4] += w * ps.top10
        acc[5] += w * ps.top20
        if ps.collaborative:
            acc[6] += w
        if ps.international:
            acc[7] += w
        acc[8] += w * ps.distance_km
        if ps.distance_km > LONG_DISTANCE_KM:
            acc[9] += w

    reports: dict[str, IndicatorReport] = {}
    targets = sorted(sums) if institutions is None else list(institutions)
    for inst in targets:
        acc = sums.get(inst)
        report = IndicatorReport(institution_id=inst)
        if acc is not None and acc[0] > 0.0:
            p = acc[0]
            report.p = p
            report.mcs = acc[1] / p
            report.mncs = acc[2] / p
            report.pp_top5 = acc[3] / p
            report.pp_top10 = acc[4] / p
            report.pp_top20 = acc[5] / p
            report.pp_collab = acc[6] / p
            report.pp_int_collab = acc[7] / p
            report.mgcd_km = acc[8] / p
            report.pp_gt1000km = acc[9] / p
        reports[inst] = report
    return reports


def pearson_correlation(xs: Sequence[float], ys: Sequence[float]) -> float | None:
    """Sample Pearson correlation; None when either variance is zero."""
    n = len(xs)
    if n != len(ys):
        raise ValueError(f"length mismatch: {n} vs {len(ys)}")
    if n < 2:
        raise ValueError("need at least two points")
    mean_x = math.fsum(xs) / n
    mean_y = math.fsum(ys) / n
    sxx = math.fsum((x - mean_x) ** 2 for x in xs)
    syy = math.fsum((y - mean_y) ** 2 for y in ys)
    if sxx == 0.0 or syy == 0.0:
        return None
    sxy = math.fsum((x - mean_x) * (y - mean_y) for x, y in zip(xs, ys))
    return sxy / math.sqrt(sxx * syy)


def field_citation_mean_ratio(
    corpus: Corpus,
    graph: CitationGraph,
    cfg: InclusionConfig,
    citation_counts: Mapping[str, int] | None = None,
) -> dict[str, float | None]:
    """Per-field ratio of address-weighted to unweighted mean citations.

    A ratio above 1 indicates that publications with more addresses are cited
    more, the mechanism behind the full-counting inflation of averages.  Both
    means use inclusion weight x field fraction as the base weight; the
    weighted mean additionally multiplies by the address count.
    """
    num_w: dict[str, float] = {}
    den_w: dict[str, float] = {}
    num_u: dict[str, float] = {}
    den_u: dict[str, float] = {}
    for pub in corpus:
        w0 = inclusion_weight(pub, cfg)
        if w0 == 0.0:
            continue
        if citation_counts is not None:
            cites = citation_counts[pub.id]
        else:
            cites = countable_citations(pub, graph, cfg)
        n_addr = len(pub.addresses)
        for label, frac in pub.fields:
            base = w0 * frac
            num_u[label] = num_u.get(label, 0.0) + base * cites
            den_u[label] = den_u.get(label, 0.0) + base
            num_w[label] = num_w.get(label, 0.0) + base * n_addr * cites
            den_w[label] = den_w.get(label, 0.0) + base * n_addr
    ratios: dict[str, float | None] = {}
    for label in sorted(den_u):
        if den_w.get(label, 0.0) > 0.0 and den_u[label] > 0.0 and num_u[label] > 0.0:
            weighted = num_w[label] / den_w[label]
            unweighted = num_u[label] / den_u[label]
            ratios[label] = weighted / unweighted
        else:
            ratios[label] = None
    return ratios
