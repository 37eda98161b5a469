"""Brute-force indicator oracle for differential testing.

Everything here is recomputed by literal enumeration over the bundle's
publications, citation edges, ground-truth assignment links, and coordinate
entries.  It deliberately shares no computation code with the engine (only
the domain types), trading speed for obviousness: plain loops, fsum, and a
from-scratch haversine.  Intended for bundles of a few thousand publications.
"""

from __future__ import annotations

from math import asin, cos, fsum, radians, sin, sqrt
from typing import Mapping

from .corpus import InclusionConfig, Publication
from .indicators import CountingScheme
from .synthkit import SynthBundle

ORACLE_INDICATORS = (
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


def _weight(pub: Publication, cfg: InclusionConfig) -> float:
    if pub.year < cfg.year_min or pub.year > cfg.year_max:
        return 0.0
    if pub.is_arts_humanities:
        return 0.0
    if cfg.english_only and pub.language != "en":
        return 0.0
    if pub.doc_type.value == "letter":
        return cfg.letter_weight
    return 1.0


def _citations(bundle: SynthBundle, cfg: InclusionConfig) -> dict[str, int]:
    by_id = bundle.corpus.by_id
    counts = {pub.id: 0 for pub in bundle.corpus}
    for citing_id, cited_id in bundle.graph.edges():
        citing = by_id[citing_id]
        cited = by_id[cited_id]
        if citing.year > cfg.citation_window_end:
            continue
        if cfg.exclude_self_citations:
            shared = False
            for name in citing.author_keys:
                if name in cited.author_keys:
                    shared = True
                    break
            if shared:
                continue
        counts[cited_id] += 1
    return counts


def _cells(
    bundle: SynthBundle, cfg: InclusionConfig, citations: Mapping[str, int]
) -> dict[tuple[str, int, str], list[tuple[int, float]]]:
    cells: dict[tuple[str, int, str], list[tuple[int, float]]] = {}
    for pub in bundle.corpus:
        w = _weight(pub, cfg)
        if w == 0.0:
            continue
        for label, frac in pub.fields:
            key = (label, pub.year, pub.doc_type.value)
            cells.setdefault(key, []).append((citations[pub.id], w * frac))
    return cells


def _cell_mean(members: list[tuple[int, float]]) -> float:
    total = fsum(w for _, w in members)
    return fsum(c * w for c, w in members) / total


def _cell_band(members: list[tuple[int, float]], percent: int) -> tuple[int, float]:
    """Threshold and tie share giving the cell exactly percent% of its weight."""
    total = fsum(w for _, w in members)
    target = percent / 100.0 * total
    values = sorted({c for c, _ in members}, reverse=True)
    above = 0.0
    for value in values:
        at_value = fsum(w for c, w in members if c == value)
        if above + at_value >= target or value == values[-1]:
            tie = (target - above) / at_value
            return value, min(max(tie, 0.0), 1.0)
        above += at_value
    raise AssertionError("unreachable: band target exceeds total weight")


def _membership(
    cites: int, pub: Publication, percent: int, bands: Mapping
) -> float:
    share = 0.0
    for label, frac in pub.fields:
        threshold, tie = bands[(label, pub.year, pub.doc_type.value, percent)]
        if cites > threshold:
            share += frac
        elif cites == threshold:
            share += frac * tie
    return share


def _norm_score(
    cites: int, pub: Publication, means: Mapping[tuple[str, int, str], float]
) -> float:
    score = 0.0
    for label, frac in pub.fields:
        mean = means[(label, pub.year, pub.doc_type.value)]
        if mean > 0.0:
            score += frac * cites / mean
    return score


def _haversine_km(a: tuple[float, float], b: tuple[float, float]) -> float:
    lat1, lon1, lat2, lon2 = map(radians, (a[0], a[1], b[0], b[1]))
    s = (
        sin((lat2 - lat1) / 2.0) ** 2
        + cos(lat1) * cos(lat2) * sin((lon2 - lon1) / 2.0) ** 2
    )
    return 2.0 * 6371.0 * asin(sqrt(s))


def _max_distance(pub: Publication, bundle: SynthBundle) -> float:
    points = []
    for addr in pub.addresses:
        coords = bundle.geo.entries.get(addr.geo_key)
        if coords is None:
            coords = addr.geo
        if coords is not None and coords not in points:
            points.append(coords)
    best = 0.0
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            d = _haversine_km(points[i], points[j])
            if d > best:
                best = d
    return best


def oracle_indicator(
    name: str,
    institution_id: str,
    bundle: SynthBundle,
    cfg: InclusionConfig,
    scheme: CountingScheme = CountingScheme.FRACTIONAL,
) -> float | None:
    """Indicator value by direct enumeration; None when output weight is zero.

    Uses the bundle's ground-truth assignment links, so it is independent of
    the engine's thesaurus matcher as well as of its indicator code.
    """
    if name not in ORACLE_INDICATORS:
        raise ValueError(f"unknown indicator {name!r}")
    citations = _citations(bundle, cfg)
    cells = _cells(bundle, cfg, citations)
    means = {key: _cell_mean(members) for key, members in cells.items()}
    bands = {
        (key[0], key[1], key[2], percent): _cell_band(members, percent)
        for key, members in cells.items()
        for percent in (5, 10, 20)
    }

    by_id = bundle.corpus.by_id
    weighted: list[tuple[Publication, float]] = []
    for link in bundle.ground_truth.links:
        if link.institution_id != institution_id:
            continue
        pub = by_id[link.publication_id]
        w = _weight(pub, cfg)
        if w == 0.0:
            continue
        if scheme is CountingScheme.FRACTIONAL:
            w *= link.matched_address_count / len(pub.addresses)
        weighted.append((pub, w))

    total = fsum(w for _, w in weighted)
    if name == "p":
        return total
    if total == 0.0:
        return None

    def mean_of(values: list[float]) -> float:
        return fsum(v * w for v, (_, w) in zip(values, weighted)) / total

    if name == "mcs":
        return mean_of([float(citations[p.id]) for p, _ in weighted])
    if name == "mncs":
        return mean_of([_norm_score(citations[p.id], p, means) for p, _ in weighted])
    if name in ("pp_top5", "pp_top10", "pp_top20"):
        percent = int(name.rsplit("top", 1)[1])
        return mean_of(
            [_membership(citations[p.id], p, percent, bands) for p, _ in weighted]
        )
    if name == "pp_collab":
        return mean_of(
            [1.0 if len({a.org_tokens for a in p.addresses}) >= 2 else 0.0 for p, _ in weighted]
        )
    if name == "pp_int_collab":
        return mean_of(
            [
                1.0 if len({a.country for a in p.addresses if a.country}) >= 2 else 0.0
                for p, _ in weighted
            ]
        )
    if name == "mgcd_km":
        return mean_of([_max_distance(p, bundle) for p, _ in weighted])
    if name == "pp_gt1000km":
        return mean_of(
            [1.0 if _max_distance(p, bundle) > 1000.0 else 0.0 for p, _ in weighted]
        )
    raise AssertionError(name)


def oracle_all_indicators(
    institution_id: str,
    bundle: SynthBundle,
    cfg: InclusionConfig,
    scheme: CountingScheme = CountingScheme.FRACTIONAL,
) -> dict[str, float | None]:
    return {
        name: oracle_indicator(name, institution_id, bundle, cfg, scheme)
        for name in ORACLE_INDICATORS
    }
