"""Deterministic synthetic corpus bundles with known ground truth.

The generator produces a mutually consistent corpus, citation graph,
thesaurus, and coordinate table in which every institutional address is an
exact thesaurus variant, so the expected assignment links are known exactly.
Citation counts follow a negative-binomial family whose mean can be boosted
for multi-address publications (to exercise counting-method effects), and
extremely highly cited outliers can be injected through stub citing records
placed just outside the publication window.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .assignment import (
    AssignmentLink,
    AssignmentTable,
    Institution,
    Round,
    Thesaurus,
    ThesaurusEntry,
    VariantKind,
    write_assignment_table,
    write_thesaurus,
)
from .corpus import (
    Address,
    CitationGraph,
    Corpus,
    DocType,
    Publication,
    make_address,
    make_author,
    write_citation_graph,
    write_corpus,
)
from .errors import GenerationError
from .geo import GeoTable, write_geo_table

_COUNTRIES = (
    "US", "DE", "GB", "CN", "IT", "JP", "CA", "FR", "KR", "ES", "AU", "NL",
)

_DOC_TYPE_BY_CODE = (DocType.ARTICLE, DocType.REVIEW, DocType.LETTER)


@dataclass(frozen=True)
class SynthParams:
    n_institutions: int = 10
    n_publications: int = 1000
    fields: tuple[str, ...] = ("physics", "chemistry", "medicine")
    year_min: int = 2005
    year_max: int = 2009
    collaboration_rate: float = 0.3
    international_rate: float = 0.5
    citation_mean: float = 4.0
    citation_dispersion: float = 2.0
    collab_citation_boost: float = 1.0
    outlier_count: int = 0
    outlier_citations: int = 0
    outlier_host_institution: int | None = None
    language_mix: tuple[tuple[str, float], ...] = (("en", 1.0),)
    letter_share: float = 0.1
    review_share: float = 0.1
    multi_field_rate: float = 0.2
    unmatchable_rate: float = 0.0
    ensure_nonzero_cells: bool = True
    seed: int = 0

    def validate(self) -> None:
        rates = {
            "collaboration_rate": self.collaboration_rate,
            "international_rate": self.international_rate,
            "letter_share": self.letter_share,
            "review_share": self.review_share,
            "multi_field_rate": self.multi_field_rate,
            "unmatchable_rate": self.unmatchable_rate,
        }
        for name, rate in rates.items():
            if not 0.0 <= rate <= 1.0:
                raise GenerationError(f"{name} must be in [0, 1], got {rate}")
        if self.n_publications < self.n_institutions:
            raise GenerationError(
                f"n_publications {self.n_publications} < n_institutions {self.n_institutions}"
            )
        if self.n_institutions < 1:
            raise GenerationError("need at least one institution")
        if not self.fields:
            raise GenerationError("need at least one field label")
        if self.year_min > self.year_max:
            raise GenerationError(f"empty year range {self.year_min}..{self.year_max}")
        if self.letter_share + self.review_share > 1.0:
            raise GenerationError("letter_share + review_share exceeds 1")
        if self.citation_mean < 0 or self.citation_dispersion <= 0:
            raise GenerationError("citation distribution parameters out of range")
        if self.collab_citation_boost <= 0:
            raise GenerationError("collab_citation_boost must be positive")
        if abs(sum(p for _, p in self.language_mix) - 1.0) > 1e-9:
            raise GenerationError("language_mix probabilities must sum to 1")
        if self.outlier_count < 0 or self.outlier_citations < 0:
            raise GenerationError("outlier parameters must be non-negative")
        if self.outlier_host_institution is not None and not (
            0 <= self.outlier_host_institution < self.n_institutions
        ):
            raise GenerationError("outlier_host_institution out of range")


@dataclass
class GroundTruth:
    """Generator-known facts for verification against engine output."""

    links: AssignmentTable
    outlier_ids: tuple[str, ...] = ()
    unmatchable_addresses: int = 0
    total_addresses: int = 0
    stub_count: int = 0


@dataclass
class SynthBundle:
    params: SynthParams
    corpus: Corpus
    graph: CitationGraph
    thesaurus: Thesaurus
    geo: GeoTable
    ground_truth: GroundTruth

    # stub citing records sit one year past the publication window, so the
    # default citation window (year_max + 1) counts their citations while the
    # records themselves stay outside every indicator
    @property
    def stub_year(self) -> int:
        return self.params.year_max + 1


def _institution_id(i: int) -> str:
    return f"inst{i:04d}"


def _variants(i: int) -> tuple[str, str]:
    return (f"University {i:04d}", f"U{i:04d} Tech")


def generate(params: SynthParams) -> SynthBundle:
    """Build a fully consistent bundle; byte-identical for identical params."""
    params.validate()
    rng = np.random.default_rng(params.seed)
    n = params.n_publications
    k = params.n_institutions
    n_fields = len(params.fields)

    # institutions, thesaurus, coordinates
    inst_ids = [_institution_id(i) for i in range(k)]
    inst_country = [_COUNTRIES[i % len(_COUNTRIES)] for i in range(k)]
    inst_city = [f"City {i:04d}" for i in range(k)]
    lat = rng.uniform(-60.0, 70.0, size=k)
    lon = rng.uniform(-180.0, 180.0, size=k)
    entries = []
    geo_entries: list[tuple[str, tuple[float, float]]] = []
    institutions = []
    for i in range(k):
        institutions.append(Institution(inst_ids[i], _variants(i)[0], inst_country[i]))
        for variant in _variants(i):
            entries.append(
                ThesaurusEntry(
                    variant_tokens=tuple(variant.lower().split()),
                    institution_id=inst_ids[i],
                    occurrence_count=10,
                    kind=VariantKind.UNIVERSITY,
                )
            )
            probe = make_address(variant, inst_city[i])
            geo_entries.append((probe.geo_key, (float(lat[i]), float(lon[i]))))
    thesaurus = Thesaurus(entries, institutions)
    geo = GeoTable(geo_entries)

    # per-publication attributes (single vectorized pass, fixed draw order)
    years = rng.integers(params.year_min, params.year_max + 1, size=n)
    type_draw = rng.random(n)
    langs = [code for code, _ in params.language_mix]
    lang_idx = rng.choice(len(langs), size=n, p=[p for _, p in params.language_mix])
    field_first = rng.integers(0, n_fields, size=n)
    multi_field = rng.random(n) < params.multi_field_rate if n_fields > 1 else np.zeros(n, bool)
    size_weights = np.linspace(1.0, 3.0, k)
    home = rng.choice(k, size=n, p=size_weights / size_weights.sum())
    collab = rng.random(n) < params.collaboration_rate
    intl = rng.random(n) < params.international_rate
    partner_draw = rng.integers(0, k, size=n)
    variant_pick = rng.integers(0, 2, size=(n, 2))
    unmatchable = rng.random(n) < params.unmatchable_rate
    n_authors = rng.integers(1, 5, size=n)
    author_pool = max(20, min(2000, n // 5))
    author_idx = rng.integers(0, author_pool, size=int(n_authors.sum()))

    author_names = [make_author(f"Scholar{j:04d}", chr(ord("a") + j % 26)) for j in range(author_pool)]
    address_cache: dict[tuple[int, int], Address] = {}

    def inst_address(inst: int, variant: int) -> Address:
        addr = address_cache.get((inst, variant))
        if addr is None:
            addr = make_address(
                _variants(inst)[variant], inst_city[inst], inst_country[inst]
            )
            address_cache[(inst, variant)] = addr
        return addr

    letter_cut = params.letter_share
    review_cut = params.letter_share + params.review_share
    pubs: list[Publication] = []
    links: dict[tuple[str, str], int] = {}
    unmatchable_count = 0
    total_addresses = 0
    author_cursor = 0
    for i in range(n):
        pub_id = f"p{i:07d}"
        if type_draw[i] < letter_cut:
            doc_type = DocType.LETTER
        elif type_draw[i] < review_cut:
            doc_type = DocType.REVIEW
        else:
            doc_type = DocType.ARTICLE
        if multi_field[i]:
            f1 = int(field_first[i])
            f2 = (f1 + 1) % n_fields
            fields = ((params.fields[f1], 0.5), (params.fields[f2], 0.5))
        else:
            fields = ((params.fields[int(field_first[i])], 1.0),)

        home_i = int(home[i])
        addresses = [inst_address(home_i, int(variant_pick[i, 0]))]
        inst_of_pub = [home_i]
        if collab[i] and k > 1:
            partner = int(partner_draw[i])
            if intl[i]:
                while inst_country[partner] == inst_country[home_i] or partner == home_i:
                    partner = (partner + 1) % k
                    if partner == int(partner_draw[i]):
                        break
            elif partner == home_i:
                partner = (partner + 1) % k
            if partner != home_i:
                addresses.append(inst_address(partner, int(variant_pick[i, 1])))
                inst_of_pub.append(partner)
        if unmatchable[i]:
            addresses.append(
                make_address(
                    f"Independent Research Group {i}", inst_city[home_i], inst_country[home_i]
                )
            )
            unmatchable_count += 1
        total_addresses += len(addresses)

        count = int(n_authors[i])
        authors = tuple(
            author_names[j] for j in sorted({int(a) for a in author_idx[author_cursor : author_cursor + count]})
        )
        author_cursor += count

        pubs.append(
            Publication.create(
                id=pub_id,
                year=int(years[i]),
                doc_type=doc_type,
                language=langs[int(lang_idx[i])],
                fields=fields,
                authors=authors,
                addresses=addresses,
            )
        )
        for inst in inst_of_pub:
            key = (pub_id, inst_ids[inst])
            links[key] = links.get(key, 0) + 1

    # citation edges among corpus publications (same-or-later year citers)
    n_addr = np.fromiter((len(p.addresses) for p in pubs), dtype=np.int64, count=n)
    means = np.full(n, params.citation_mean)
    means[n_addr >= 2] *= params.collab_citation_boost
    if params.citation_mean > 0:
        disp = params.citation_dispersion
        counts = rng.negative_binomial(disp, disp / (disp + means))
    else:
        counts = np.zeros(n, dtype=np.int64)
    order = np.argsort(years, kind="stable")
    years_sorted = years[order]
    starts = np.searchsorted(years_sorted, years, side="left")
    room = n - starts - 1  # pool minus the publication itself
    counts = np.minimum(counts, room)
    counts = np.maximum(counts, 0)
    total_edges = int(counts.sum())
    edge_cited = np.repeat(np.arange(n), counts)
    if total_edges:
        lows = np.repeat(starts, counts)
        draws = rng.integers(lows, n)
        edge_citing = order[draws]
        keep = edge_citing != edge_cited
        pair_key = edge_citing[keep].astype(np.int64) * n + edge_cited[keep]
        pair_key = np.unique(pair_key)
        edge_citing = pair_key // n
        edge_cited_final = pair_key % n
    else:
        edge_citing = np.empty(0, dtype=np.int64)
        edge_cited_final = np.empty(0, dtype=np.int64)

    edges: list[tuple[str, str]] = [
        (pubs[int(c)].id, pubs[int(d)].id)
        for c, d in zip(edge_citing, edge_cited_final)
    ]

    # outlier injection and cell floor repair use stub citing records so the
    # base corpus above is identical with and without them
    aux = np.random.default_rng(np.random.SeedSequence(entropy=params.seed, spawn_key=(1,)))
    stub_year = params.year_max + 1
    stubs: list[Publication] = []
    outlier_ids: list[str] = []

    def add_stub(target_id: str, field_label: str) -> None:
        idx = len(stubs)
        stub = Publication.create(
            id=f"stub{idx:07d}",
            year=stub_year,
            doc_type=DocType.ARTICLE,
            language="en",
            fields=((field_label, 1.0),),
            authors=(make_author(f"Stubwriter{idx:07d}", "z"),),
            addresses=(),
        )
        stubs.append(stub)
        edges.append((stub.id, target_id))

    if params.outlier_count > 0 and params.outlier_citations > 0:
        by_inst: dict[int, list[int]] = {}
        for i in range(n):
            by_inst.setdefault(int(home[i]), []).append(i)
        for o in range(params.outlier_count):
            if params.outlier_host_institution is not None:
                host_inst = params.outlier_host_institution
            else:
                host_inst = int(aux.integers(0, k))
            candidates = by_inst.get(host_inst, [])
            if not candidates:
                raise GenerationError(
                    f"outlier host institution {host_inst} has no publications"
                )
            host = pubs[candidates[o % len(candidates)]]
            outlier_ids.append(host.id)
            for _ in range(params.outlier_citations):
                add_stub(host.id, host.fields[0][0])

    if params.ensure_nonzero_cells:
        _repair_zero_cells(pubs, edges, add_stub)

    corpus = Corpus(pubs + stubs)
    graph = CitationGraph(edges, corpus)
    table = AssignmentTable(
        AssignmentLink(pub_id, inst_id, count, Round.ONE)
        for (pub_id, inst_id), count in links.items()
    )
    ground_truth = GroundTruth(
        links=table,
        outlier_ids=tuple(outlier_ids),
        unmatchable_addresses=unmatchable_count,
        total_addresses=total_addresses,
        stub_count=len(stubs),
    )
    return SynthBundle(params, corpus, graph, thesaurus, geo, ground_truth)


def _repair_zero_cells(pubs, edges, add_stub) -> None:
    """Give every (field, year, doc type) cell at least one publication whose
    citations survive self-citation exclusion, for the full corpus and for its
    English-language subset.

    Cells whose members all have zero robust citations would make the
    normalized-score average undefined at that cell; one stub citation on the
    cell's first member fixes that without touching anything else.
    """
    in_edges: dict[str, list[int]] = {}
    by_id = {p.id: i for i, p in enumerate(pubs)}
    for citing_id, cited_id in edges:
        if citing_id in by_id and cited_id in by_id:
            in_edges.setdefault(cited_id, []).append(by_id[citing_id])

    def robust_citations(pub) -> int:
        count = 0
        for j in in_edges.get(pub.id, []):
            if pub.author_keys.isdisjoint(pubs[j].author_keys):
                count += 1
        return count

    robust = [robust_citations(p) for p in pubs]
    subsets = [lambda p: True]
    if any(p.language != "en" for p in pubs):
        subsets.append(lambda p: p.language == "en")
    for accept in subsets:
        cell_first: dict[tuple[str, int, str], int] = {}
        cell_alive: dict[tuple[str, int, str], bool] = {}
        for i, pub in enumerate(pubs):
            if not accept(pub):
                continue
            for label, _ in pub.fields:
                key = (label, pub.year, pub.doc_type.value)
                if key not in cell_first:
                    cell_first[key] = i
                    cell_alive[key] = False
                if robust[i] > 0:
                    cell_alive[key] = True
        for key, alive in cell_alive.items():
            if not alive:
                i = cell_first[key]
                add_stub(pubs[i].id, key[0])
                robust[i] += 1


def write_bundle(bundle: SynthBundle, out_dir: str | Path) -> dict[str, Path]:
    """Write the bundle in the exact file formats the CLI ingests."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "publications": out / "publications.jsonl",
        "citations": out / "citations.csv",
        "thesaurus": out / "thesaurus.csv",
        "institutions": out / "institutions.csv",
        "geo": out / "geo.csv",
        "ground_truth_links": out / "ground_truth_links.csv",
    }
    write_corpus(bundle.corpus, paths["publications"])
    write_citation_graph(bundle.graph, paths["citations"])
    write_thesaurus(bundle.thesaurus, paths["thesaurus"], paths["institutions"])
    write_geo_table(bundle.geo, paths["geo"])
    write_assignment_table(bundle.ground_truth.links, paths["ground_truth_links"])
    return paths
