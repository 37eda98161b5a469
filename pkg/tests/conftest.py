"""Shared builders and fixtures for the test suite."""

from __future__ import annotations

import pytest

from bibliorank.assignment import (
    Institution,
    Thesaurus,
    ThesaurusEntry,
    VariantKind,
)
from bibliorank.corpus import (
    CitationGraph,
    Corpus,
    DocType,
    InclusionConfig,
    Publication,
    make_address,
    make_author,
)
from bibliorank.geo import GeoTable

_DOC = {d.value: d for d in DocType}


def pub(
    pub_id: str,
    year: int = 2007,
    doc: str = "article",
    lang: str = "en",
    fields=(("physics", 1.0),),
    authors=(("smith", "j"),),
    addrs=("University Alpha",),
    cities=None,
    countries=None,
    geo=None,
    department=None,
    ah: bool = False,
) -> Publication:
    """Terse publication builder for hand-made corpora."""
    cities = cities or [""] * len(addrs)
    countries = countries or [""] * len(addrs)
    geo = geo or [None] * len(addrs)
    department = department or [""] * len(addrs)
    return Publication.create(
        id=pub_id,
        year=year,
        doc_type=_DOC[doc],
        language=lang,
        fields=fields,
        authors=[make_author(last, init) for last, init in authors],
        addresses=[
            make_address(raw, city, country, dept, g)
            for raw, city, country, dept, g in zip(addrs, cities, countries, department, geo)
        ],
        is_arts_humanities=ah,
    )


def corpus_and_graph(pubs, edges=()) -> tuple[Corpus, CitationGraph]:
    corpus = Corpus(pubs)
    return corpus, CitationGraph(edges, corpus)


def variant(tokens: str, inst: str, count: int = 10, kind: str = "university") -> ThesaurusEntry:
    return ThesaurusEntry(
        variant_tokens=tuple(tokens.split()),
        institution_id=inst,
        occurrence_count=count,
        kind=VariantKind(kind),
    )


@pytest.fixture
def loose_cfg() -> InclusionConfig:
    """All languages, self-citations kept: isolates the rule under test."""
    return InclusionConfig(english_only=False, exclude_self_citations=False)


@pytest.fixture
def alpha_thesaurus() -> Thesaurus:
    return Thesaurus(
        [
            variant("university alpha", "alpha"),
            variant("university beta", "beta"),
        ],
        [
            Institution("alpha", "University Alpha", "US"),
            Institution("beta", "University Beta", "DE"),
        ],
    )


@pytest.fixture
def empty_geo() -> GeoTable:
    return GeoTable()
