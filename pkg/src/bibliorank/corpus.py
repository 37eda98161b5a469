"""Domain model, corpus ingestion, and record-level inclusion rules.

A corpus is read from UTF-8 line-delimited JSON records (see docs/format.md).
Malformed lines are never silently dropped: every non-blank input line ends up
either as a parsed publication or as an entry in the rejection report.
"""

from __future__ import annotations

import csv
import gc
from contextlib import contextmanager
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import IO, Iterable, Iterator, NamedTuple

import msgspec

from .errors import GraphLoadError, IngestError
from .textnorm import normalize_org_name, normalize_person_name

DEFAULT_LETTER_WEIGHT = 0.25

PUBLICATION_SCHEMA = "v1"


class DocType(str, Enum):
    ARTICLE = "article"
    REVIEW = "review"
    LETTER = "letter"


_DOC_TYPES = {d.value: d for d in DocType}


class AuthorName(NamedTuple):
    """Normalized (last name, initials) pair; equality is the self-citation key."""

    last_name: str
    initials: str


class Address(NamedTuple):
    """One affiliation line of a publication.

    ``org_tokens`` is the normalized token form of ``raw``; ``geo_key`` is the
    coordinate-lookup key (org tokens plus city tokens, space-joined).  ``geo``
    carries inline coordinates when the record supplies them; the geo table
    takes precedence at lookup time.
    """

    raw: str
    org_tokens: tuple[str, ...]
    city: str
    country: str
    department: str
    geo: tuple[float, float] | None
    geo_key: str


def make_address(
    raw: str,
    city: str = "",
    country: str = "",
    department: str = "",
    geo: tuple[float, float] | None = None,
) -> Address:
    org_tokens = normalize_org_name(raw)
    key_tokens = org_tokens + normalize_org_name(city)
    return Address(raw, org_tokens, city, country, department, geo, " ".join(key_tokens))


def make_author(last_name: str, initials: str = "") -> AuthorName:
    return AuthorName(*normalize_person_name(last_name, initials))


@dataclass(slots=True)
class Publication:
    """One indexed record.  Treated as immutable once the corpus is built."""

    id: str
    year: int
    doc_type: DocType
    language: str
    fields: tuple[tuple[str, float], ...]
    is_arts_humanities: bool
    authors: tuple[AuthorName, ...]
    addresses: tuple[Address, ...]
    author_keys: frozenset[AuthorName] = field(default=frozenset())

    @staticmethod
    def create(
        id: str,
        year: int,
        doc_type: DocType,
        language: str,
        fields: Iterable[tuple[str, float]],
        authors: Iterable[AuthorName],
        addresses: Iterable[Address],
        is_arts_humanities: bool = False,
    ) -> "Publication":
        authors = tuple(authors)
        return Publication(
            id=id,
            year=year,
            doc_type=doc_type,
            language=language,
            fields=tuple(fields),
            is_arts_humanities=is_arts_humanities,
            authors=authors,
            addresses=tuple(addresses),
            author_keys=frozenset(authors),
        )


@dataclass(frozen=True)
class InclusionConfig:
    """Record-level inclusion rules and document-type weighting.

    Defaults mirror the standard configuration: a 2005-2009 publication
    window, citations counted through 2010, English-language publications
    only, self-citations excluded, and letters at quarter weight.
    """

    year_min: int = 2005
    year_max: int = 2009
    citation_window_end: int = 2010
    english_only: bool = True
    exclude_self_citations: bool = True
    letter_weight: float = DEFAULT_LETTER_WEIGHT

    def __post_init__(self) -> None:
        if self.year_min > self.year_max:
            raise ValueError(f"year_min {self.year_min} > year_max {self.year_max}")
        if not 0.0 < self.letter_weight <= 1.0:
            raise ValueError(f"letter_weight must be in (0, 1], got {self.letter_weight}")


class Corpus:
    """Immutable collection of publications with id lookup.

    Built once by the parser (or the synthetic generator); safe for
    unrestricted concurrent reads afterwards.
    """

    __slots__ = ("publications", "by_id")

    def __init__(self, publications: Iterable[Publication]):
        self.publications: tuple[Publication, ...] = tuple(publications)
        self.by_id: dict[str, Publication] = {p.id: p for p in self.publications}
        if len(self.by_id) != len(self.publications):
            raise ValueError("duplicate publication ids in corpus")

    def __len__(self) -> int:
        return len(self.publications)

    def __iter__(self) -> Iterator[Publication]:
        return iter(self.publications)

    def get(self, pub_id: str) -> Publication | None:
        return self.by_id.get(pub_id)


@dataclass(frozen=True)
class RejectedRecord:
    line_number: int
    reason: str


@dataclass
class ParseResult:
    corpus: Corpus
    rejections: list[RejectedRecord]
    record_count: int  # non-blank input lines; == accepted + rejected


# ---------------------------------------------------------------------------
# Publication parsing
# ---------------------------------------------------------------------------

# Line records are decoded and type-checked by msgspec at C speed; semantic
# validation (fraction sums, coordinate ranges, duplicate ids) stays below.


class _AuthorRec(msgspec.Struct):
    last: str
    initials: str = ""


class _AddressRec(msgspec.Struct):
    org: str
    city: str = ""
    country: str = ""
    department: str = ""
    geo: tuple[float, float] | None = None


class _PubRec(msgspec.Struct):
    id: str
    year: int
    doc_type: DocType
    fields: dict[str, float] | list[str | tuple[str, float]]
    language: str = ""
    authors: list[_AuthorRec] = []
    addresses: list[_AddressRec] = []
    arts_humanities: bool = False


_DECODER = msgspec.json.Decoder(_PubRec)
_ENCODER = msgspec.json.Encoder()


@contextmanager
def _gc_paused():
    """Suspend cyclic GC during bulk object construction."""
    was_enabled = gc.isenabled()
    gc.disable()
    try:
        yield
    finally:
        if was_enabled:
            gc.enable()


def _normalize_fields(value) -> tuple[tuple[str, float], ...]:
    """Accept {label: fraction}, [label, ...] (equal split), or pair lists.

    Fractions must lie in (0, 1] and sum to 1 within 1e-12.
    """
    if isinstance(value, dict):
        pairs = list(value.items())
    else:
        if not value:
            raise ValueError("fields must be non-empty")
        if type(value[0]) is str:
            frac = 1.0 / len(value)
            pairs = []
            for label in value:
                if type(label) is not str:
                    raise ValueError("mixed field forms: use labels or pairs, not both")
                pairs.append((label, frac))
            return tuple(pairs)
        pairs = []
        for item in value:
            if type(item) is str:
                raise ValueError("mixed field forms: use labels or pairs, not both")
            pairs.append(item)
    if not pairs:
        raise ValueError("fields must be non-empty")
    total = 0.0
    for label, frac in pairs:
        if not label:
            raise ValueError("empty field label")
        if not 0.0 < frac <= 1.0:
            raise ValueError(f"field fraction {frac} outside (0, 1]")
        total += frac
    if abs(total - 1.0) > 1e-12:
        raise ValueError(f"field fractions sum to {total!r}, expected 1")
    return tuple(pairs)


def _convert_record(
    rec: _PubRec,
    author_cache: dict,
    address_cache: dict,
) -> Publication:
    if not rec.id:
        raise ValueError("id must be a non-empty string")
    fields = _normalize_fields(rec.fields)

    authors = []
    for a in rec.authors:
        key = (a.last, a.initials)
        author = author_cache.get(key)
        if author is None:
            author = author_cache[key] = AuthorName(*normalize_person_name(*key))
        authors.append(author)
    authors = tuple(authors)

    addresses = []
    for a in rec.addresses:
        key = (a.org, a.city, a.country, a.department, a.geo)
        addr = address_cache.get(key)
        if addr is None:
            if a.geo is not None:
                lat, lon = a.geo
                if not -90.0 <= lat <= 90.0:
                    raise ValueError(f"latitude {lat} outside [-90, 90]")
                if not -180.0 <= lon <= 180.0:
                    raise ValueError(f"longitude {lon} outside [-180, 180]")
            addr = address_cache[key] = make_address(
                a.org, a.city, a.country, a.department, a.geo
            )
        addresses.append(addr)

    return Publication(
        id=rec.id,
        year=rec.year,
        doc_type=rec.doc_type,
        language=rec.language.lower(),
        fields=fields,
        is_arts_humanities=rec.arts_humanities,
        authors=authors,
        addresses=tuple(addresses),
        author_keys=frozenset(authors),
    )


def parse_publication_record(record: dict) -> Publication:
    """Build one Publication from a decoded record dict.

    Raises ValueError (or msgspec.ValidationError for type errors) on
    malformed records.
    """
    rec = msgspec.convert(record, _PubRec)
    return _convert_record(rec, {}, {})


def _open_lines(source: str | Path | IO) -> tuple[IO, bool]:
    if isinstance(source, (str, Path)):
        try:
            return open(source, "rb"), True
        except OSError as exc:
            raise IngestError(f"cannot open publication stream: {exc}") from exc
    return source, False


def parse_corpus(source: str | Path | IO, schema: str = PUBLICATION_SCHEMA) -> ParseResult:
    """Parse line-delimited publication records into a Corpus.

    Blank lines are ignored; every other line is either accepted or recorded
    in the rejection report with its line number and a reason.  A line that is
    not valid UTF-8 aborts the whole ingest.
    """
    if schema != PUBLICATION_SCHEMA:
        raise IngestError(f"unsupported publication schema {schema!r}")
    stream, owned = _open_lines(source)
    publications: list[Publication] = []
    seen: set[str] = set()
    rejections: list[RejectedRecord] = []
    records = 0
    decode = _DECODER.decode
    author_cache: dict = {}
    address_cache: dict = {}
    try:
        with _gc_paused():
            for line_no, line in enumerate(stream, start=1):
                if not line.strip():
                    continue
                records += 1
                try:
                    pub = _convert_record(decode(line), author_cache, address_cache)
                except (msgspec.DecodeError, msgspec.ValidationError, ValueError) as exc:
                    if isinstance(line, bytes):
                        try:
                            line.decode("utf-8")
                        except UnicodeDecodeError as bad:
                            raise IngestError(
                                f"publication stream is not valid UTF-8 "
                                f"(line {line_no}): {bad}"
                            ) from bad
                    rejections.append(RejectedRecord(line_no, str(exc)))
                    continue
                if pub.id in seen:
                    rejections.append(
                        RejectedRecord(line_no, f"duplicate id {pub.id!r}")
                    )
                    continue
                seen.add(pub.id)
                publications.append(pub)
    except UnicodeDecodeError as exc:
        raise IngestError(f"publication stream is not valid UTF-8: {exc}") from exc
    finally:
        if owned:
            stream.close()
    return ParseResult(Corpus(publications), rejections, records)


def publication_to_record(pub: Publication) -> dict:
    """Inverse of parse_publication_record (round-trips through JSON)."""
    record: dict = {
        "id": pub.id,
        "year": pub.year,
        "doc_type": pub.doc_type.value,
        "language": pub.language,
        "fields": [[label, frac] for label, frac in pub.fields],
        "authors": [{"last": a.last_name, "initials": a.initials} for a in pub.authors],
        "addresses": [
            {
                "org": a.raw,
                "city": a.city,
                "country": a.country,
                **({"department": a.department} if a.department else {}),
                **({"geo": [a.geo[0], a.geo[1]]} if a.geo is not None else {}),
            }
            for a in pub.addresses
        ],
    }
    if pub.is_arts_humanities:
        record["arts_humanities"] = True
    return record


def write_corpus(corpus: Corpus, path: str | Path) -> None:
    encode = _ENCODER.encode
    with open(path, "wb") as fh:
        for pub in corpus:
            fh.write(encode(publication_to_record(pub)))
            fh.write(b"\n")


# ---------------------------------------------------------------------------
# Inclusion rules
# ---------------------------------------------------------------------------


def inclusion_weight(pub: Publication, cfg: InclusionConfig) -> float:
    """Weight of a publication in all indicator computations.

    0 outside the year window, for arts-and-humanities records, and for
    non-English records under english_only; otherwise the letter weight for
    letters and 1 for articles and reviews.
    """
    if pub.year < cfg.year_min or pub.year > cfg.year_max:
        return 0.0
    if pub.is_arts_humanities:
        return 0.0
    if cfg.english_only and pub.language != "en":
        return 0.0
    if pub.doc_type is DocType.LETTER:
        return cfg.letter_weight
    return 1.0


# ---------------------------------------------------------------------------
# Citation graph
# ---------------------------------------------------------------------------


class CitationGraph:
    """Directed citing -> cited edges over corpus publication ids.

    Edges are validated against the corpus at construction; the corpus
    reference is retained so citing-publication metadata (year, author keys)
    is available to the counting rules.
    """

    __slots__ = ("_in", "_pubs", "edge_count")

    def __init__(self, edges: Iterable[tuple[str, str]], corpus: Corpus):
        by_cited: dict[str, list[Publication]] = {}
        seen: set[tuple[int, str]] = set()
        known = corpus.by_id
        count = 0
        with _gc_paused():
            for citing, cited in edges:
                citing_pub = known.get(citing)
                if citing_pub is None:
                    raise GraphLoadError(f"citing id {citing!r} not in corpus")
                if cited not in known:
                    raise GraphLoadError(f"cited id {cited!r} not in corpus")
                # citing_pub is the canonical corpus object, so its id() is a
                # stable cheap stand-in for the citing string within this run
                edge = (id(citing_pub), cited)
                if edge in seen:
                    continue
                seen.add(edge)
                lst = by_cited.get(cited)
                if lst is None:
                    by_cited[cited] = [citing_pub]
                else:
                    lst.append(citing_pub)
                count += 1
        self._in = by_cited
        self._pubs = known
        self.edge_count = count

    _EMPTY: tuple[Publication, ...] = ()

    def citing(self, cited_id: str) -> list[Publication] | tuple[Publication, ...]:
        """Publications citing ``cited_id`` (file order, deduplicated)."""
        return self._in.get(cited_id, self._EMPTY)

    def edges(self) -> Iterator[tuple[str, str]]:
        for cited, citers in self._in.items():
            for citing in citers:
                yield citing.id, cited


def load_citation_graph(path: str | Path, corpus: Corpus) -> CitationGraph:
    """Load citing_id,cited_id rows (header required) into a CitationGraph."""
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise GraphLoadError(f"cannot open citation file: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return CitationGraph([], corpus)
        if [h.strip() for h in header[:2]] != ["citing_id", "cited_id"]:
            raise GraphLoadError(
                f"citation file must start with header citing_id,cited_id, got {header!r}"
            )
        def rows() -> Iterator[tuple[str, str]]:
            for row in reader:
                if not row or (len(row) == 1 and not row[0].strip()):
                    continue
                if len(row) < 2:
                    raise GraphLoadError(f"citation row needs two columns: {row!r}")
                yield row[0], row[1]

        return CitationGraph(rows(), corpus)


def write_citation_graph(graph: CitationGraph, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["citing_id", "cited_id"])
        writer.writerows(sorted(graph.edges()))


def is_self_citation(citing: Publication, cited: Publication) -> bool:
    """True when the two publications share at least one author name key."""
    return not citing.author_keys.isdisjoint(cited.author_keys)


def countable_citations(pub: Publication, graph: CitationGraph, cfg: InclusionConfig) -> int:
    """Citations to ``pub`` within the citation window, minus self-citations.

    Counts citing publications with year <= citation_window_end; when
    exclude_self_citations is set, edges sharing an author name key between
    citing and cited are omitted.
    """
    count = 0
    window_end = cfg.citation_window_end
    exclude_self = cfg.exclude_self_citations
    keys = pub.author_keys
    for citing in graph.citing(pub.id):
        if citing.year > window_end:
            continue
        if exclude_self and not keys.isdisjoint(citing.author_keys):
            continue
        count += 1
    return count
