"""Two-round assignment of publications to institutions.

Round one matches address organization tokens (and, for university-system
members, department tokens) against a name-variant thesaurus.  Round two
attributes academic-hospital publications to universities through author
collaboration links: an author links a publication to a university when at
least half of the author's publications carry a round-one link to it.
"""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, Mapping, NamedTuple, Sequence

from .corpus import Address, AuthorName, Corpus, Publication, _gc_paused
from .errors import AmbiguousMatchError, ThesaurusError
from .textnorm import normalize_org_name

DEFAULT_MIN_OCCURRENCES = 5
DEFAULT_ROUND2_THRESHOLD = 0.5


class VariantKind(str, Enum):
    UNIVERSITY = "university"
    HOSPITAL = "hospital"
    SYSTEM_MEMBER = "system-member"


class Round(str, Enum):
    ONE = "one"
    TWO = "two"


@dataclass(frozen=True)
class ThesaurusEntry:
    variant_tokens: tuple[str, ...]
    institution_id: str
    occurrence_count: int
    kind: VariantKind


@dataclass(frozen=True)
class Institution:
    institution_id: str
    display_name: str
    country: str


class Thesaurus:
    """Validated name-variant table plus the institution register.

    University and hospital variants are matched against address organization
    tokens and share one namespace; system-member variants are matched against
    the address department field and form their own namespace.
    """

    def __init__(
        self,
        entries: Iterable[ThesaurusEntry],
        institutions: Iterable[Institution] = (),
    ):
        self.entries: tuple[ThesaurusEntry, ...] = tuple(entries)
        self.institutions: dict[str, Institution] = {
            inst.institution_id: inst for inst in institutions
        }
        self._org_index: dict[tuple[str, ...], ThesaurusEntry] = {}
        self._dept_index: dict[tuple[str, ...], ThesaurusEntry] = {}
        for entry in self.entries:
            if entry.occurrence_count < 1:
                raise ThesaurusError(
                    f"variant {' '.join(entry.variant_tokens)!r} has occurrence_count "
                    f"{entry.occurrence_count} < 1"
                )
            if not entry.variant_tokens:
                raise ThesaurusError(f"empty variant for institution {entry.institution_id!r}")
            index = (
                self._dept_index
                if entry.kind is VariantKind.SYSTEM_MEMBER
                else self._org_index
            )
            if entry.variant_tokens in index:
                raise ThesaurusError(
                    f"duplicate variant {' '.join(entry.variant_tokens)!r}"
                )
            index[entry.variant_tokens] = entry
            self.institutions.setdefault(
                entry.institution_id,
                Institution(entry.institution_id, entry.institution_id, "unknown"),
            )
        self._org_lengths = sorted({len(t) for t in self._org_index}, reverse=True)
        self._dept_lengths = sorted({len(t) for t in self._dept_index}, reverse=True)

    def hospital_ids(self) -> frozenset[str]:
        return frozenset(
            e.institution_id for e in self.entries if e.kind is VariantKind.HOSPITAL
        )

    def institution(self, institution_id: str) -> Institution:
        return self.institutions.get(
            institution_id, Institution(institution_id, institution_id, "unknown")
        )


def load_thesaurus(
    entries_path: str | Path, institutions_path: str | Path | None = None
) -> Thesaurus:
    """Load the variant file (variant,institution_id,occurrence_count,kind) and
    the optional institutions file (institution_id,name,country)."""
    entries: list[ThesaurusEntry] = []
    with open(entries_path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"variant", "institution_id", "occurrence_count", "kind"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ThesaurusError(
                f"thesaurus file needs columns {sorted(required)}, got {reader.fieldnames}"
            )
        for row in reader:
            try:
                kind = VariantKind(row["kind"])
            except ValueError as exc:
                raise ThesaurusError(f"unknown variant kind {row['kind']!r}") from exc
            try:
                occurrences = int(row["occurrence_count"])
            except ValueError as exc:
                raise ThesaurusError(
                    f"bad occurrence_count {row['occurrence_count']!r}"
                ) from exc
            entries.append(
                ThesaurusEntry(
                    variant_tokens=normalize_org_name(row["variant"]),
                    institution_id=row["institution_id"],
                    occurrence_count=occurrences,
                    kind=kind,
                )
            )
    institutions: list[Institution] = []
    if institutions_path is not None:
        with open(institutions_path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            required = {"institution_id", "name", "country"}
            if reader.fieldnames is None or not required.issubset(reader.fieldnames):
                raise ThesaurusError(
                    f"institutions file needs columns {sorted(required)}, got {reader.fieldnames}"
                )
            institutions = [
                Institution(row["institution_id"], row["name"], row["country"])
                for row in reader
            ]
    return Thesaurus(entries, institutions)


def write_thesaurus(
    thesaurus: Thesaurus, entries_path: str | Path, institutions_path: str | Path | None = None
) -> None:
    with open(entries_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["variant", "institution_id", "occurrence_count", "kind"])
        for e in thesaurus.entries:
            writer.writerow(
                [" ".join(e.variant_tokens), e.institution_id, e.occurrence_count, e.kind.value]
            )
    if institutions_path is not None:
        with open(institutions_path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["institution_id", "name", "country"])
            for inst in sorted(thesaurus.institutions.values(), key=lambda i: i.institution_id):
                writer.writerow([inst.institution_id, inst.display_name, inst.country])


# ---------------------------------------------------------------------------
# Matching
# ---------------------------------------------------------------------------


def _match_tokens(
    tokens: tuple[str, ...],
    index: Mapping[tuple[str, ...], ThesaurusEntry],
    lengths: Sequence[int],
    min_occurrences: int,
    kinds: tuple[VariantKind, ...],
    raw: str,
) -> ThesaurusEntry | None:
    """Longest-variant-first contiguous subsequence match.

    All windows of the winning length are inspected so that equal-length
    matches pointing at distinct institutions raise AmbiguousMatchError.
    """
    n = len(tokens)
    for length in lengths:
        if length > n:
            continue
        hits: list[ThesaurusEntry] = []
        for start in range(n - length + 1):
            entry = index.get(tokens[start : start + length])
            if (
                entry is not None
                and entry.occurrence_count >= min_occurrences
                and entry.kind in kinds
            ):
                hits.append(entry)
        if hits:
            distinct = sorted({e.institution_id for e in hits})
            if len(distinct) > 1:
                raise AmbiguousMatchError(raw, tuple(distinct))
            return hits[0]
    return None


def match_round1(
    addr: Address,
    thesaurus: Thesaurus,
    min_occurrences: int = DEFAULT_MIN_OCCURRENCES,
) -> str | None:
    """Institution id for an address, or None.

    Variants below ``min_occurrences`` are ignored.  System-member variants
    are matched against the department field and take priority over
    organization matches, so a college is preferred over its umbrella system.
    Raises AmbiguousMatchError on equal-length matches to distinct
    institutions; assign_corpus records those and leaves the address
    unassigned.
    """
    if addr.department:
        dept_tokens = normalize_org_name(addr.department)
        entry = _match_tokens(
            dept_tokens,
            thesaurus._dept_index,
            thesaurus._dept_lengths,
            min_occurrences,
            (VariantKind.SYSTEM_MEMBER,),
            addr.raw,
        )
        if entry is not None:
            return entry.institution_id
    entry = _match_tokens(
        addr.org_tokens,
        thesaurus._org_index,
        thesaurus._org_lengths,
        min_occurrences,
        (VariantKind.UNIVERSITY,),
        addr.raw,
    )
    return entry.institution_id if entry is not None else None


def match_hospital(
    addr: Address,
    thesaurus: Thesaurus,
    min_occurrences: int = DEFAULT_MIN_OCCURRENCES,
) -> str | None:
    """Hospital organization id for an address, or None."""
    entry = _match_tokens(
        addr.org_tokens,
        thesaurus._org_index,
        thesaurus._org_lengths,
        min_occurrences,
        (VariantKind.HOSPITAL,),
        addr.raw,
    )
    return entry.institution_id if entry is not None else None


# ---------------------------------------------------------------------------
# Assignment table
# ---------------------------------------------------------------------------


class AssignmentLink(NamedTuple):
    publication_id: str
    institution_id: str
    matched_address_count: int
    round: Round


class AssignmentTable:
    """Immutable publication-institution link table.

    Link order is the deterministic insertion order of the producing pass
    (corpus order within round one, then round two).
    """

    _EMPTY: tuple[AssignmentLink, ...] = ()

    def __init__(self, links: Iterable[AssignmentLink]):
        self.links: tuple[AssignmentLink, ...] = tuple(links)
        by_publication: dict[str, list[AssignmentLink]] = {}
        by_institution: dict[str, list[AssignmentLink]] = {}
        with _gc_paused():
            for link in self.links:
                if link.round is Round.ONE and link.matched_address_count < 1:
                    raise ValueError(f"round-one link with no matched addresses: {link}")
                plist = by_publication.get(link.publication_id)
                if plist is None:
                    by_publication[link.publication_id] = [link]
                else:
                    inst = link.institution_id
                    for existing in plist:
                        if existing.institution_id == inst:
                            raise ValueError(
                                f"duplicate assignment link "
                                f"({link.publication_id}, {inst})"
                            )
                    plist.append(link)
                ilist = by_institution.get(link.institution_id)
                if ilist is None:
                    by_institution[link.institution_id] = [link]
                else:
                    ilist.append(link)
        self.by_publication = by_publication
        self.by_institution = by_institution

    def __len__(self) -> int:
        return len(self.links)

    def __iter__(self) -> Iterator[AssignmentLink]:
        return iter(self.links)

    def institutions(self) -> list[str]:
        return sorted(self.by_institution)

    def links_of_institution(self, institution_id: str) -> list[AssignmentLink]:
        return self.by_institution.get(institution_id, [])

    def links_of_publication(
        self, publication_id: str
    ) -> list[AssignmentLink] | tuple[AssignmentLink, ...]:
        return self.by_publication.get(publication_id, self._EMPTY)


@dataclass
class AssignmentValidationReport:
    """Match-quality accounting for one assignment run.

    ``unmatched_rate`` estimates the share of addresses the thesaurus could
    not place anywhere (the missed-publication error direction); ambiguous
    addresses are reported, never silently resolved.
    """

    total_addresses: int = 0
    university_matched: int = 0
    hospital_matched: int = 0
    unmatched: int = 0
    ambiguous: list[tuple[str, str, tuple[str, ...]]] = field(default_factory=list)
    round1_links: int = 0
    round2_links: int = 0
    publications_with_round2: int = 0

    @property
    def unmatched_rate(self) -> float:
        if self.total_addresses == 0:
            return 0.0
        return self.unmatched / self.total_addresses


def write_validation_report(report: AssignmentValidationReport, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["metric", "value"])
        writer.writerow(["total_addresses", report.total_addresses])
        writer.writerow(["university_matched", report.university_matched])
        writer.writerow(["hospital_matched", report.hospital_matched])
        writer.writerow(["unmatched", report.unmatched])
        writer.writerow(["unmatched_rate", f"{report.unmatched_rate:.6f}"])
        writer.writerow(["ambiguous", len(report.ambiguous)])
        writer.writerow(["round1_links", report.round1_links])
        writer.writerow(["round2_links", report.round2_links])
        writer.writerow(["publications_with_round2", report.publications_with_round2])
        for pub_id, raw, candidates in report.ambiguous:
            writer.writerow(["ambiguous_address", f"{pub_id}|{raw}|{';'.join(candidates)}"])


# ---------------------------------------------------------------------------
# Author-link analysis (round two)
# ---------------------------------------------------------------------------


def publications_by_author(corpus: Corpus) -> dict[AuthorName, list[str]]:
    """Author name key -> ids of all corpus publications carrying it."""
    index: dict[AuthorName, list[str]] = {}
    for pub in corpus:
        for author in pub.author_keys:
            index.setdefault(author, []).append(pub.id)
    return index


def author_link_strength(
    author: AuthorName,
    institution_id: str,
    corpus: Corpus,
    partial: AssignmentTable,
    pubs_by_author: Mapping[AuthorName, list[str]] | None = None,
) -> float:
    """Share of the author's corpus publications round-one-linked to the institution.

    0 for an author with no publications.  The denominator is the author's
    publication count over the whole corpus window.
    """
    if pubs_by_author is None:
        pubs_by_author = publications_by_author(corpus)
    pub_ids = pubs_by_author.get(author, [])
    if not pub_ids:
        return 0.0
    linked = 0
    for pub_id in pub_ids:
        for link in partial.links_of_publication(pub_id):
            if link.institution_id == institution_id and link.round is Round.ONE:
                linked += 1
                break
    return linked / len(pub_ids)


def _qualified_institutions(
    author: AuthorName,
    threshold: float,
    partial: AssignmentTable,
    pubs_by_author: Mapping[AuthorName, list[str]],
) -> frozenset[str]:
    pub_ids = pubs_by_author.get(author, [])
    if not pub_ids:
        return frozenset()
    counts: Counter[str] = Counter()
    for pub_id in pub_ids:
        for link in partial.links_of_publication(pub_id):
            if link.round is Round.ONE:
                counts[link.institution_id] += 1
    total = len(pub_ids)
    return frozenset(inst for inst, n in counts.items() if n / total >= threshold)


def match_round2(
    pub: Publication,
    hospital_ids: frozenset[str] | set[str],
    corpus: Corpus,
    partial: AssignmentTable,
    threshold: float = DEFAULT_ROUND2_THRESHOLD,
    pubs_by_author: Mapping[AuthorName, list[str]] | None = None,
) -> list[str]:
    """Universities gaining a round-two link from this hospital publication.

    The caller establishes the precondition that ``pub`` has at least one
    academic-hospital address (assign_corpus does).  For every author, each
    institution whose author-link strength meets the threshold qualifies;
    institutions the publication already reached in round one, and hospital
    organizations themselves, are excluded.  Sorted for determinism.
    """
    if pubs_by_author is None:
        pubs_by_author = publications_by_author(corpus)
    existing = {
        link.institution_id
        for link in partial.links_of_publication(pub.id)
        if link.round is Round.ONE
    }
    gained: set[str] = set()
    for author in pub.authors:
        gained |= _qualified_institutions(author, threshold, partial, pubs_by_author)
    return sorted(gained - existing - set(hospital_ids))


# ---------------------------------------------------------------------------
# Full corpus assignment
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AssignmentConfig:
    min_occurrences: int = DEFAULT_MIN_OCCURRENCES
    round2_threshold: float = DEFAULT_ROUND2_THRESHOLD


def assign_corpus(
    corpus: Corpus,
    thesaurus: Thesaurus,
    hospital_ids: frozenset[str] | None = None,
    cfg: AssignmentConfig | None = None,
) -> tuple[AssignmentTable, AssignmentValidationReport]:
    """Run both assignment rounds over the corpus.

    Deterministic: identical inputs produce an identical link table.
    Ambiguous addresses are recorded in the validation report and left
    unassigned.
    """
    cfg = cfg or AssignmentConfig()
    if hospital_ids is None:
        hospital_ids = thesaurus.hospital_ids()
    report = AssignmentValidationReport()

    # match outcome per distinct (org tokens, department): 0 = institution id
    # string, 1 = hospital marker, 2 = unmatched, 3 = ambiguous
    _HOSPITAL, _UNMATCHED, _AMBIGUOUS = 1, 2, 3
    match_cache: dict[tuple, object] = {}
    min_occ = cfg.min_occurrences

    round1_counts: dict[tuple[str, str], int] = {}
    hospital_addr_counts: dict[str, int] = {}
    with _gc_paused():
        for pub in corpus:
            for addr in pub.addresses:
                report.total_addresses += 1
                cache_key = (addr.org_tokens, addr.department)
                outcome = match_cache.get(cache_key)
                if outcome is None:
                    try:
                        inst = match_round1(addr, thesaurus, min_occ)
                        if inst is not None:
                            outcome = inst
                        elif match_hospital(addr, thesaurus, min_occ) is not None:
                            outcome = _HOSPITAL
                        else:
                            outcome = _UNMATCHED
                    except AmbiguousMatchError as exc:
                        outcome = _AMBIGUOUS
                        match_cache[(cache_key, "candidates")] = exc.candidates
                    match_cache[cache_key] = outcome
                if outcome.__class__ is str:
                    report.university_matched += 1
                    key = (pub.id, outcome)
                    count = round1_counts.get(key)
                    round1_counts[key] = 1 if count is None else count + 1
                elif outcome == _HOSPITAL:
                    report.hospital_matched += 1
                    hospital_addr_counts[pub.id] = hospital_addr_counts.get(pub.id, 0) + 1
                elif outcome == _UNMATCHED:
                    report.unmatched += 1
                else:
                    report.ambiguous.append(
                        (pub.id, addr.raw, match_cache[(cache_key, "candidates")])
                    )

    links = [
        AssignmentLink(pub_id, inst, count, Round.ONE)
        for (pub_id, inst), count in round1_counts.items()
    ]
    report.round1_links = len(links)

    round2_links: list[AssignmentLink] = []
    if hospital_addr_counts:
        partial = AssignmentTable(links)
        pubs_by_author = publications_by_author(corpus)
        qualified_cache: dict[AuthorName, frozenset[str]] = {}
        for pub in corpus:
            hospital_count = hospital_addr_counts.get(pub.id, 0)
            if hospital_count == 0:
                continue
            existing = {
                link.institution_id for link in partial.links_of_publication(pub.id)
            }
            gained: set[str] = set()
            for author in pub.authors:
                qualified = qualified_cache.get(author)
                if qualified is None:
                    qualified = _qualified_institutions(
                        author, cfg.round2_threshold, partial, pubs_by_author
                    )
                    qualified_cache[author] = qualified
                gained |= qualified
            gained -= existing
            gained -= hospital_ids
            if gained:
                report.publications_with_round2 += 1
            for inst in sorted(gained):
                round2_links.append(AssignmentLink(pub.id, inst, hospital_count, Round.TWO))

    report.round2_links = len(round2_links)
    table = AssignmentTable(links + round2_links)
    return table, report


def write_assignment_table(table: AssignmentTable, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["publication_id", "institution_id", "matched_address_count", "round"])
        for link in table:
            writer.writerow(
                [link.publication_id, link.institution_id, link.matched_address_count, link.round.value]
            )
