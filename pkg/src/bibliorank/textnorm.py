"""Text normalization shared by record parsing and organization matching."""

from __future__ import annotations

import re
import unicodedata
from functools import lru_cache

_NON_ALNUM = re.compile(r"[^0-9a-z]+")


def strip_diacritics(text: str) -> str:
    """Decompose accented characters and drop the combining marks."""
    decomposed = unicodedata.normalize("NFKD", text)
    return "".join(ch for ch in decomposed if not unicodedata.combining(ch))


@lru_cache(maxsize=262144)
def normalize_org_name(raw: str) -> tuple[str, ...]:
    """Turn an organization string into a normalized token sequence.

    Case-folds, strips diacritics, collapses punctuation into separators and
    splits on whitespace.  Deterministic and idempotent on its own output
    (``normalize(" ".join(normalize(x))) == normalize(x)``).
    """
    folded = strip_diacritics(raw.casefold())
    return tuple(tok for tok in _NON_ALNUM.split(folded) if tok)


@lru_cache(maxsize=262144)
def normalize_person_name(last_name: str, initials: str) -> tuple[str, str]:
    """Normalize an author name into the (last name, initials) match key.

    Both parts are case-folded and diacritics-stripped; punctuation inside
    initials ("J.R." vs "JR") and spacing inside last names are collapsed so
    that cosmetic differences never break name-key equality.
    """
    last = " ".join(_NON_ALNUM.split(strip_diacritics(last_name.casefold())))
    inits = "".join(_NON_ALNUM.split(strip_diacritics(initials.casefold())))
    return last.strip(), inits
