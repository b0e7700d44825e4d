"""Named-entity normalization and the body/caption co-occurrence indicator."""

from __future__ import annotations

import re
import string
from typing import Iterable, Optional

_WS = re.compile(r"\s+")
_PUNCT = string.punctuation + "‘’“”"


def normalize_entity(raw: str) -> Optional[str]:
    """Lowercase, collapse whitespace, strip outer punctuation.

    Returns None when nothing is left, so callers can drop the entry.
    Interior punctuation is preserved ("U.K." -> "u.k").
    """
    s = _WS.sub(" ", raw.strip()).lower()
    s = s.strip(_PUNCT + " ")
    return s or None


def normalize_entity_set(raw: Iterable[str]) -> frozenset[str]:
    out = set()
    for r in raw:
        n = normalize_entity(r)
        if n is not None:
            out.add(n)
    return frozenset(out)


def compute_indicator(body: frozenset[str], caption: frozenset[str]) -> float:
    """1.0 iff the caption mentions an entity present in the article body."""
    return 1.0 if body & caption else 0.0
