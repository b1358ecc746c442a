"""Canonical text normalization used across dedup, QC, and splitting.

Every module that compares sentences (duplicate detection, transcript
exclusivity, re-transcription length ratios) goes through the same rule so
that "the same sentence" means one thing toolkit-wide: strip the ends,
collapse internal whitespace runs to single spaces, casefold.
"""

from __future__ import annotations

import re

_WS_RUN = re.compile(r"\s+")

#: Terminal characters that mark a sentence as a question.
QUESTION_MARKS = frozenset({"?", "؟"})  # ASCII and Arabic question marks


def normalize_text(text: str) -> str:
    """Trim, collapse internal whitespace, casefold."""
    return _WS_RUN.sub(" ", text.strip()).casefold()


def is_question(text: str, marks: frozenset[str] = QUESTION_MARKS) -> bool:
    """True when the trimmed text ends with a configured question mark."""
    stripped = text.strip()
    return bool(stripped) and stripped[-1] in marks
