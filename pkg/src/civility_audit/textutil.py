"""Shared word tokenization.

A word is a maximal run of non-whitespace characters with leading and
trailing punctuation stripped; case is preserved. Every component that
counts or matches words (snippet sizing, the mock scorer, the word-level
audit) uses this single definition so that word lists behave identically
end to end.
"""

from __future__ import annotations

import string

# string.punctuation plus the typographic quotes/dashes common in
# published transcripts.
_STRIP_CHARS = string.punctuation + "‘’“”–—…"


def words(text: str) -> list[str]:
    """Tokenize ``text`` into words, dropping tokens that are pure punctuation."""
    out = []
    for token in text.split():
        token = token.strip(_STRIP_CHARS)
        if token:
            out.append(token)
    return out


def word_count(text: str) -> int:
    return len(words(text))


def vocabulary(texts) -> set[str]:
    """Distinct words (case-sensitive) across an iterable of texts."""
    vocab: set[str] = set()
    for text in texts:
        vocab.update(words(text))
    return vocab
