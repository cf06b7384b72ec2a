"""Deterministic tokenization and sentence segmentation with lossless offsets.

Every offset refers back into the original string, so slicing the source
with a token or sentence span reproduces its text exactly.
"""
from __future__ import annotations

import string
from dataclasses import dataclass
from importlib import resources

_PUNCT = frozenset(string.punctuation)


@dataclass(frozen=True)
class Token:
    text: str
    start: int
    end: int


@dataclass(frozen=True)
class Sentence:
    text: str
    start: int
    end: int
    index: int


def _load_abbreviations() -> frozenset[str]:
    path = resources.files("evisum.data").joinpath("abbreviations.txt")
    entries = []
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            entries.append(line.lower())
    return frozenset(entries)


_ABBREVIATIONS = _load_abbreviations()


def tokenize(text: str) -> list[Token]:
    """Split on whitespace, then detach leading/trailing punctuation.

    Each detached punctuation character becomes its own token; interior
    punctuation (hyphens, decimal points) stays attached.
    """
    tokens: list[Token] = []
    i = 0
    n = len(text)
    while i < n:
        if text[i].isspace():
            i += 1
            continue
        j = i
        while j < n and not text[j].isspace():
            j += 1
        # chunk is text[i:j]; peel punctuation off both ends
        lead = i
        while lead < j and text[lead] in _PUNCT and j - lead > 1:
            tokens.append(Token(text[lead], lead, lead + 1))
            lead += 1
        trail = j
        trailing: list[Token] = []
        while trail - 1 > lead and text[trail - 1] in _PUNCT:
            trailing.append(Token(text[trail - 1], trail - 1, trail))
            trail -= 1
        tokens.append(Token(text[lead:trail], lead, trail))
        tokens.extend(reversed(trailing))
        i = j
    return tokens


def count_tokens(text: str) -> int:
    return len(tokenize(text))


def _is_boundary(text: str, punct_idx: int) -> bool:
    """A [.?!] at punct_idx ends a sentence when followed by whitespace and
    an uppercase letter or digit, unless the word it closes is a known
    abbreviation."""
    j = punct_idx + 1
    if j >= len(text) or not text[j].isspace():
        return False
    while j < len(text) and text[j].isspace():
        j += 1
    if j >= len(text):
        return False
    nxt = text[j]
    if not (nxt.isupper() or nxt.isdigit()):
        return False
    if text[punct_idx] == ".":
        k = punct_idx
        while k > 0 and not text[k - 1].isspace():
            k -= 1
        word = text[k : punct_idx + 1].lower()
        if word in _ABBREVIATIONS:
            return False
    return True


def split_sentences(text: str) -> list[Sentence]:
    """Segment text at ., ?, ! boundaries (abbreviation-aware).

    Returns the whole text as a single sentence when no boundary is found,
    and nothing for whitespace-only input. Sentence spans are trimmed, so
    source text between consecutive spans is pure whitespace.
    """
    if not text.strip():
        return []
    cuts: list[int] = []
    for i, ch in enumerate(text):
        if ch in ".?!" and _is_boundary(text, i):
            cuts.append(i + 1)
    sentences: list[Sentence] = []
    prev = 0
    for cut in cuts + [len(text)]:
        seg = text[prev:cut]
        start = prev + (len(seg) - len(seg.lstrip()))
        end = prev + len(seg.rstrip())
        if end > start:
            sentences.append(Sentence(text[start:end], start, end, len(sentences)))
        prev = cut
    return sentences
