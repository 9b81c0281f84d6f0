"""Tokenization and numeric-placeholder normalization.

Raw strings become token streams where every numeric literal collapses onto a
placeholder (NUM), number-dash-number spans onto RANGE, and percentages onto
PCT; remaining words are lowercased and stemmed. Hyphens inside alphanumeric
runs are kept ("anti-angiogenic" stays one token), and all other punctuation
separates tokens.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator

from .stemming import stem

KIND_WORD = "WORD"
KIND_NUM = "NUM"
KIND_RANGE = "RANGE"
KIND_PCT = "PCT"

_NUM = r"\d+(?:,\d{3})*(?:\.\d+)?"
_DASHES = "-–—"  # hyphen-minus, en dash, em dash

RANGE_RE = re.compile(rf"({_NUM})[{_DASHES}]({_NUM})")
PCT_RE = re.compile(rf"{_NUM}%")
# a word must contain at least one letter in its leading alphanumeric run;
# pure digit runs fall through to NUM
WORD_RE = re.compile(r"(?=[A-Za-z0-9]*[A-Za-z])[A-Za-z0-9]+(?:['-][A-Za-z0-9]+)*")
NUM_RE = re.compile(_NUM)


@dataclass(frozen=True)
class Token:
    surface: str
    stem: str
    kind: str


@dataclass(frozen=True)
class Span:
    token: Token
    start: int
    end: int


def _parse_number(text: str) -> float:
    return float(text.replace(",", ""))


def tokenize_spans(raw: str) -> list[Span]:
    """Tokenize, keeping character offsets of every token in the input."""
    spans: list[Span] = []
    pos = 0
    n = len(raw)
    while pos < n:
        m = RANGE_RE.match(raw, pos)
        if m:
            spans.append(Span(Token(m.group(0), KIND_RANGE, KIND_RANGE), m.start(), m.end()))
            pos = m.end()
            continue
        m = PCT_RE.match(raw, pos)
        if m:
            spans.append(Span(Token(m.group(0), KIND_PCT, KIND_PCT), m.start(), m.end()))
            pos = m.end()
            continue
        m = WORD_RE.match(raw, pos)
        if m:
            spans.append(Span(Token(m.group(0), stem(m.group(0)), KIND_WORD), m.start(), m.end()))
            pos = m.end()
            continue
        m = NUM_RE.match(raw, pos)
        if m:
            spans.append(Span(Token(m.group(0), KIND_NUM, KIND_NUM), m.start(), m.end()))
            pos = m.end()
            continue
        pos += 1
    return spans


def normalize_text(raw: str) -> list[Token]:
    """Normalize raw text to a token stream (see module docstring)."""
    return [s.token for s in tokenize_spans(raw)]


def extract_numbers(raw: str) -> list[float]:
    """Every maximal decimal literal in the input, in order of appearance."""
    return [_parse_number(m.group(0)) for m in NUM_RE.finditer(raw)]


def parse_range(surface: str) -> tuple[float, float]:
    """Endpoints of a RANGE token surface, low/high as written."""
    m = RANGE_RE.fullmatch(surface)
    if m is None:
        raise ValueError(f"not a range token surface: {surface!r}")
    return _parse_number(m.group(1)), _parse_number(m.group(2))


def word_stems(tokens: Iterable[Token]) -> Iterator[str]:
    for t in tokens:
        if t.kind == KIND_WORD:
            yield t.stem


def normalize_label(raw: str) -> str:
    """Canonical form of an attribute label: stems joined by single spaces."""
    return " ".join(t.stem for t in normalize_text(raw))
