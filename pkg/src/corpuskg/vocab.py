"""Frequency-ranked corpus vocabulary with a stop/noise list cutoff."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator, Optional

from .corpus import Publication, TableDoc
from .errors import EmptyCorpus
from .text import normalize_text, word_stems

DEFAULT_MAX_SIZE = 100_000


def load_stop_list(path: Optional[Path] = None) -> frozenset[str]:
    """Load the stop list; defaults to the packaged data file."""
    if path is not None:
        raw = Path(path).read_text(encoding="utf-8")
    else:
        raw = (
            resources.files("corpuskg").joinpath("data/stopwords.txt").read_text("utf-8")
        )
    terms = set()
    for line in raw.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            terms.add(line)
    return frozenset(terms)


def iter_table_texts(table: TableDoc) -> Iterator[str]:
    yield table.caption
    for label in table.hmd:
        yield label.raw
    for label in table.vmd:
        yield label.raw
    for row in table.cells:
        for cell in row:
            yield cell.raw
            if cell.nested is not None:
                yield from iter_table_texts(cell.nested)


def iter_publication_texts(pub: Publication) -> Iterator[str]:
    """Every indexed text field of a publication, tables included."""
    yield pub.title
    yield pub.abstract
    for heading, text in pub.body_sections:
        yield heading
        yield text
    for caption, content in pub.figures:
        yield caption
        yield content
    for table in pub.tables:
        yield from iter_table_texts(table)


@dataclass(frozen=True)
class Vocabulary:
    """Terms ranked 1..N by descending frequency (lexicographic tie-break)."""

    entries: dict[str, tuple[int, int]]  # term -> (rank, frequency)
    max_size: int = DEFAULT_MAX_SIZE

    def __contains__(self, term: str) -> bool:
        return term in self.entries

    def rank(self, term: str) -> Optional[int]:
        e = self.entries.get(term)
        return e[0] if e else None

    def frequency(self, term: str) -> int:
        e = self.entries.get(term)
        return e[1] if e else 0

    def terms(self) -> list[str]:
        return sorted(self.entries, key=lambda t: self.entries[t][0])

    def to_json(self) -> dict:
        return {
            "max_size": self.max_size,
            "entries": [
                {"term": t, "rank": r, "frequency": f}
                for t, (r, f) in sorted(self.entries.items(), key=lambda kv: kv[1][0])
            ],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "Vocabulary":
        return cls(
            entries={e["term"]: (e["rank"], e["frequency"]) for e in doc["entries"]},
            max_size=doc["max_size"],
        )

    def save(self, path: Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_json(), indent=2, sort_keys=True), encoding="utf-8"
        )

    @classmethod
    def load(cls, path: Path) -> "Vocabulary":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def build_vocabulary(
    corpus: Iterable[Publication],
    max_size: int = DEFAULT_MAX_SIZE,
    stop_list: Optional[frozenset[str]] = None,
) -> Vocabulary:
    """Count WORD stems over every field, drop stop terms, keep the top max_size.

    An empty corpus (zero publications) is an error; publications without any
    words yield an empty vocabulary.
    """
    if max_size < 1:
        raise ValueError("max_size must be >= 1")
    if stop_list is None:
        stop_list = load_stop_list()
    counts: Counter[str] = Counter()
    n_docs = 0
    for pub in corpus:
        n_docs += 1
        for text in iter_publication_texts(pub):
            counts.update(word_stems(normalize_text(text)))
    if n_docs == 0:
        raise EmptyCorpus("no publications in corpus")
    for term in stop_list:
        counts.pop(term, None)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:max_size]
    entries = {term: (i + 1, freq) for i, (term, freq) in enumerate(ranked)}
    return Vocabulary(entries=entries, max_size=max_size)
