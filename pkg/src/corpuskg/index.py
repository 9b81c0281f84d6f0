"""Field-scoped inverted index with TF-IDF ranking and proximity boosts.

Two query engines share one scoring core:

* ``search_fielded`` takes one query per field and keeps only documents that
  match at least one term in every queried field (inclusive filter), scoring
  each surviving document field by field.
* ``search_all_fields`` takes one query and admits any document matching any
  term anywhere, summing the per-field scores over all fields.

Per-field score: sum over matched terms of
``field_weight * tf * idf * prox`` with ``idf = ln((N+1)/(df+1)) + 1`` and
``prox = 1 + 1/(1+W)`` where W is the token length of the smallest window in
that field containing every matched term (W=0 for a single matched term).
A per-document additive prior from the corpus record joins the final score.

Persistence format (stable across runs): a directory holding
``manifest.json`` (format_version, n_docs, doc_ids, priors, authors, field
weights) plus one ``field_<FIELD>.json`` per field carrying its postings
(term -> doc -> sorted token positions) and the raw field texts used for
snippets.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .corpus import Publication, TableDoc
from .errors import (
    DuplicateDocId,
    EmptyQuery,
    IndexFormatError,
    NoMatchInField,
    UnknownDoc,
)
from .text import Token, normalize_text, tokenize_spans
from .vocab import load_stop_list

FORMAT_VERSION = 1
DEFAULT_K = 20
MAX_SNIPPETS_PER_HIT = 3
SNIPPET_WIDTH = 200


class FieldId(str, Enum):
    TITLE = "TITLE"
    ABSTRACT = "ABSTRACT"
    BODY = "BODY"
    TABLE_CAPTION = "TABLE_CAPTION"
    TABLE_DATA = "TABLE_DATA"
    TABLE_META = "TABLE_META"
    FIGURE_CAPTION = "FIGURE_CAPTION"
    FIGURE_CONTENT = "FIGURE_CONTENT"


DEFAULT_FIELD_WEIGHTS: dict[FieldId, float] = {
    FieldId.TITLE: 3.0,
    FieldId.ABSTRACT: 2.0,
    FieldId.BODY: 1.0,
    FieldId.TABLE_CAPTION: 2.0,
    FieldId.TABLE_DATA: 1.0,
    FieldId.TABLE_META: 2.0,
    FieldId.FIGURE_CAPTION: 1.0,
    FieldId.FIGURE_CONTENT: 1.0,
}


def _table_meta_texts(table: TableDoc) -> list[str]:
    texts = [l.raw for l in table.hmd] + [l.raw for l in table.vmd]
    for nested in table.nested_tables():
        texts.extend(l.raw for l in nested.hmd)
        texts.extend(l.raw for l in nested.vmd)
    return texts


def _table_data_texts(table: TableDoc) -> list[str]:
    texts = []
    for row in table.cells:
        for cell in row:
            texts.append(cell.raw)
            if cell.nested is not None:
                texts.extend(_table_data_texts(cell.nested))
    return texts


def field_texts(pub: Publication) -> dict[FieldId, str]:
    """Raw text of each searchable field, chunks joined by newlines."""
    captions = []
    meta = []
    data = []
    for t in pub.tables:
        captions.append(t.caption)
        captions.extend(n.caption for n in t.nested_tables())
        meta.extend(_table_meta_texts(t))
        data.extend(_table_data_texts(t))
    return {
        FieldId.TITLE: pub.title,
        FieldId.ABSTRACT: pub.abstract,
        FieldId.BODY: "\n".join(f"{h}\n{b}" if h else b for h, b in pub.body_sections),
        FieldId.TABLE_CAPTION: "\n".join(captions),
        FieldId.TABLE_DATA: "\n".join(data),
        FieldId.TABLE_META: "\n".join(meta),
        FieldId.FIGURE_CAPTION: "\n".join(c for c, _ in pub.figures),
        FieldId.FIGURE_CONTENT: "\n".join(x for _, x in pub.figures),
    }


@dataclass(frozen=True)
class Snippet:
    field: FieldId
    text: str
    highlight_spans: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class RankedHit:
    doc_id: str
    score: float
    matched: dict[FieldId, list[str]]
    snippets: tuple[Snippet, ...] = ()
    render: Optional[dict] = None  # engine-1 display payload


def query_terms(query: str, stop_list: frozenset[str]) -> list[str]:
    """Ordered distinct query stems; stop-listed words dropped, placeholders kept."""
    seen = []
    for tok in normalize_text(query):
        term = tok.stem
        if tok.kind == "WORD" and term in stop_list:
            continue
        if term not in seen:
            seen.append(term)
    return seen


def minimal_window(position_lists: Sequence[Sequence[int]]) -> int:
    """Token length of the smallest window containing one position from each list.

    Returns 0 for a single list, mirroring the W=0 single-term convention.
    """
    if len(position_lists) <= 1:
        return 0
    events = sorted(
        (pos, li) for li, positions in enumerate(position_lists) for pos in positions
    )
    need = len(position_lists)
    counts = [0] * need
    covered = 0
    best = math.inf
    left = 0
    for right in range(len(events)):
        counts[events[right][1]] += 1
        if counts[events[right][1]] == 1:
            covered += 1
        while covered == need:
            width = events[right][0] - events[left][0] + 1
            best = min(best, width)
            counts[events[left][1]] -= 1
            if counts[events[left][1]] == 0:
                covered -= 1
            left += 1
    return int(best)


class Index:
    """Immutable once built; concurrent readers need no locking."""

    def __init__(self, field_weights: Optional[dict[FieldId, float]] = None):
        self.postings: dict[FieldId, dict[str, dict[str, list[int]]]] = {
            f: {} for f in FieldId
        }
        self.texts: dict[FieldId, dict[str, str]] = {f: {} for f in FieldId}
        self.doc_ids: list[str] = []
        self.priors: dict[str, float] = {}
        self.authors: dict[str, list[str]] = {}
        self.field_weights = dict(DEFAULT_FIELD_WEIGHTS)
        if field_weights:
            self.field_weights.update(field_weights)
        self.stop_list = load_stop_list()

    # --- construction ---

    def add(self, pub: Publication) -> None:
        if pub.id in self.priors:
            raise DuplicateDocId(pub.id)
        self.doc_ids.append(pub.id)
        self.priors[pub.id] = pub.rank_prior
        self.authors[pub.id] = list(pub.authors)
        for fid, text in field_texts(pub).items():
            self.texts[fid][pub.id] = text
            for pos, span in enumerate(tokenize_spans(text)):
                term_docs = self.postings[fid].setdefault(span.token.stem, {})
                term_docs.setdefault(pub.id, []).append(pos)

    @property
    def n_docs(self) -> int:
        return len(self.doc_ids)

    def df(self, term: str, fid: FieldId) -> int:
        return len(self.postings[fid].get(term, {}))

    def tf(self, term: str, fid: FieldId, doc_id: str) -> int:
        return len(self.postings[fid].get(term, {}).get(doc_id, ()))

    def idf(self, term: str, fid: FieldId) -> float:
        return math.log((self.n_docs + 1) / (self.df(term, fid) + 1)) + 1.0

    def tfidf(self, term: str, fid: FieldId, doc_id: str) -> float:
        if doc_id not in self.priors:
            raise UnknownDoc(doc_id)
        tf = self.tf(term, fid, doc_id)
        if tf == 0:
            return 0.0
        return tf * self.idf(term, fid)

    # --- scoring ---

    def _field_score(
        self, terms: Sequence[str], fid: FieldId, doc_id: str
    ) -> tuple[float, list[str]]:
        """Weighted tf-idf-proximity score of one field; returns matched terms."""
        matched = [t for t in terms if self.tf(t, fid, doc_id) > 0]
        if not matched:
            return 0.0, []
        positions = [self.postings[fid][t][doc_id] for t in matched]
        w = minimal_window(positions)
        prox = 1.0 + 1.0 / (1.0 + w)
        weight = self.field_weights[fid]
        score = sum(weight * self.tfidf(t, fid, doc_id) * prox for t in matched)
        return score, matched

    def _render_payload(self, doc_id: str) -> dict:
        # result rendering order: table captions first, then title and
        # authors, then the full abstract
        return {
            "table_captions": [
                c for c in self.texts[FieldId.TABLE_CAPTION].get(doc_id, "").split("\n") if c
            ],
            "title": self.texts[FieldId.TITLE].get(doc_id, ""),
            "authors": self.authors.get(doc_id, []),
            "abstract": self.texts[FieldId.ABSTRACT].get(doc_id, ""),
        }

    def search_fielded(
        self, query_per_field: dict[FieldId, str], k: int = DEFAULT_K
    ) -> list[RankedHit]:
        queries = {
            fid: query_terms(q, self.stop_list)
            for fid, q in query_per_field.items()
            if q and q.strip()
        }
        queries = {fid: terms for fid, terms in queries.items() if terms}
        if not queries:
            raise EmptyQuery("no usable per-field query terms")

        hits = []
        for doc_id in self.doc_ids:
            matched_all = True
            score = self.priors.get(doc_id, 0.0)
            matched: dict[FieldId, list[str]] = {}
            for fid in FieldId:
                if fid not in queries:
                    continue
                fscore, fmatched = self._field_score(queries[fid], fid, doc_id)
                if not fmatched:
                    matched_all = False
                    break
                score += fscore
                matched[fid] = fmatched
            if matched_all:
                hits.append(
                    RankedHit(
                        doc_id=doc_id,
                        score=score,
                        matched=matched,
                        render=self._render_payload(doc_id),
                    )
                )
        hits.sort(key=lambda h: (-h.score, h.doc_id))
        return hits[:k]

    def search_all_fields(self, query: str, k: int = DEFAULT_K) -> list[RankedHit]:
        terms = query_terms(query, self.stop_list)
        if not terms:
            raise EmptyQuery("query normalized to zero terms")
        hits = []
        for doc_id in self.doc_ids:
            total = 0.0
            matched: dict[FieldId, list[str]] = {}
            field_scores: list[tuple[float, FieldId]] = []
            for fid in FieldId:
                fscore, fmatched = self._field_score(terms, fid, doc_id)
                if fmatched:
                    total += fscore
                    matched[fid] = fmatched
                    field_scores.append((fscore, fid))
            if not matched:
                continue
            field_scores.sort(key=lambda t: (-t[0], t[1].value))
            snippets = tuple(
                self.make_snippet(doc_id, fid, matched[fid])
                for _, fid in field_scores[:MAX_SNIPPETS_PER_HIT]
            )
            hits.append(
                RankedHit(
                    doc_id=doc_id,
                    score=total + self.priors.get(doc_id, 0.0),
                    matched=matched,
                    snippets=snippets,
                )
            )
        hits.sort(key=lambda h: (-h.score, h.doc_id))
        return hits[:k]

    # --- snippets ---

    def make_snippet(
        self, doc_id: str, fid: FieldId, matched_terms: Sequence[str]
    ) -> Snippet:
        text = self.texts[fid].get(doc_id, "")
        wanted = set(matched_terms)
        occurrences = [
            (s.start, s.end)
            for s in tokenize_spans(text)
            if s.token.stem in wanted
        ]
        if not occurrences:
            raise NoMatchInField(f"{doc_id} has no match in {fid.value}")
        # densest window: most occurrences inside a SNIPPET_WIDTH char span
        best = (0, 0)  # (count, -start) maximized
        best_range = (occurrences[0][0], occurrences[0][1])
        j = 0
        for i in range(len(occurrences)):
            if occurrences[i][1] - occurrences[i][0] > SNIPPET_WIDTH:
                continue
            j = max(j, i)
            while (
                j + 1 < len(occurrences)
                and occurrences[j + 1][1] - occurrences[i][0] <= SNIPPET_WIDTH
            ):
                j += 1
            count = j - i + 1
            if count > best[0]:
                best = (count, -occurrences[i][0])
                best_range = (occurrences[i][0], occurrences[j][1])
        center = (best_range[0] + best_range[1]) // 2
        start = max(0, min(center - SNIPPET_WIDTH // 2, len(text) - SNIPPET_WIDTH))
        start = max(0, start)
        end = min(len(text), start + SNIPPET_WIDTH)
        window = text[start:end]
        highlights = tuple(
            (s - start, e - start) for s, e in occurrences if s >= start and e <= end
        )
        return Snippet(field=fid, text=window, highlight_spans=highlights)

    # --- persistence ---

    def save(self, directory: Path) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        manifest = {
            "format_version": FORMAT_VERSION,
            "n_docs": self.n_docs,
            "doc_ids": self.doc_ids,
            "priors": self.priors,
            "authors": self.authors,
            "field_weights": {f.value: w for f, w in self.field_weights.items()},
        }
        (directory / "manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8"
        )
        for fid in FieldId:
            payload = {
                "postings": {
                    term: dict(sorted(docs.items()))
                    for term, docs in sorted(self.postings[fid].items())
                },
                "texts": dict(sorted(self.texts[fid].items())),
            }
            (directory / f"field_{fid.value}.json").write_text(
                json.dumps(payload, sort_keys=True), encoding="utf-8"
            )

    @classmethod
    def load(cls, directory: Path) -> "Index":
        directory = Path(directory)
        manifest_path = directory / "manifest.json"
        if not manifest_path.exists():
            raise IndexFormatError(f"no manifest in {directory}")
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        if manifest.get("format_version") != FORMAT_VERSION:
            raise IndexFormatError(
                f"unsupported index format {manifest.get('format_version')}"
            )
        idx = cls(
            field_weights={
                FieldId(f): w for f, w in manifest["field_weights"].items()
            }
        )
        idx.doc_ids = list(manifest["doc_ids"])
        idx.priors = {d: float(p) for d, p in manifest["priors"].items()}
        idx.authors = {d: list(a) for d, a in manifest.get("authors", {}).items()}
        for fid in FieldId:
            payload = json.loads(
                (directory / f"field_{fid.value}.json").read_text(encoding="utf-8")
            )
            idx.postings[fid] = {
                term: {d: list(ps) for d, ps in docs.items()}
                for term, docs in payload["postings"].items()
            }
            idx.texts[fid] = dict(payload["texts"])
        return idx


def build_index(
    corpus: Iterable[Publication],
    field_weights: Optional[dict[FieldId, float]] = None,
) -> Index:
    idx = Index(field_weights=field_weights)
    for pub in corpus:
        idx.add(pub)
    return idx
