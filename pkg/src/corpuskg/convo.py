"""Conversational query parsing and KG-guarded retrieval orchestration.

``parse_query`` splits a natural-language question in two: a structural part
(table-attribute predicates with optional numeric values) and a textual part
(the original question amended with synonyms of the identified attributes).
Candidate attribute spans are contiguous word n-grams of the question that
occur verbatim inside some corpus label (or match a synonym-lexicon entry);
each candidate is then validated against the labels with the embedding
matcher, longest match first, non-overlapping. A numeric literal within
three tokens after an identified attribute (and before the next one) becomes
an equality value predicate.

``answer`` runs both parts, assembles source-identified context blocks from
the results (tables rendered as label:value lines, publication snippets, KG
paths), and hands them to a pluggable chat-completions-style LLM client.
The STUB client renders context ids deterministically so the whole path runs
offline; LLM transport failures degrade to empty narrative, never losing the
search results.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import requests

from .corpus import AttributeLabel, Publication, TableDoc
from .embed import (
    DEFAULT_MATCH_THRESHOLD_DEG,
    EmbeddingProvider,
    SynonymLexicon,
    angular_distance,
)
from .errors import AuthError, EmptyQuery, LlmUnavailable, MalformedResponse, Timeout
from .index import FieldId, Index, RankedHit
from .kg import Kg
from .tablesearch import (
    EQ_NUM,
    Predicate,
    StructuralQuery,
    TableHit,
    TableSearch,
    ValuePredicate,
)
from .text import KIND_NUM, KIND_WORD, normalize_label, normalize_text, tokenize_spans

MAX_NGRAM = 6
VALUE_WINDOW = 3
MAX_CONTEXT_BLOCKS = 5
MAX_BLOCK_CHARS = 1500
SYNONYMS_PER_FIELD = 5

ENGINE_FIELD = "FIELD"
ENGINE_ALL = "ALL"
ENGINE_TABLE = "TABLE"


@dataclass(frozen=True)
class IdentifiedSpan:
    surface: str
    matched_label: AttributeLabel
    confidence: float
    token_start: int
    token_end: int  # exclusive
    value: Optional[float] = None


@dataclass(frozen=True)
class ParsedQuery:
    original: str
    structural: StructuralQuery
    textual: str
    identified: tuple[IdentifiedSpan, ...]


class AttributeDictionary:
    """Word n-grams of corpus labels plus synonym-lexicon entries, with the
    source labels each key can stand for."""

    def __init__(
        self,
        labels: Sequence[AttributeLabel],
        provider: EmbeddingProvider,
        lexicon: Optional[SynonymLexicon] = None,
        synonym_threshold_deg: float = DEFAULT_MATCH_THRESHOLD_DEG,
    ):
        self.provider = provider
        self.labels: list[AttributeLabel] = []
        seen: set[str] = set()
        for label in labels:
            if label.normalized and label.normalized not in seen:
                seen.add(label.normalized)
                self.labels.append(label)
        self.lexicon = lexicon
        self.synonym_threshold_deg = synonym_threshold_deg
        self.ngrams: dict[tuple[str, ...], list[AttributeLabel]] = {}
        for label in self.labels:
            stems = [t.stem for t in normalize_text(label.raw) if t.kind == KIND_WORD]
            for n in range(1, min(MAX_NGRAM, len(stems)) + 1):
                for s in range(len(stems) - n + 1):
                    key = tuple(stems[s : s + n])
                    self.ngrams.setdefault(key, [])
                    if label not in self.ngrams[key]:
                        self.ngrams[key].append(label)
        if lexicon is not None:
            for label in self.labels:
                for display, _angle in lexicon.synonyms_for(
                    label.raw, top_n=SYNONYMS_PER_FIELD, threshold_deg=synonym_threshold_deg
                ):
                    key = tuple(
                        t.stem for t in normalize_text(display) if t.kind == KIND_WORD
                    )
                    if key:
                        self.ngrams.setdefault(key, [])
                        if label not in self.ngrams[key]:
                            self.ngrams[key].append(label)

    def candidates(self, key: tuple[str, ...]) -> list[AttributeLabel]:
        return self.ngrams.get(key, [])

    def validate(
        self, surface: str, key: tuple[str, ...], threshold_deg: float
    ) -> Optional[tuple[AttributeLabel, float]]:
        """Best label the span stands for, by exact form or embedding angle."""
        span_norm = " ".join(key)
        best: Optional[tuple[float, float, AttributeLabel]] = None  # (-conf, angle, label)
        span_vec = None
        for label in self.candidates(key):
            if label.normalized == span_norm:
                return label, 1.0
            if span_vec is None:
                span_vec = self.provider.embed_text(surface)
            if not np.any(span_vec):
                continue
            label_vec = self.provider.embed_text(label.raw)
            if not np.any(label_vec):
                continue
            angle = angular_distance(span_vec, label_vec)
            if angle <= threshold_deg:
                entry = (-(1.0 - angle / 90.0), angle, label)
                if best is None or entry < best:
                    best = entry
        if best is None:
            return None
        return best[2], -best[0]


def build_attribute_dictionary(
    tables: Sequence[TableDoc],
    provider: EmbeddingProvider,
    lexicon: Optional[SynonymLexicon] = None,
) -> AttributeDictionary:
    labels: list[AttributeLabel] = []
    for table in tables:
        for label in list(table.hmd) + list(table.vmd):
            labels.append(label)
            labels.extend(label.ancestors())
        for nested in table.nested_tables():
            for label in list(nested.hmd) + list(nested.vmd):
                labels.append(label)
    return AttributeDictionary(labels, provider, lexicon)


def parse_query(
    q: str,
    dictionary: AttributeDictionary,
    lexicon: Optional[SynonymLexicon] = None,
    match_threshold_deg: float = DEFAULT_MATCH_THRESHOLD_DEG,
) -> ParsedQuery:
    if not q or not q.strip():
        raise EmptyQuery("empty conversational query")
    spans = tokenize_spans(q)
    n = len(spans)
    identified: list[IdentifiedSpan] = []
    consumed = [False] * n
    pos = 0
    while pos < n:
        if spans[pos].token.kind != KIND_WORD:
            pos += 1
            continue
        hit = None
        max_n = min(MAX_NGRAM, n - pos)
        for length in range(max_n, 0, -1):
            window = spans[pos : pos + length]
            if any(s.token.kind != KIND_WORD for s in window):
                continue
            key = tuple(s.token.stem for s in window)
            if not dictionary.candidates(key):
                continue
            surface = q[window[0].start : window[-1].end]
            validated = dictionary.validate(surface, key, match_threshold_deg)
            if validated is not None:
                hit = (surface, validated[0], validated[1], pos, pos + length)
                break
        if hit is None:
            pos += 1
            continue
        identified.append(
            IdentifiedSpan(
                surface=hit[0],
                matched_label=hit[1],
                confidence=hit[2],
                token_start=hit[3],
                token_end=hit[4],
            )
        )
        for i in range(hit[3], hit[4]):
            consumed[i] = True
        pos = hit[4]

    # attach a numeric literal within the window after each attribute,
    # stopping at the next identified attribute
    starts = {s.token_start for s in identified}
    final_spans: list[IdentifiedSpan] = []
    value_used = [False] * n
    for span in identified:
        value = None
        for offset in range(VALUE_WINDOW):
            i = span.token_end + offset
            if i >= n or i in starts or consumed[i]:
                break
            if spans[i].token.kind == KIND_NUM and not value_used[i]:
                value = float(spans[i].token.surface.replace(",", ""))
                value_used[i] = True
                break
        final_spans.append(
            IdentifiedSpan(
                surface=span.surface,
                matched_label=span.matched_label,
                confidence=span.confidence,
                token_start=span.token_start,
                token_end=span.token_end,
                value=value,
            )
        )

    predicates = tuple(
        Predicate(
            attribute_query=s.surface,
            value=ValuePredicate(kind=EQ_NUM, number=s.value) if s.value is not None else None,
        )
        for s in final_spans
    )

    textual = q
    if final_spans and lexicon is not None:
        clauses = []
        for s in final_spans:
            syns = lexicon.synonyms_for(s.matched_label.raw, top_n=SYNONYMS_PER_FIELD)
            names = [display for display, _ in syns if normalize_label(display) != normalize_label(s.surface)]
            if names:
                clauses.append(f"{s.surface}: {', '.join(names)}")
        if clauses:
            textual = q + "\nsynonyms: " + "; ".join(clauses)

    return ParsedQuery(
        original=q,
        structural=StructuralQuery(predicates=predicates, match_threshold_deg=match_threshold_deg),
        textual=textual,
        identified=tuple(final_spans),
    )


# --- LLM client ---------------------------------------------------------------


@dataclass
class LlmConfig:
    endpoint: str = ""
    model_name: str = "stub"
    api_key: str = ""
    timeout_s: float = 30.0
    retries: int = 1
    backoff_s: float = 0.5
    stub: bool = True


@dataclass
class LlmExchange:
    endpoint: str
    model_name: str
    prompt: str
    context_blocks: tuple[tuple[str, str], ...]  # (source id, text)
    response: str
    status: str

    def to_json(self) -> dict:
        return {
            "endpoint": self.endpoint,
            "model_name": self.model_name,
            "prompt": self.prompt,
            "context_blocks": [
                {"source_id": sid, "text": text} for sid, text in self.context_blocks
            ],
            "response": self.response,
            "status": self.status,
        }


class LlmClient:
    """Chat-completions-style HTTP client with a deterministic offline stub.

    Wire format: POST ``{"model": ..., "messages": [{"role", "content"}]}``;
    the reply's first choice's message content is the narrative.
    """

    def __init__(self, config: LlmConfig, transport: Optional[Callable] = None):
        self.config = config
        self._post = transport or requests.post

    def send(self, prompt: str, context_blocks: Sequence[tuple[str, str]]) -> str:
        if self.config.stub:
            if not context_blocks:
                return "stub response (no context)"
            ids = ", ".join(sid for sid, _ in context_blocks)
            return f"stub response from context: {ids}"
        body = {
            "model": self.config.model_name,
            "messages": [{"role": "user", "content": prompt}],
        }
        headers = {"Content-Type": "application/json"}
        if self.config.api_key:
            headers["Authorization"] = f"Bearer {self.config.api_key}"
        last_timeout = None
        for attempt in range(self.config.retries + 1):
            if attempt:
                time.sleep(self.config.backoff_s * (2 ** (attempt - 1)))
            try:
                resp = self._post(
                    self.config.endpoint,
                    json=body,
                    headers=headers,
                    timeout=self.config.timeout_s,
                )
            except requests.Timeout:
                last_timeout = Timeout(f"no response within {self.config.timeout_s}s")
                continue
            except requests.RequestException as exc:
                raise LlmUnavailable(str(exc)) from exc
            if resp.status_code in (401, 403):
                raise AuthError(f"endpoint returned {resp.status_code}")
            if resp.status_code >= 400:
                raise LlmUnavailable(f"endpoint returned {resp.status_code}")
            try:
                doc = resp.json()
                return doc["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise MalformedResponse(str(exc)) from exc
        raise last_timeout


def llm_client(config: LlmConfig, transport: Optional[Callable] = None) -> LlmClient:
    return LlmClient(config, transport=transport)


# --- answer orchestration -----------------------------------------------------

PROMPT_PREAMBLE = (
    "Answer the question using only the numbered context blocks below. "
    "Cite block source ids for every claim. If the context is insufficient, say so."
)


def render_table_block(table: TableDoc) -> str:
    lines = [f"caption: {table.caption}"] if table.caption else []
    headers = [l.raw for l in table.hmd]
    for i, row in enumerate(table.cells):
        row_label = table.vmd[i].raw if i < len(table.vmd) else ""
        pairs = []
        for j, cell in enumerate(row):
            if not cell.raw:
                continue
            header = headers[j] if j < len(headers) else ""
            pairs.append(f"{header}: {cell.raw}" if header else cell.raw)
        prefix = f"{row_label} | " if row_label else ""
        if pairs:
            lines.append(prefix + "; ".join(pairs))
    return "\n".join(lines)[:MAX_BLOCK_CHARS]


@dataclass
class AnswerResult:
    tables: list[TableHit]
    hits: list[RankedHit]
    narrative: str
    exchange: LlmExchange
    parsed: ParsedQuery


def answer(
    q: str,
    engine: str,
    llm: LlmClient,
    *,
    dictionary: AttributeDictionary,
    table_search: TableSearch,
    index: Index,
    kg: Optional[Kg] = None,
    lexicon: Optional[SynonymLexicon] = None,
    k: int = 5,
) -> AnswerResult:
    parsed = parse_query(q, dictionary, lexicon=lexicon)

    tables: list[TableHit] = []
    if parsed.structural.predicates:
        tables = table_search.search(parsed.structural, k=k)

    hits: list[RankedHit] = []
    if engine != ENGINE_TABLE:
        try:
            if engine == ENGINE_ALL:
                hits = index.search_all_fields(parsed.textual, k=k)
            elif engine == ENGINE_FIELD:
                hits = index.search_fielded({FieldId.BODY: parsed.textual}, k=k)
            else:
                raise ValueError(f"unknown engine {engine!r}")
        except EmptyQuery:
            hits = []

    blocks: list[tuple[str, str]] = []
    for hit in tables[:2]:
        table = table_search.by_id.get(hit.table_id)
        if table is not None:
            blocks.append((f"table:{hit.table_id}", render_table_block(table)))
    for hit in hits[:2]:
        text = " ... ".join(s.text for s in hit.snippets) or hit.doc_id
        blocks.append((f"pub:{hit.doc_id}", text[:MAX_BLOCK_CHARS]))
    if kg is not None:
        try:
            kg_results = kg.search(q)
        except EmptyQuery:
            kg_results = []
        if kg_results:
            node_id, path = kg_results[0]
            labels = " > ".join(kg.node(nid).label for nid in path)
            blocks.append((f"kg:{node_id}", f"path: {labels}"))
    blocks = blocks[:MAX_CONTEXT_BLOCKS]

    numbered = "\n\n".join(
        f"[{i + 1}] source={sid}\n{text}" for i, (sid, text) in enumerate(blocks)
    )
    prompt = f"{PROMPT_PREAMBLE}\n\n{numbered}\n\nQuestion: {q}"

    status = "ok"
    narrative = ""
    try:
        narrative = llm.send(prompt, blocks)
    except (LlmUnavailable, AuthError, Timeout, MalformedResponse) as exc:
        status = exc.code

    exchange = LlmExchange(
        endpoint=llm.config.endpoint,
        model_name=llm.config.model_name,
        prompt=prompt,
        context_blocks=tuple(blocks),
        response=narrative,
        status=status,
    )
    return AnswerResult(
        tables=tables, hits=hits, narrative=narrative, exchange=exchange, parsed=parsed
    )
