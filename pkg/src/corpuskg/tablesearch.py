"""Structural search over non-1NF tables, meta-profiles, and drill-down.

A structural query is a conjunction of predicates. Each predicate names an
attribute (matched against HMD and VMD labels, exact normalized form first,
then embedding within a threshold; hierarchical labels match through any
ancestor) and optionally constrains the cells that attribute governs: the
column under an HMD label, or the rows a VMD label heads or groups. Nested
tables are searched recursively against their own metadata, never flattened;
bindings into them carry the nested table's id.

A meta-profile summarizes a cluster: one bar per distinct (normalized label,
axis) carried by member tables, scored tf * ln(N/df) where tf counts member
tables carrying the attribute, df counts corpus tables carrying it, and N is
the corpus table count. Selecting bars drills down to the sub-cluster of
member tables carrying every selected attribute.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from .cluster import CREATED_DRILLDOWN, TopicCluster, slugify
from .corpus import AttributeLabel, Cell, TableDoc
from .embed import (
    DEFAULT_MATCH_THRESHOLD_DEG,
    EmbeddingProvider,
    angular_distance,
    confidence_from_angle,
)
from .errors import EmptyCluster, EmptyQuery, EmptySelection, UnknownBar, UnknownCluster
from .text import KIND_RANGE, KIND_WORD, normalize_label, normalize_text, parse_range

SCOPE_ALL = "ALL_TABLES"

EQ_NUM = "EQ_NUM"
IN_RANGE = "IN_RANGE"
CONTAINS_TEXT = "CONTAINS_TEXT"

AXIS_HMD = "HMD"
AXIS_VMD = "VMD"


@dataclass(frozen=True)
class ValuePredicate:
    kind: str
    number: Optional[float] = None
    tolerance: float = 1e-9  # relative
    text: Optional[str] = None

    def __post_init__(self):
        if self.kind in (EQ_NUM, IN_RANGE) and self.number is None:
            raise ValueError(f"{self.kind} requires a number")
        if self.kind == CONTAINS_TEXT and self.text is None:
            raise ValueError("CONTAINS_TEXT requires text")

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "number": self.number,
            "tolerance": self.tolerance,
            "text": self.text,
        }


@dataclass(frozen=True)
class Predicate:
    attribute_query: str
    value: Optional[ValuePredicate] = None

    def to_json(self) -> dict:
        return {
            "attribute_query": self.attribute_query,
            "value": self.value.to_json() if self.value else None,
        }


@dataclass(frozen=True)
class StructuralQuery:
    predicates: tuple[Predicate, ...]
    scope: str = SCOPE_ALL  # ALL_TABLES or a cluster id
    match_threshold_deg: float = DEFAULT_MATCH_THRESHOLD_DEG

    def to_json(self) -> dict:
        return {
            "predicates": [p.to_json() for p in self.predicates],
            "scope": self.scope,
            "match_threshold_deg": self.match_threshold_deg,
        }


@dataclass(frozen=True)
class CellRef:
    table_id: str
    row: int
    col: int


@dataclass(frozen=True)
class Binding:
    predicate_index: int
    label: AttributeLabel
    axis: str
    confidence: float
    cells: tuple[CellRef, ...] = ()
    matched_literal: Optional[float] = None

    def to_json(self) -> dict:
        return {
            "predicate_index": self.predicate_index,
            "label": self.label.raw,
            "axis": self.axis,
            "confidence": self.confidence,
            "cells": [
                {"table_id": c.table_id, "row": c.row, "col": c.col} for c in self.cells
            ],
            "matched_literal": self.matched_literal,
        }


@dataclass(frozen=True)
class TableHit:
    table_id: str
    score: float
    bindings: tuple[Binding, ...]

    def to_json(self) -> dict:
        return {
            "table_id": self.table_id,
            "score": self.score,
            "bindings": [b.to_json() for b in self.bindings],
        }


def unify_value(cell: Cell, p: ValuePredicate) -> bool:
    """Check a value predicate against one cell (numeric and range literals
    come from the cell's own parse)."""
    if p.kind == EQ_NUM:
        return any(_num_eq(v, p.number, p.tolerance) for v in cell.numeric_values)
    if p.kind == IN_RANGE:
        for tok in cell.normalized:
            if tok.kind == KIND_RANGE:
                lo, hi = parse_range(tok.surface)
                if min(lo, hi) <= p.number <= max(lo, hi):
                    return True
        return False
    if p.kind == CONTAINS_TEXT:
        needle = [t.stem for t in normalize_text(p.text)]
        if not needle:
            return False
        hay = [t.stem for t in cell.normalized]
        it = iter(hay)
        return all(any(h == n for h in it) for n in needle)  # subsequence
    raise ValueError(f"unknown value predicate kind {p.kind!r}")


def _num_eq(a: float, b: float, rel_tol: float) -> bool:
    return abs(a - b) <= rel_tol * max(abs(a), abs(b), 1e-300) or a == b


def matched_literal(cell: Cell, p: ValuePredicate) -> Optional[float]:
    if p.kind == EQ_NUM:
        for v in cell.numeric_values:
            if _num_eq(v, p.number, p.tolerance):
                return v
    return None


def _label_matches(
    query: str,
    query_norm: str,
    query_vec: Optional[np.ndarray],
    label: AttributeLabel,
    provider: EmbeddingProvider,
    threshold_deg: float,
) -> Optional[float]:
    """Confidence of a query matching a label or any of its ancestors."""
    best: Optional[float] = None
    chain = [label] + list(label.ancestors())
    for cand in chain:
        if not cand.normalized:
            continue
        if cand.normalized == query_norm:
            return 1.0
        if query_vec is None or not np.any(query_vec):
            continue
        cand_vec = provider.embed_text(cand.raw)
        if not np.any(cand_vec):
            continue
        angle = angular_distance(query_vec, cand_vec)
        if angle <= threshold_deg:
            conf = confidence_from_angle(angle)
            if best is None or conf > best:
                best = conf
    return best


def _vmd_governed_rows(table: TableDoc, row_idx: int) -> list[int]:
    """Rows governed by the VMD label at row_idx: its own row plus every row
    whose label sits under it in the header hierarchy."""
    label = table.vmd[row_idx]
    rows = []
    for i, other in enumerate(table.vmd):
        if other is label or label in other.ancestors():
            rows.append(i)
    return rows


def _predicate_bindings(
    table: TableDoc,
    pred: Predicate,
    pred_idx: int,
    provider: EmbeddingProvider,
    threshold_deg: float,
) -> list[Binding]:
    """All satisfying bindings of one predicate in one table (nested included)."""
    query_norm = normalize_label(pred.attribute_query)
    query_vec = provider.embed_text(pred.attribute_query)
    bindings: list[Binding] = []

    def value_cells(cells: list[tuple[int, int]]) -> tuple[list[CellRef], Optional[float]]:
        refs = []
        literal = None
        for (i, j) in cells:
            cell = table.cells[i][j]
            if unify_value(cell, pred.value):
                refs.append(CellRef(table.table_id, i, j))
                if literal is None:
                    literal = matched_literal(cell, pred.value)
        return refs, literal

    # HMD: the matched column governs the cells under it
    for j, label in enumerate(table.hmd):
        conf = _label_matches(
            pred.attribute_query, query_norm, query_vec, label, provider, threshold_deg
        )
        if conf is None:
            continue
        if pred.value is None:
            bindings.append(Binding(pred_idx, label, AXIS_HMD, conf))
            continue
        refs, literal = value_cells([(i, j) for i in range(table.n_rows)])
        if refs:
            bindings.append(
                Binding(pred_idx, label, AXIS_HMD, conf, tuple(refs), literal)
            )

    # VMD: the matched row header governs its row(s)
    for i, label in enumerate(table.vmd):
        conf = _label_matches(
            pred.attribute_query, query_norm, query_vec, label, provider, threshold_deg
        )
        if conf is None:
            continue
        if pred.value is None:
            bindings.append(Binding(pred_idx, label, AXIS_VMD, conf))
            continue
        cells = [
            (r, j) for r in _vmd_governed_rows(table, i) for j in range(table.n_cols)
        ]
        refs, literal = value_cells(cells)
        if refs:
            bindings.append(
                Binding(pred_idx, label, AXIS_VMD, conf, tuple(refs), literal)
            )

    # nested tables match against their own metadata, never flattened
    for row in table.cells:
        for cell in row:
            if cell.nested is not None:
                bindings.extend(
                    _predicate_bindings(
                        cell.nested, pred, pred_idx, provider, threshold_deg
                    )
                )
    return bindings


def _caption_stats(tables: Sequence[TableDoc]) -> tuple[int, dict[str, int]]:
    df: dict[str, int] = {}
    for t in tables:
        for stem in {tok.stem for tok in normalize_text(t.caption) if tok.kind == KIND_WORD}:
            df[stem] = df.get(stem, 0) + 1
    return len(tables), df


def _caption_bonus(
    table: TableDoc,
    query_stems: set[str],
    n_tables: int,
    caption_df: dict[str, int],
) -> float:
    caption_tokens = [t.stem for t in normalize_text(table.caption) if t.kind == KIND_WORD]
    bonus = 0.0
    for stem in sorted(query_stems):
        tf = caption_tokens.count(stem)
        if tf:
            idf = math.log((n_tables + 1) / (caption_df.get(stem, 0) + 1)) + 1.0
            bonus += tf * idf
    return bonus


class TableSearch:
    """Pure reads over an immutable corpus-table snapshot."""

    def __init__(
        self,
        tables: Sequence[TableDoc],
        provider: EmbeddingProvider,
        clusters: Optional[dict[str, TopicCluster]] = None,
    ):
        self.tables = list(tables)
        self.by_id = {t.table_id: t for t in self.tables}
        self.provider = provider
        self.clusters = clusters or {}
        self.n_tables, self.caption_df = _caption_stats(self.tables)

    def _scope_tables(self, scope: str) -> list[TableDoc]:
        if scope == SCOPE_ALL:
            return self.tables
        if scope not in self.clusters:
            raise UnknownCluster(scope)
        members = self.clusters[scope].member_table_ids
        return [t for t in self.tables if t.table_id in members]

    def search(self, q: StructuralQuery, k: int = 20) -> list[TableHit]:
        if not q.predicates or any(not p.attribute_query.strip() for p in q.predicates):
            raise EmptyQuery("structural query needs non-empty predicates")
        candidates = self._scope_tables(q.scope)
        query_stems = {
            tok.stem
            for p in q.predicates
            for tok in normalize_text(p.attribute_query)
            if tok.kind == KIND_WORD
        }
        hits: list[TableHit] = []
        for table in candidates:
            all_bindings: list[Binding] = []
            score = 0.0
            satisfied = True
            for idx, pred in enumerate(q.predicates):
                bindings = _predicate_bindings(
                    table, pred, idx, self.provider, q.match_threshold_deg
                )
                if not bindings:
                    satisfied = False
                    break
                score += max(b.confidence for b in bindings)
                all_bindings.extend(bindings)
            if not satisfied:
                continue
            score += _caption_bonus(table, query_stems, self.n_tables, self.caption_df)
            hits.append(TableHit(table.table_id, score, tuple(all_bindings)))
        hits.sort(key=lambda h: (-h.score, h.table_id))
        return hits[:k]


# --- meta-profiles ------------------------------------------------------------


@dataclass(frozen=True)
class Bar:
    label: AttributeLabel
    axis: str
    score: float
    table_ids: frozenset[str]

    def to_json(self) -> dict:
        return {
            "label": self.label.raw,
            "axis": self.axis,
            "score": self.score,
            "table_ids": sorted(self.table_ids),
        }


@dataclass(frozen=True)
class MetaProfile:
    cluster_id: str
    bars: tuple[Bar, ...]

    def to_json(self) -> dict:
        return {"version": 1, "cluster_id": self.cluster_id, "bars": [b.to_json() for b in self.bars]}


def table_attributes(table: TableDoc, axis: str) -> dict[str, AttributeLabel]:
    """Distinct attributes a table carries on an axis, ancestors included."""
    out: dict[str, AttributeLabel] = {}
    for label in table.axis_labels(axis):
        for cand in [label] + list(label.ancestors()):
            if cand.normalized and cand.normalized not in out:
                out[cand.normalized] = cand
    return out


def build_metaprofile(
    cluster: TopicCluster,
    all_tables: Sequence[TableDoc],
) -> MetaProfile:
    members = [t for t in all_tables if t.table_id in cluster.member_table_ids]
    if not members:
        raise EmptyCluster(cluster.cluster_id)
    members.sort(key=lambda t: t.table_id)
    n_total = len(all_tables)

    df: dict[tuple[str, str], int] = {}
    for table in all_tables:
        for axis in (AXIS_HMD, AXIS_VMD):
            for norm in table_attributes(table, axis):
                df[(norm, axis)] = df.get((norm, axis), 0) + 1

    carrier: dict[tuple[str, str], tuple[AttributeLabel, set[str]]] = {}
    for table in members:
        for axis in (AXIS_HMD, AXIS_VMD):
            for norm, label in table_attributes(table, axis).items():
                key = (norm, axis)
                if key not in carrier:
                    carrier[key] = (label, set())
                carrier[key][1].add(table.table_id)

    bars = []
    for (norm, axis), (label, ids) in carrier.items():
        tf = len(ids)
        score = tf * math.log(n_total / df[(norm, axis)])
        bars.append(Bar(label=label, axis=axis, score=score, table_ids=frozenset(ids)))
    bars.sort(key=lambda b: (-b.score, b.label.normalized, b.axis))
    return MetaProfile(cluster_id=cluster.cluster_id, bars=tuple(bars))


def drilldown(
    cluster: TopicCluster,
    profile: MetaProfile,
    selected_bars: Sequence[tuple[str, str]],
    all_tables: Sequence[TableDoc],
) -> TopicCluster:
    """Sub-cluster of member tables carrying every selected (label, axis) bar."""
    if not selected_bars:
        raise EmptySelection("no bars selected")
    available = {(b.label.normalized, b.axis): b for b in profile.bars}
    chosen: list[Bar] = []
    for raw_label, axis in selected_bars:
        key = (normalize_label(raw_label), axis)
        if key not in available:
            raise UnknownBar(f"{raw_label!r} on {axis}")
        chosen.append(available[key])
    members = set(cluster.member_table_ids)
    for bar in chosen:
        members &= bar.table_ids
    joined = " + ".join(b.label.raw for b in chosen)
    sub_id = f"{cluster.cluster_id}::{slugify(joined)}"
    return TopicCluster(
        cluster_id=sub_id,
        topic=f"{cluster.topic} / {joined}",
        member_table_ids=members,
        classifier=None,
        created_from=CREATED_DRILLDOWN,
    )
