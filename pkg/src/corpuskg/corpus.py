"""Publication and non-1NF table data model plus corpus-record ingestion.

Corpus record format (one JSON document per file, or one per line in a
``.jsonl`` file)::

    {
      "id": "...", "title": "...", "authors": ["..."], "abstract": "...",
      "date": "2024-01-31", "source_uri": "...", "rank_prior": 0.0,
      "sections": [{"heading": "...", "text": "..."}],
      "figures":  [{"caption": "...", "text": "..."}],
      "tables":   [{"caption": "...", "n_header_rows": 1, "n_header_cols": 0,
                    "rows": [["cell", {"text": "...", "nested_table": {...}}]]}]
    }

Tables keep their full width: the grid holds every non-header row across all
columns, so header columns double as data cells of their rows. The first
``n_header_rows`` rows yield HMD (one label per column; stacked rows nest,
the label above becoming the parent). The leftmost ``n_header_cols`` columns
yield VMD (one label per row, the rightmost non-empty header cell; cells to
its left become parents, and labels left open by earlier rows are inherited
so group headers govern their span of rows). Ragged rows are padded, never
rejected. Nested tables parse recursively with their own metadata; nesting
deeper than 2 levels is rejected.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterator, Optional

from .errors import MalformedRecord, NestingTooDeep
from .text import Token, extract_numbers, normalize_label, normalize_text

MAX_NESTING = 2


@dataclass(frozen=True)
class AttributeLabel:
    """A table header label; ``parent`` points up a hierarchical header."""

    raw: str
    normalized: str
    parent: Optional["AttributeLabel"] = None

    @classmethod
    def make(cls, raw: str, parent: Optional["AttributeLabel"] = None) -> "AttributeLabel":
        return cls(raw=raw, normalized=normalize_label(raw), parent=parent)

    def ancestors(self) -> Iterator["AttributeLabel"]:
        node = self.parent
        while node is not None:
            yield node
            node = node.parent

    def chain_normalized(self) -> list[str]:
        """Normalized labels from this label up to the top of its chain."""
        return [self.normalized] + [a.normalized for a in self.ancestors()]


EMPTY_LABEL = AttributeLabel(raw="", normalized="", parent=None)


@dataclass(frozen=True)
class Cell:
    raw: str
    normalized: tuple[Token, ...]
    numeric_values: tuple[float, ...]
    nested: Optional["TableDoc"] = None

    @classmethod
    def make(cls, raw: str, nested: Optional["TableDoc"] = None) -> "Cell":
        return cls(
            raw=raw,
            normalized=tuple(normalize_text(raw)),
            numeric_values=tuple(extract_numbers(raw)),
            nested=nested,
        )


EMPTY_CELL = Cell(raw="", normalized=(), numeric_values=(), nested=None)


@dataclass(frozen=True)
class TableDoc:
    table_id: str
    parent_id: str
    caption: str
    hmd: tuple[AttributeLabel, ...]
    vmd: tuple[AttributeLabel, ...]  # empty when the format marks no header columns
    cells: tuple[tuple[Cell, ...], ...]
    provenance: tuple[str, int]  # (section heading, ordinal within the publication)

    @property
    def n_rows(self) -> int:
        return len(self.cells)

    @property
    def n_cols(self) -> int:
        return len(self.cells[0]) if self.cells else 0

    def nested_tables(self) -> Iterator["TableDoc"]:
        for row in self.cells:
            for cell in row:
                if cell.nested is not None:
                    yield cell.nested
                    yield from cell.nested.nested_tables()

    def axis_labels(self, axis: str) -> tuple[AttributeLabel, ...]:
        return self.hmd if axis == "HMD" else self.vmd


@dataclass(frozen=True)
class Publication:
    id: str
    title: str
    authors: tuple[str, ...]
    abstract: str
    body_sections: tuple[tuple[str, str], ...]
    figures: tuple[tuple[str, str], ...]
    tables: tuple[TableDoc, ...]
    source_uri: str = ""
    published_date: str = ""
    rank_prior: float = 0.0  # optional per-document ranking prior from the record

    def all_tables(self) -> Iterator[TableDoc]:
        """Top-level tables followed by their nested tables."""
        for t in self.tables:
            yield t
            yield from t.nested_tables()


def _cell_text_and_nested(raw_cell: Any) -> tuple[str, Any]:
    if isinstance(raw_cell, dict):
        return str(raw_cell.get("text", "")), raw_cell.get("nested_table")
    if raw_cell is None:
        return "", None
    return str(raw_cell), None


def _parse_header_labels_hmd(
    header_rows: list[list[str]], width: int
) -> tuple[AttributeLabel, ...]:
    depth = len(header_rows)
    open_labels: list[Optional[AttributeLabel]] = [None] * depth
    open_raw: list[str] = [""] * depth
    hmd: list[AttributeLabel] = []
    for c in range(width):
        for r in range(depth):
            text = header_rows[r][c].strip()
            if not text:
                continue
            if open_raw[r] == text:
                continue  # spanning continuation of the same group
            parent = None
            for r2 in range(r - 1, -1, -1):
                if open_labels[r2] is not None:
                    parent = open_labels[r2]
                    break
            open_labels[r] = AttributeLabel.make(text, parent)
            open_raw[r] = text
            for r2 in range(r + 1, depth):
                open_labels[r2] = None
                open_raw[r2] = ""
        label: Optional[AttributeLabel] = None
        for r in range(depth - 1, -1, -1):
            if open_labels[r] is not None:
                label = open_labels[r]
                break
        hmd.append(label if label is not None else EMPTY_LABEL)
    return tuple(hmd)


def _parse_header_labels_vmd(
    grid_rows: list[list[str]], n_header_cols: int
) -> tuple[AttributeLabel, ...]:
    open_labels: list[Optional[AttributeLabel]] = [None] * n_header_cols
    open_raw: list[str] = [""] * n_header_cols
    vmd: list[AttributeLabel] = []
    for row in grid_rows:
        deepest_in_row: Optional[AttributeLabel] = None
        for l in range(n_header_cols):
            text = row[l].strip() if l < len(row) else ""
            if not text:
                continue
            if open_raw[l] == text:
                deepest_in_row = open_labels[l]
                continue
            parent = None
            for l2 in range(l - 1, -1, -1):
                if open_labels[l2] is not None:
                    parent = open_labels[l2]
                    break
            open_labels[l] = AttributeLabel.make(text, parent)
            open_raw[l] = text
            for l2 in range(l + 1, n_header_cols):
                open_labels[l2] = None
                open_raw[l2] = ""
            deepest_in_row = open_labels[l]
        if deepest_in_row is None:
            for l in range(n_header_cols - 1, -1, -1):
                if open_labels[l] is not None:
                    deepest_in_row = open_labels[l]
                    break
        vmd.append(deepest_in_row if deepest_in_row is not None else EMPTY_LABEL)
    return tuple(vmd)


def parse_table(
    record: dict,
    parent_id: str,
    table_id: str,
    provenance: tuple[str, int],
    depth: int = 0,
) -> TableDoc:
    if depth > MAX_NESTING:
        raise NestingTooDeep(
            f"table {table_id} nested {depth} levels deep (max {MAX_NESTING})"
        )
    rows_in = record.get("rows", [])
    n_header_rows = int(record.get("n_header_rows", 1))
    n_header_cols = int(record.get("n_header_cols", 0))
    n_header_rows = max(0, min(n_header_rows, len(rows_in)))

    parsed: list[list[tuple[str, Any]]] = [
        [_cell_text_and_nested(c) for c in row] for row in rows_in
    ]
    width = max((len(r) for r in parsed), default=0)
    for row in parsed:
        row.extend([("", None)] * (width - len(row)))  # pad ragged rows

    header_rows = [[c[0] for c in parsed[r]] for r in range(n_header_rows)]
    grid_in = parsed[n_header_rows:]

    hmd = _parse_header_labels_hmd(header_rows, width) if width else ()
    vmd = (
        _parse_header_labels_vmd([[c[0] for c in row] for row in grid_in], n_header_cols)
        if n_header_cols > 0 and grid_in
        else ()
    )

    cells: list[tuple[Cell, ...]] = []
    for i, row in enumerate(grid_in):
        out_row = []
        for j, (text, nested_rec) in enumerate(row):
            nested = None
            if nested_rec is not None:
                nested = parse_table(
                    nested_rec,
                    parent_id,
                    f"{table_id}.n{i}.{j}",
                    provenance,
                    depth + 1,
                )
            out_row.append(Cell.make(text, nested) if (text or nested) else EMPTY_CELL)
        cells.append(tuple(out_row))

    return TableDoc(
        table_id=table_id,
        parent_id=parent_id,
        caption=str(record.get("caption", "")),
        hmd=hmd,
        vmd=vmd,
        cells=tuple(cells),
        provenance=provenance,
    )


def parse_publication(record: dict) -> Publication:
    """Parse one corpus-format record into a Publication."""
    if not isinstance(record, dict):
        raise MalformedRecord("record is not an object")
    pub_id = record.get("id")
    title = record.get("title")
    if not pub_id or not isinstance(pub_id, str):
        raise MalformedRecord("record missing id")
    if title is None or not isinstance(title, str) or not title:
        raise MalformedRecord(f"record {pub_id!r} missing title")

    sections = tuple(
        (str(s.get("heading", "")), str(s.get("text", "")))
        for s in record.get("sections", [])
    )
    figures = tuple(
        (str(f.get("caption", "")), str(f.get("text", "")))
        for f in record.get("figures", [])
    )
    tables = []
    for i, t in enumerate(record.get("tables", [])):
        heading = str(t.get("section", "")) if isinstance(t, dict) else ""
        tables.append(parse_table(t, pub_id, f"{pub_id}:t{i}", (heading, i)))

    return Publication(
        id=pub_id,
        title=title,
        authors=tuple(str(a) for a in record.get("authors", [])),
        abstract=str(record.get("abstract", "")),
        body_sections=sections,
        figures=figures,
        tables=tuple(tables),
        source_uri=str(record.get("source_uri", "")),
        published_date=str(record.get("date", "")),
        rank_prior=float(record.get("rank_prior", 0.0)),
    )


def load_records(path: Path) -> Iterator[dict]:
    """Yield corpus records from a .json file, .jsonl file, or a directory."""
    path = Path(path)
    if path.is_dir():
        for child in sorted(path.iterdir()):
            if child.suffix in (".json", ".jsonl"):
                yield from load_records(child)
        return
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".jsonl":
        for line in text.splitlines():
            if line.strip():
                yield json.loads(line)
    else:
        doc = json.loads(text)
        if isinstance(doc, list):
            yield from doc
        else:
            yield doc


# --- parsed-form serialization (lossless, keeps label sharing) ---------------


def _labels_to_payload(table: TableDoc) -> tuple[list[dict], dict[int, int]]:
    order: list[AttributeLabel] = []
    index: dict[int, int] = {}

    def visit(label: AttributeLabel) -> int:
        key = id(label)
        if key in index:
            return index[key]
        parent_idx = visit(label.parent) if label.parent is not None else None
        idx = len(order)
        index[key] = idx
        order.append(label)
        # store parent index alongside
        payload.append({"raw": label.raw, "parent": parent_idx})
        return idx

    payload: list[dict] = []
    for label in list(table.hmd) + list(table.vmd):
        visit(label)
    return payload, index


def table_to_json(table: TableDoc) -> dict:
    labels, index = _labels_to_payload(table)

    def cell_payload(cell: Cell) -> Any:
        if cell.nested is None:
            return cell.raw
        return {"text": cell.raw, "nested_table": table_to_json(cell.nested)}

    return {
        "table_id": table.table_id,
        "parent_id": table.parent_id,
        "caption": table.caption,
        "labels": labels,
        "hmd": [index[id(l)] for l in table.hmd],
        "vmd": [index[id(l)] for l in table.vmd],
        "cells": [[cell_payload(c) for c in row] for row in table.cells],
        "provenance": list(table.provenance),
    }


def table_from_json(doc: dict) -> TableDoc:
    labels: list[AttributeLabel] = []
    for entry in doc["labels"]:
        parent = labels[entry["parent"]] if entry["parent"] is not None else None
        labels.append(AttributeLabel.make(entry["raw"], parent))

    def cell_from(payload: Any) -> Cell:
        if isinstance(payload, dict):
            nested = table_from_json(payload["nested_table"])
            return Cell.make(payload.get("text", ""), nested)
        if not payload:
            return EMPTY_CELL
        return Cell.make(payload)

    return TableDoc(
        table_id=doc["table_id"],
        parent_id=doc["parent_id"],
        caption=doc["caption"],
        hmd=tuple(labels[i] for i in doc["hmd"]),
        vmd=tuple(labels[i] for i in doc["vmd"]),
        cells=tuple(tuple(cell_from(c) for c in row) for row in doc["cells"]),
        provenance=(doc["provenance"][0], doc["provenance"][1]),
    )


def publication_to_json(pub: Publication) -> dict:
    return {
        "id": pub.id,
        "title": pub.title,
        "authors": list(pub.authors),
        "abstract": pub.abstract,
        "body_sections": [list(s) for s in pub.body_sections],
        "figures": [list(f) for f in pub.figures],
        "tables": [table_to_json(t) for t in pub.tables],
        "source_uri": pub.source_uri,
        "published_date": pub.published_date,
        "rank_prior": pub.rank_prior,
    }


def publication_from_json(doc: dict) -> Publication:
    return Publication(
        id=doc["id"],
        title=doc["title"],
        authors=tuple(doc["authors"]),
        abstract=doc["abstract"],
        body_sections=tuple((s[0], s[1]) for s in doc["body_sections"]),
        figures=tuple((f[0], f[1]) for f in doc["figures"]),
        tables=tuple(table_from_json(t) for t in doc["tables"]),
        source_uri=doc.get("source_uri", ""),
        published_date=doc.get("published_date", ""),
        rank_prior=float(doc.get("rank_prior", 0.0)),
    )
