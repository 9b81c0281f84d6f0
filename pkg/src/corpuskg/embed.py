"""Term embeddings, composite table vectors, and angular schema matching.

Terms embed to unit vectors, sections (HMD, VMD, data) to sums of their
term vectors, and a whole table to the concatenation of its three section
vectors. Similarity is the angle between vectors in degrees; attribute and
synonym matching keep candidates inside a configurable angular threshold.

Two providers exist behind one interface: HASHED derives a unit vector from
a keyed hash of the term (pure function of term, seed, and dimension, so it
reproduces byte-for-byte across processes), and FILE looks vectors up in a
plain-text embedding file, falling back to HASHED for unknown terms.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .corpus import AttributeLabel, TableDoc
from .errors import DimensionMismatch, ZeroVector
from .text import KIND_WORD, Token, normalize_label, normalize_text

DEFAULT_DIM = 64
DEFAULT_SEED = 1337
DEFAULT_MATCH_THRESHOLD_DEG = 25.0

MODE_FILE = "FILE"
MODE_HASHED = "HASHED"


def _hashed_unit_vector(term: str, seed: int, dim: int) -> np.ndarray:
    """Deterministic pseudo-random unit vector from a keyed hash of the term."""
    normals: list[float] = []
    counter = 0
    while len(normals) < dim:
        digest = hashlib.sha256(f"{seed}:{counter}:{term}".encode("utf-8")).digest()
        ints = struct.unpack(">4Q", digest)
        uniforms = [(v + 0.5) / 2.0**64 for v in ints]
        for u1, u2 in ((uniforms[0], uniforms[1]), (uniforms[2], uniforms[3])):
            r = math.sqrt(-2.0 * math.log(u1))
            normals.append(r * math.cos(2.0 * math.pi * u2))
            normals.append(r * math.sin(2.0 * math.pi * u2))
        counter += 1
    vec = np.array(normals[:dim], dtype=np.float64)
    return vec / np.linalg.norm(vec)


class EmbeddingProvider:
    """Embeds normalized terms; FILE-backed with HASHED fallback, or pure HASHED."""

    def __init__(
        self,
        mode: str = MODE_HASHED,
        dimension: int = DEFAULT_DIM,
        seed: int = DEFAULT_SEED,
        file_path: Optional[Path] = None,
    ):
        self.mode = mode
        self.dimension = dimension
        self.seed = seed
        self.file_path = file_path
        self._table: dict[str, np.ndarray] = {}
        self._hash_cache: dict[str, np.ndarray] = {}
        if mode == MODE_FILE:
            if file_path is None:
                raise ValueError("FILE mode requires file_path")
            self._load_file(Path(file_path))

    def _load_file(self, path: Path) -> None:
        with path.open(encoding="utf-8") as fh:
            header = fh.readline().split()
            if len(header) != 2:
                raise DimensionMismatch(f"bad embedding file header in {path}")
            count, dim = int(header[0]), int(header[1])
            if dim != self.dimension:
                raise DimensionMismatch(
                    f"embedding file is {dim}-dimensional, provider expects {self.dimension}"
                )
            for _ in range(count):
                parts = fh.readline().rstrip("\n").split(" ")
                term, values = parts[0], parts[1:]
                if len(values) != dim:
                    raise DimensionMismatch(
                        f"vector for {term!r} has {len(values)} values, expected {dim}"
                    )
                vec = np.array([float(v) for v in values], dtype=np.float64)
                norm = np.linalg.norm(vec)
                if norm == 0:
                    raise ZeroVector(f"zero vector for term {term!r} in {path}")
                self._table[term] = vec / norm

    def embed_term(self, term: str) -> np.ndarray:
        vec = self._table.get(term)
        if vec is not None:
            return vec
        cached = self._hash_cache.get(term)
        if cached is None:
            cached = _hashed_unit_vector(term, self.seed, self.dimension)
            self._hash_cache[term] = cached
        return cached

    def embed_section(self, tokens: Iterable[Token]) -> np.ndarray:
        """Sum of term vectors over WORD tokens; placeholders are skipped."""
        total = np.zeros(self.dimension, dtype=np.float64)
        for t in tokens:
            if t.kind == KIND_WORD:
                total += self.embed_term(t.stem)
        return total

    def embed_text(self, raw: str) -> np.ndarray:
        return self.embed_section(normalize_text(raw))


def provider_from_config(
    dimension: int = DEFAULT_DIM,
    seed: int = DEFAULT_SEED,
    embeddings_file: Optional[Path] = None,
) -> EmbeddingProvider:
    if embeddings_file:
        return EmbeddingProvider(
            mode=MODE_FILE, dimension=dimension, seed=seed, file_path=embeddings_file
        )
    return EmbeddingProvider(mode=MODE_HASHED, dimension=dimension, seed=seed)


@dataclass(frozen=True)
class TableVector:
    """Composite table embedding: the three section vectors plus their concatenation."""

    v_hmd: np.ndarray
    v_vmd: np.ndarray
    v_d: np.ndarray

    @property
    def v_t(self) -> np.ndarray:
        return np.concatenate([self.v_hmd, self.v_vmd, self.v_d])


def table_vector(table: TableDoc, provider: EmbeddingProvider) -> TableVector:
    hmd_tokens: list[Token] = []
    for label in table.hmd:
        hmd_tokens.extend(normalize_text(label.raw))
    vmd_tokens: list[Token] = []
    for label in table.vmd:
        vmd_tokens.extend(normalize_text(label.raw))
    data_tokens: list[Token] = []
    for row in table.cells:
        for cell in row:
            data_tokens.extend(cell.normalized)
    return TableVector(
        v_hmd=provider.embed_section(hmd_tokens),
        v_vmd=provider.embed_section(vmd_tokens),
        v_d=provider.embed_section(data_tokens),
    )


def angular_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Angle between vectors in degrees; errors on zero vectors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"dimensions differ: {a.shape} vs {b.shape}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ZeroVector("angular distance undefined for the zero vector")
    cos = float(np.dot(a, b) / (na * nb))
    cos = max(-1.0, min(1.0, cos))
    return math.degrees(math.acos(cos))


def confidence_from_angle(angle_deg: float) -> float:
    return max(0.0, 1.0 - angle_deg / 90.0)


@dataclass(frozen=True)
class AttributeMatch:
    query_label: str
    matched_label: AttributeLabel
    angle_deg: float
    confidence: float


def match_attribute(
    query_label: str,
    candidates: Sequence[AttributeLabel],
    provider: EmbeddingProvider,
    threshold_deg: float = DEFAULT_MATCH_THRESHOLD_DEG,
) -> list[AttributeMatch]:
    """Rank candidate labels against a query: exact normalized matches first
    (angle 0, confidence 1), then embedding matches within the threshold,
    ascending by angle."""
    query_norm = normalize_label(query_label)
    exact: list[AttributeMatch] = []
    rest: list[tuple[float, int, AttributeLabel]] = []
    query_vec: Optional[np.ndarray] = None
    for i, cand in enumerate(candidates):
        if query_norm and cand.normalized == query_norm:
            exact.append(AttributeMatch(query_label, cand, 0.0, 1.0))
            continue
        if query_vec is None:
            query_vec = provider.embed_text(query_label)
        if not np.any(query_vec):
            continue
        cand_vec = provider.embed_text(cand.raw)
        if not np.any(cand_vec):
            continue
        angle = angular_distance(query_vec, cand_vec)
        if angle <= threshold_deg:
            rest.append((angle, i, cand))
    rest.sort(key=lambda t: (t[0], t[1]))
    return exact + [
        AttributeMatch(query_label, cand, angle, confidence_from_angle(angle))
        for angle, _, cand in rest
    ]


@dataclass(frozen=True)
class LexiconEntry:
    display: str
    normalized: str
    vector: np.ndarray


class SynonymLexicon:
    """All attribute labels plus vocabulary terms, queryable by angle."""

    def __init__(self, provider: EmbeddingProvider):
        self.provider = provider
        self._entries: dict[str, LexiconEntry] = {}

    def add_label(self, label: AttributeLabel) -> None:
        if not label.normalized or label.normalized in self._entries:
            return
        vec = self.provider.embed_text(label.raw)
        if np.any(vec):
            self._entries[label.normalized] = LexiconEntry(label.raw, label.normalized, vec)

    def add_term(self, term: str) -> None:
        if not term or term in self._entries:
            return
        self._entries[term] = LexiconEntry(term, term, self.provider.embed_term(term))

    def __len__(self) -> int:
        return len(self._entries)

    def entries(self) -> list[LexiconEntry]:
        return [self._entries[k] for k in sorted(self._entries)]

    def synonyms_for(
        self,
        term: str,
        top_n: int = 10,
        threshold_deg: float = DEFAULT_MATCH_THRESHOLD_DEG,
    ) -> list[tuple[str, float]]:
        """Nearest lexicon entries by angle, excluding the query itself."""
        if top_n <= 0:
            return []
        query_norm = normalize_label(term)
        query_vec = self.provider.embed_text(term)
        if not np.any(query_vec):
            return []
        scored: list[tuple[float, str]] = []
        for key in sorted(self._entries):
            entry = self._entries[key]
            if entry.normalized == query_norm:
                continue
            angle = angular_distance(query_vec, entry.vector)
            if angle <= threshold_deg:
                scored.append((angle, entry.display))
        scored.sort(key=lambda t: (t[0], t[1]))
        return [(display, angle) for angle, display in scored[:top_n]]


def build_lexicon(
    tables: Iterable[TableDoc],
    vocabulary_terms: Iterable[str],
    provider: EmbeddingProvider,
) -> SynonymLexicon:
    lex = SynonymLexicon(provider)
    for table in tables:
        for label in list(table.hmd) + list(table.vmd):
            lex.add_label(label)
            for anc in label.ancestors():
                lex.add_label(anc)
    for term in vocabulary_terms:
        lex.add_term(term)
    return lex
