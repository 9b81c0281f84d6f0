"""Independent brute-force oracles for the test suite.

Everything here re-derives scores from raw Publication objects (tokenizing
field text afresh, counting tf/df by scanning, enumerating windows), without
touching the Index internals it checks.
"""

from __future__ import annotations

import math
from itertools import combinations

from corpuskg.corpus import Publication
from corpuskg.index import FieldId, field_texts
from corpuskg.text import normalize_text


def field_tokens(pub: Publication) -> dict[FieldId, list[str]]:
    return {
        fid: [t.stem for t in normalize_text(text)]
        for fid, text in field_texts(pub).items()
    }


def brute_window(tokens: list[str], terms: list[str]) -> int:
    """Smallest token window covering one occurrence of each term (0 if single)."""
    present = [t for t in terms if t in tokens]
    if len(present) <= 1:
        return 0
    best = math.inf
    n = len(tokens)
    for start in range(n):
        needed = set(present)
        for end in range(start, n):
            needed.discard(tokens[end])
            if not needed:
                best = min(best, end - start + 1)
                break
    return int(best)


class BruteForceScorer:
    def __init__(self, pubs, field_weights, stop_list):
        self.pubs = {p.id: p for p in pubs}
        self.tokens = {p.id: field_tokens(p) for p in pubs}
        self.weights = field_weights
        self.stop_list = stop_list
        self.n = len(pubs)

    def query_terms(self, query: str) -> list[str]:
        out = []
        for tok in normalize_text(query):
            if tok.kind == "WORD" and tok.stem in self.stop_list:
                continue
            if tok.stem not in out:
                out.append(tok.stem)
        return out

    def df(self, term: str, fid: FieldId) -> int:
        return sum(1 for toks in self.tokens.values() if term in toks[fid])

    def tfidf(self, term: str, fid: FieldId, doc_id: str) -> float:
        tf = self.tokens[doc_id][fid].count(term)
        if tf == 0:
            return 0.0
        idf = math.log((self.n + 1) / (self.df(term, fid) + 1)) + 1.0
        return tf * idf

    def field_score(self, terms: list[str], fid: FieldId, doc_id: str):
        toks = self.tokens[doc_id][fid]
        matched = [t for t in terms if t in toks]
        if not matched:
            return 0.0, []
        w = brute_window(toks, matched)
        prox = 1.0 + 1.0 / (1.0 + w)
        score = sum(self.weights[fid] * self.tfidf(t, fid, doc_id) * prox for t in matched)
        return score, matched

    def search_fielded(self, query_per_field: dict[FieldId, str], k: int = 20):
        queries = {
            fid: self.query_terms(q)
            for fid, q in query_per_field.items()
            if q and q.strip() and self.query_terms(q)
        }
        results = []
        for doc_id in self.pubs:
            total = self.pubs[doc_id].rank_prior
            ok = True
            for fid, terms in queries.items():
                fscore, matched = self.field_score(terms, fid, doc_id)
                if not matched:
                    ok = False
                    break
                total += fscore
            if ok:
                results.append((doc_id, total))
        results.sort(key=lambda t: (-t[1], t[0]))
        return results[:k]

    def search_all_fields(self, query: str, k: int = 20):
        terms = self.query_terms(query)
        results = []
        for doc_id in self.pubs:
            total = 0.0
            any_match = False
            for fid in FieldId:
                fscore, matched = self.field_score(terms, fid, doc_id)
                if matched:
                    any_match = True
                    total += fscore
            if any_match:
                results.append((doc_id, total + self.pubs[doc_id].rank_prior))
        results.sort(key=lambda t: (-t[1], t[0]))
        return results[:k]


# --- independent structural table-search oracle --------------------------------

import re

import numpy as np

_ORACLE_NUM = re.compile(r"\d+(?:,\d{3})*(?:\.\d+)?")
_ORACLE_RANGE = re.compile(
    r"(\d+(?:,\d{3})*(?:\.\d+)?)[-–—](\d+(?:,\d{3})*(?:\.\d+)?)"
)


def _oracle_angle(a, b):
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    cos = float(np.dot(a, b) / (na * nb))
    return math.degrees(math.acos(max(-1.0, min(1.0, cos))))


class StructuralOracle:
    """Full-scan evaluator for structural queries, independent of TableSearch:
    numbers, ranges, label chains, governance and caption stats all re-derived
    here from the raw table contents."""

    def __init__(self, tables, provider):
        self.tables = list(tables)
        self.provider = provider
        self.caption_df = {}
        for t in self.tables:
            stems = {
                tok.stem for tok in normalize_text(t.caption) if tok.kind == "WORD"
            }
            for s in stems:
                self.caption_df[s] = self.caption_df.get(s, 0) + 1

    def _chain(self, label):
        out = []
        node = label
        while node is not None:
            out.append(node)
            node = node.parent
        return out

    def _match_confidence(self, query, label, threshold):
        from corpuskg.text import normalize_label

        qn = normalize_label(query)
        qv = self.provider.embed_text(query)
        best = None
        for cand in self._chain(label):
            if not cand.normalized:
                continue
            if cand.normalized == qn:
                return 1.0
            if not np.any(qv):
                continue
            cv = self.provider.embed_text(cand.raw)
            if not np.any(cv):
                continue
            angle = _oracle_angle(qv, cv)
            if angle <= threshold:
                conf = max(0.0, 1.0 - angle / 90.0)
                if best is None or conf > best:
                    best = conf
        return best

    def _value_holds(self, raw_cell_text, tokens, vp):
        if vp.kind == "EQ_NUM":
            for m in _ORACLE_NUM.finditer(raw_cell_text):
                v = float(m.group(0).replace(",", ""))
                if abs(v - vp.number) <= vp.tolerance * max(abs(v), abs(vp.number), 1e-300) or v == vp.number:
                    return True
            return False
        if vp.kind == "IN_RANGE":
            for m in _ORACLE_RANGE.finditer(raw_cell_text):
                lo = float(m.group(1).replace(",", ""))
                hi = float(m.group(2).replace(",", ""))
                if min(lo, hi) <= vp.number <= max(lo, hi):
                    return True
            return False
        if vp.kind == "CONTAINS_TEXT":
            needle = [t.stem for t in normalize_text(vp.text)]
            hay = [t.stem for t in tokens]
            if not needle:
                return False
            pos = 0
            for n in needle:
                while pos < len(hay) and hay[pos] != n:
                    pos += 1
                if pos >= len(hay):
                    return False
                pos += 1
            return True
        raise ValueError(vp.kind)

    def _predicate_confidences(self, table, pred, threshold):
        """All satisfying match confidences for one predicate in one table."""
        out = []
        for j, label in enumerate(table.hmd):
            conf = self._match_confidence(pred.attribute_query, label, threshold)
            if conf is None:
                continue
            if pred.value is None:
                out.append(conf)
                continue
            for i in range(len(table.cells)):
                cell = table.cells[i][j]
                if self._value_holds(cell.raw, cell.normalized, pred.value):
                    out.append(conf)
                    break
        for i, label in enumerate(table.vmd):
            conf = self._match_confidence(pred.attribute_query, label, threshold)
            if conf is None:
                continue
            if pred.value is None:
                out.append(conf)
                continue
            governed = [
                r
                for r, other in enumerate(table.vmd)
                if other is label or label in self._chain(other)[1:]
            ]
            hit = False
            for r in governed:
                for cell in table.cells[r]:
                    if self._value_holds(cell.raw, cell.normalized, pred.value):
                        hit = True
                        break
                if hit:
                    break
            if hit:
                out.append(conf)
        for row in table.cells:
            for cell in row:
                if cell.nested is not None:
                    out.extend(
                        self._predicate_confidences(cell.nested, pred, threshold)
                    )
        return out

    def search(self, query, k=20):
        stems = {
            tok.stem
            for p in query.predicates
            for tok in normalize_text(p.attribute_query)
            if tok.kind == "WORD"
        }
        n = len(self.tables)
        hits = []
        for table in self.tables:
            total = 0.0
            ok = True
            for pred in query.predicates:
                confs = self._predicate_confidences(
                    table, pred, query.match_threshold_deg
                )
                if not confs:
                    ok = False
                    break
                total += max(confs)
            if not ok:
                continue
            caption_tokens = [
                t.stem for t in normalize_text(table.caption) if t.kind == "WORD"
            ]
            for s in sorted(stems):
                tf = caption_tokens.count(s)
                if tf:
                    total += tf * (
                        math.log((n + 1) / (self.caption_df.get(s, 0) + 1)) + 1.0
                    )
            hits.append((table.table_id, total))
        hits.sort(key=lambda h: (-h[1], h[0]))
        return hits[:k]
