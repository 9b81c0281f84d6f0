import json
import math
import random

import pytest

from corpuskg.corpus import parse_publication
from corpuskg.errors import DuplicateDocId, EmptyQuery, NoMatchInField, UnknownDoc
from corpuskg.index import (
    DEFAULT_FIELD_WEIGHTS,
    FieldId,
    Index,
    build_index,
    minimal_window,
)
from corpuskg.vocab import load_stop_list

from oracles import BruteForceScorer


def pub(pid, title="", abstract="", body="", caption="", figure_caption="", prior=0.0):
    record = {
        "id": pid,
        "title": title or f"untitled {pid}",
        "abstract": abstract,
        "rank_prior": prior,
        "sections": [{"heading": "", "text": body}] if body else [],
        "figures": [{"caption": figure_caption, "text": ""}] if figure_caption else [],
        "tables": (
            [{"caption": caption, "n_header_rows": 1, "rows": [["h1"], ["v1"]]}]
            if caption
            else []
        ),
    }
    return parse_publication(record)


@pytest.fixture
def toy_corpus():
    return [
        pub("a", title="colorectal cancer screening", caption="risk of metastasis"),
        pub("b", title="cancer immunotherapy", body="risk risk risk everywhere"),
        pub("c", title="colorectal surgery outcomes", abstract="lymph node dissection"),
    ]


class TestBuildIndex:
    def test_df_hand_count(self, toy_corpus):
        idx = build_index(toy_corpus)
        assert idx.n_docs == 3
        assert idx.df("cancer", FieldId.TITLE) == 2
        assert idx.df("colorect", FieldId.TITLE) == 2
        assert idx.df("risk", FieldId.TABLE_CAPTION) == 1

    def test_single_empty_document(self):
        # "." tokenizes to nothing: a document with no indexable terms
        idx = build_index([pub("solo", title=".")])
        assert idx.n_docs == 1
        for fid in FieldId:
            assert idx.postings[fid] == {}

    def test_duplicate_doc_id(self, toy_corpus):
        with pytest.raises(DuplicateDocId):
            build_index(toy_corpus + [pub("a", title="again")])


class TestTfidf:
    def test_term_in_every_doc(self):
        docs = [pub(f"d{i}", title="shared word") for i in range(3)]
        idx = build_index(docs)
        # tf=1, df=3, n=3 -> 1 * (ln(4/4)+1) = 1.0
        assert idx.tfidf("share", FieldId.TITLE, "d0") == pytest.approx(1.0, abs=1e-12)

    def test_absent_term_is_zero(self, toy_corpus):
        idx = build_index(toy_corpus)
        assert idx.tfidf("nonexistent", FieldId.TITLE, "a") == 0.0

    def test_tf2_df1_n3(self):
        docs = [
            pub("x", title="alpha alpha"),
            pub("y", title="beta"),
            pub("z", title="gamma"),
        ]
        idx = build_index(docs)
        expected = 2 * (math.log(4 / 2) + 1)
        assert idx.tfidf("alpha", FieldId.TITLE, "x") == pytest.approx(expected, abs=1e-9)
        assert expected == pytest.approx(3.3862943611, abs=1e-9)

    def test_unknown_doc(self, toy_corpus):
        idx = build_index(toy_corpus)
        with pytest.raises(UnknownDoc):
            idx.tfidf("cancer", FieldId.TITLE, "missing")


class TestMinimalWindow:
    def test_single_list_is_zero(self):
        assert minimal_window([[3, 9]]) == 0

    def test_adjacent_terms(self):
        assert minimal_window([[4], [5]]) == 2

    def test_brute_force_comparison(self):
        rng = random.Random(5)
        for _ in range(200):
            n_lists = rng.randint(2, 4)
            lists = [
                sorted(rng.sample(range(30), rng.randint(1, 5))) for _ in range(n_lists)
            ]
            # brute force over all position combinations
            best = min(
                max(combo) - min(combo) + 1
                for combo in __import__("itertools").product(*lists)
            )
            assert minimal_window(lists) == best


class TestSearchFielded:
    def test_inclusive_filter_excludes_partial_matches(self, toy_corpus):
        idx = build_index(toy_corpus)
        hits = idx.search_fielded(
            {FieldId.TITLE: "colorectal", FieldId.TABLE_CAPTION: "risk"}
        )
        # doc b has many "risk" matches but only in BODY; doc a matches both fields
        assert [h.doc_id for h in hits] == ["a"]

    def test_tie_broken_by_doc_id(self):
        docs = [pub("d", title="same words here"), pub("c", title="same words here")]
        idx = build_index(docs)
        hits = idx.search_fielded({FieldId.TITLE: "same words"})
        assert [h.doc_id for h in hits] == ["c", "d"]

    def test_proximity_prefers_adjacent_terms(self):
        filler = " ".join(f"filler{i}" for i in range(18))
        docs = [
            pub("far", title=f"alpha {filler} beta"),
            pub("near", title=f"alpha beta {filler}"),
        ]
        idx = build_index(docs)
        hits = idx.search_fielded({FieldId.TITLE: "alpha beta"})
        assert [h.doc_id for h in hits] == ["near", "far"]

    def test_empty_query_error(self, toy_corpus):
        idx = build_index(toy_corpus)
        with pytest.raises(EmptyQuery):
            idx.search_fielded({FieldId.TITLE: "   "})

    def test_render_order_payload(self, toy_corpus):
        idx = build_index(toy_corpus)
        hit = idx.search_fielded({FieldId.TITLE: "colorectal"})[0]
        assert list(hit.render.keys()) == ["table_captions", "title", "authors", "abstract"]


class TestSearchAllFields:
    def test_figure_caption_only_match(self):
        docs = [
            pub("e", title="plain title", figure_caption="metastasis pathways"),
            pub("f", title="irrelevant"),
        ]
        idx = build_index(docs)
        hits = idx.search_all_fields("metastasis")
        assert [h.doc_id for h in hits] == ["e"]
        assert [s.field for s in hits[0].snippets] == [FieldId.FIGURE_CAPTION]

    def test_stopword_only_query(self, toy_corpus):
        idx = build_index(toy_corpus)
        with pytest.raises(EmptyQuery):
            idx.search_all_fields("the of and")

    def test_fielded_results_subset_of_all_fields(self, toy_corpus):
        idx = build_index(toy_corpus)
        all_hits = {h.doc_id for h in idx.search_all_fields("colorectal risk")}
        fielded = idx.search_fielded({f: "colorectal risk" for f in FieldId})
        assert {h.doc_id for h in fielded} <= all_hits


class TestSnippets:
    def test_match_mid_text_window(self):
        body = "x " * 300 + "needle" + " y" * 300
        idx = build_index([pub("d", body=body)])
        snip = idx.make_snippet("d", FieldId.BODY, ["needl"])
        assert len(snip.text) <= 200
        assert "needle" in snip.text
        for s, e in snip.highlight_spans:
            assert snip.text[s:e] == "needle"

    def test_match_at_start_no_negative_offset(self):
        idx = build_index([pub("d", body="needle at the very start " + "pad " * 100)])
        snip = idx.make_snippet("d", FieldId.BODY, ["needl"])
        assert snip.text.startswith("needle")

    def test_densest_cluster_wins(self):
        body = "needle " + "pad " * 120 + "needle needle needle " + "pad " * 120
        idx = build_index([pub("d", body=body)])
        snip = idx.make_snippet("d", FieldId.BODY, ["needl"])
        assert len(snip.highlight_spans) == 3

    def test_no_match_error(self, toy_corpus):
        idx = build_index(toy_corpus)
        with pytest.raises(NoMatchInField):
            idx.make_snippet("a", FieldId.ABSTRACT, ["cancer"])


class TestOracles:
    def test_both_engines_match_brute_force(self, toy_corpus):
        idx = build_index(toy_corpus)
        oracle = BruteForceScorer(toy_corpus, DEFAULT_FIELD_WEIGHTS, load_stop_list())
        queries = [
            "colorectal cancer",
            "risk metastasis",
            "lymph node",
            "surgery screening outcomes",
        ]
        for q in queries:
            mine = [(h.doc_id, h.score) for h in idx.search_all_fields(q)]
            ref = oracle.search_all_fields(q)
            assert [d for d, _ in mine] == [d for d, _ in ref]
            for (_, s1), (_, s2) in zip(mine, ref):
                assert s1 == pytest.approx(s2, abs=1e-9)
        fielded_queries = [
            {FieldId.TITLE: "cancer"},
            {FieldId.TITLE: "colorectal", FieldId.TABLE_CAPTION: "risk"},
            {FieldId.ABSTRACT: "lymph node", FieldId.TITLE: "surgery"},
        ]
        for q in fielded_queries:
            mine = [(h.doc_id, h.score) for h in idx.search_fielded(q)]
            ref = oracle.search_fielded(q)
            assert [d for d, _ in mine] == [d for d, _ in ref]
            for (_, s1), (_, s2) in zip(mine, ref):
                assert s1 == pytest.approx(s2, abs=1e-9)

    def test_prior_added_once(self):
        docs = [pub("p", title="alpha", prior=0.25), pub("q", title="alpha")]
        idx = build_index(docs)
        hits = idx.search_all_fields("alpha")
        scores = {h.doc_id: h.score for h in hits}
        assert scores["p"] - scores["q"] == pytest.approx(0.25, abs=1e-12)

    def test_monotonicity_unrelated_doc(self):
        base = [
            pub("a", title="alpha alpha beta"),
            pub("b", title="alpha beta beta"),
        ]
        idx1 = build_index(base)
        order1 = [h.doc_id for h in idx1.search_all_fields("alpha beta")]
        idx2 = build_index(base + [pub("zz", title="totally unrelated words")])
        order2 = [h.doc_id for h in idx2.search_all_fields("alpha beta")]
        assert order1 == [d for d in order2 if d in {"a", "b"}]


class TestPersistence:
    def test_round_trip(self, toy_corpus, tmp_path):
        idx = build_index(toy_corpus)
        idx.save(tmp_path / "idx")
        loaded = Index.load(tmp_path / "idx")
        q = {FieldId.TITLE: "colorectal"}
        assert [
            (h.doc_id, h.score) for h in idx.search_fielded(q)
        ] == [(h.doc_id, h.score) for h in loaded.search_fielded(q)]
        assert loaded.priors == idx.priors

    def test_determinism_byte_identical(self, toy_corpus, tmp_path):
        for name in ("one", "two"):
            build_index(toy_corpus).save(tmp_path / name)
        for f in sorted((tmp_path / "one").iterdir()):
            assert f.read_bytes() == (tmp_path / "two" / f.name).read_bytes()


def test_snippets_capped_at_three_per_hit():
    doc = pub(
        "rich",
        title="shared needle title",
        abstract="needle appears here",
        body="needle in the body",
        caption="needle caption",
        figure_caption="needle figure",
    )
    idx = build_index([doc])
    hits = idx.search_all_fields("needle shared")
    assert len(hits) == 1
    assert len(hits[0].snippets) == 3
