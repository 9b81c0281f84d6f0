import math

import numpy as np
import pytest

from corpuskg.cluster import (
    KIND_ANGLE,
    KIND_LINEAR,
    BinaryTopicClassifier,
    Centroid,
    build_training_set,
    classify_table,
    form_clusters,
    make_centroid,
    select_within_angle,
    train_classifier,
)
from corpuskg.corpus import parse_publication
from corpuskg.embed import EmbeddingProvider, MODE_HASHED, angular_distance, table_vector
from corpuskg.errors import InsufficientNegatives, ZeroCentroid


@pytest.fixture
def provider():
    return EmbeddingProvider(mode=MODE_HASHED, dimension=32, seed=11)


def table_from_words(tid, words):
    # numeric data cells normalize to placeholders, so angles are label-driven
    rec = {
        "id": tid.split(":")[0],
        "title": "t",
        "tables": [
            {
                "caption": "",
                "n_header_rows": 1,
                "n_header_cols": 0,
                "rows": [words, ["1.5"] * len(words)],
            }
        ],
    }
    return parse_publication(rec).tables[0]


@pytest.fixture
def fixture_tables():
    """Ten tables: 0-3 share a topical word bag, 4-9 are scattered."""
    tables = []
    shared = ["hepatic", "toxicity", "grade", "cohort", "regimen", "survival"]
    for i in range(4):
        words = shared[:5] + [f"extra{i}"]
        tables.append(table_from_words(f"h{i}", words))
    for i in range(6):
        tables.append(table_from_words(f"bg{i}", [f"noise{i}{j}" for j in range(6)]))
    return tables


def brute_force_within(centroid_vec, tables, provider, threshold):
    out = set()
    for t in tables:
        vec = table_vector(t, provider).v_t
        if not np.any(vec):
            continue
        if angular_distance(vec, centroid_vec) <= threshold:
            out.add(t.table_id)
    return out


class TestSelectWithinAngle:
    def test_threshold_zero_keeps_seed_and_duplicates(self, provider, fixture_tables):
        seed = fixture_tables[0]
        dup = table_from_words("dup0", [l.raw for l in seed.hmd])
        # same label bag but different filler cells; rebuild an exact duplicate
        dup = table_from_words("dup0", ["hepatic", "toxicity", "grade", "cohort", "regimen", "extra0"])
        centroid = make_centroid("topic", seed, provider)
        result = select_within_angle(centroid, fixture_tables + [dup], provider, 0.0)
        assert result == {seed.table_id, "dup0:t0"}

    def test_threshold_180_takes_everything_nonzero(self, provider, fixture_tables):
        centroid = make_centroid("topic", fixture_tables[0], provider)
        result = select_within_angle(centroid, fixture_tables, provider, 180.0)
        assert result == {t.table_id for t in fixture_tables}

    def test_matches_brute_force_at_18(self, provider, fixture_tables):
        centroid = make_centroid("topic", fixture_tables[0], provider)
        expected = brute_force_within(centroid.vector.v_t, fixture_tables, provider, 18.0)
        assert select_within_angle(centroid, fixture_tables, provider, 18.0) == expected
        assert fixture_tables[0].table_id in expected

    def test_monotone_in_threshold(self, provider, fixture_tables):
        centroid = make_centroid("topic", fixture_tables[0], provider)
        previous = set()
        for theta in (5, 18, 45, 90, 180):
            current = select_within_angle(centroid, fixture_tables, provider, theta)
            assert previous <= current
            previous = current

    def test_zero_centroid_rejected(self, provider, fixture_tables):
        empty = table_from_words("empty", [])
        with pytest.raises(ZeroCentroid):
            select_within_angle(make_centroid("t", empty, provider), fixture_tables, provider)


class TestTrainingSet:
    def test_negative_sampling_counts(self, provider, fixture_tables):
        extra = [table_from_words(f"pad{i}", [f"pad{i}{j}" for j in range(4)]) for i in range(2)]
        tables = fixture_tables + extra  # 12 tables, 4-5 positives
        centroid = make_centroid("topic", tables[0], provider)
        ts = build_training_set(centroid, tables, provider, threshold_deg=18.0, rng_seed=3)
        assert len(ts.negatives) == len(ts.positives)
        assert not set(ts.positives) & set(ts.negatives)

    def test_insufficient_negatives(self, provider):
        group = [
            table_from_words(f"g{i}", ["alpha", "beta", "gamma", f"v{i}"]) for i in range(5)
        ]
        lonely = [table_from_words("x0", ["omega", "psi", "chi", "phi"])]
        centroid = make_centroid("topic", group[0], provider)
        with pytest.raises(InsufficientNegatives):
            build_training_set(centroid, group + lonely, provider, threshold_deg=60.0, rng_seed=0)

    def test_same_seed_reproduces_negatives(self, provider, fixture_tables):
        centroid = make_centroid("topic", fixture_tables[0], provider)
        a = build_training_set(centroid, fixture_tables, provider, rng_seed=42)
        b = build_training_set(centroid, fixture_tables, provider, rng_seed=42)
        assert a == b


class TestTrainClassifier:
    def tables_by_id(self, tables):
        return {t.table_id: t for t in tables}

    def test_angle_kind_copies_centroid_rule(self, provider, fixture_tables):
        centroid = make_centroid("topic", fixture_tables[0], provider)
        ts = build_training_set(centroid, fixture_tables, provider, rng_seed=1)
        clf = train_classifier(ts, KIND_ANGLE, centroid, self.tables_by_id(fixture_tables), provider)
        assert clf.kind == KIND_ANGLE
        assert clf.centroid is centroid
        assert clf.threshold_deg == 18.0

    def test_separable_fixture_reaches_perfect_f(self, provider):
        # both classes carry learnable shared structure, so held-out folds
        # generalize; positives cluster, negatives sit antipodal in topic space
        pos = [
            table_from_words(f"pos{i}", ["hepatic", "toxicity", "grade", "cohort", f"p{i}"])
            for i in range(10)
        ]
        neg = [
            table_from_words(f"neg{i}", ["cardiac", "ejection", "fraction", "monitor", f"n{i}"])
            for i in range(10)
        ]
        tables = pos + neg
        centroid = make_centroid("topic", pos[0], provider)
        ts = build_training_set(centroid, tables, provider, threshold_deg=45.0, rng_seed=0)
        assert set(ts.positives) == {t.table_id for t in pos}
        clf = train_classifier(ts, KIND_LINEAR, centroid, self.tables_by_id(tables), provider)
        assert clf.report.macro_f == pytest.approx(1.0)

    def test_degenerate_identical_vectors(self, provider):
        # 20 tables with identical content, half labeled positive
        same = [table_from_words(f"s{i}", ["alpha", "beta", "gamma"]) for i in range(20)]
        centroid = make_centroid("topic", same[0], provider)
        from corpuskg.cluster import TrainingSet

        ts = TrainingSet(
            positives=tuple(t.table_id for t in same[:10]),
            negatives=tuple(t.table_id for t in same[10:]),
            seed=0,
        )
        clf = train_classifier(ts, KIND_LINEAR, centroid, self.tables_by_id(same), provider)
        # balanced identical data keeps p at exactly 0.5: every fold predicts
        # positive, giving precision 0.5, recall 1.0, F = 2/3
        assert clf.report.macro_f == pytest.approx(2 / 3, abs=0.05)

    def test_linear_training_deterministic(self, provider, fixture_tables):
        centroid = make_centroid("topic", fixture_tables[0], provider)
        ts = build_training_set(centroid, fixture_tables, provider, rng_seed=5)
        by_id = self.tables_by_id(fixture_tables)
        a = train_classifier(ts, KIND_LINEAR, centroid, by_id, provider)
        b = train_classifier(ts, KIND_LINEAR, centroid, by_id, provider)
        assert np.array_equal(a.weights, b.weights) and a.bias == b.bias


class TestClassifyTable:
    def test_seed_under_own_angle_classifier(self, provider, fixture_tables):
        centroid = make_centroid("topic", fixture_tables[0], provider)
        clf = BinaryTopicClassifier(kind=KIND_ANGLE, centroid=centroid)
        label, score = classify_table(clf, fixture_tables[0], provider)
        assert label is True and score == pytest.approx(1.0)

    def test_exact_boundary_inclusive(self, provider, fixture_tables):
        centroid = make_centroid("topic", fixture_tables[0], provider)
        angle = angular_distance(
            table_vector(fixture_tables[1], provider).v_t, centroid.vector.v_t
        )
        clf = BinaryTopicClassifier(kind=KIND_ANGLE, centroid=centroid, threshold_deg=angle)
        label, _ = classify_table(clf, fixture_tables[1], provider)
        assert label is True

    def test_zero_vector_table_is_false_not_error(self, provider, fixture_tables):
        centroid = make_centroid("topic", fixture_tables[0], provider)
        clf = BinaryTopicClassifier(kind=KIND_ANGLE, centroid=centroid)
        empty = table_from_words("empty", [])
        assert classify_table(clf, empty, provider) == (False, 0.0)

    def test_linear_score_matches_sigmoid_oracle(self, provider, fixture_tables):
        centroid = make_centroid("topic", fixture_tables[0], provider)
        ts = build_training_set(centroid, fixture_tables, provider, rng_seed=2)
        clf = train_classifier(
            ts, KIND_LINEAR, centroid, {t.table_id: t for t in fixture_tables}, provider
        )
        held_out = table_from_words("held", ["hepatic", "toxicity", "fresh"])
        vec = table_vector(held_out, provider).v_t
        expected = 1.0 / (1.0 + math.exp(-(float(vec @ clf.weights) + clf.bias)))
        _, score = classify_table(clf, held_out, provider)
        assert score == pytest.approx(expected, abs=1e-12)


class TestFormClusters:
    def test_two_far_centroids_disjoint(self, provider, fixture_tables):
        c1 = make_centroid("hepatic", fixture_tables[0], provider)
        c2 = make_centroid("background-0", fixture_tables[4], provider)
        clusters = form_clusters([c1, c2], fixture_tables, provider)
        assert [c.topic for c in clusters] == ["hepatic", "background-0"]
        expected1 = brute_force_within(c1.vector.v_t, fixture_tables, provider, 18.0)
        expected2 = brute_force_within(c2.vector.v_t, fixture_tables, provider, 18.0)
        assert clusters[0].member_table_ids == expected1
        assert clusters[1].member_table_ids == expected2
        assert not clusters[0].member_table_ids & clusters[1].member_table_ids

    def test_threshold_180_takes_all(self, provider, fixture_tables):
        centroid = make_centroid("all", fixture_tables[0], provider)
        clf = BinaryTopicClassifier(kind=KIND_ANGLE, centroid=centroid, threshold_deg=180.0)
        clusters = form_clusters([centroid], fixture_tables, provider, classifiers=[clf])
        assert clusters[0].member_table_ids == {t.table_id for t in fixture_tables}

    def test_singleton_cluster_kept(self, provider, fixture_tables):
        lonely = table_from_words("lone", ["singular", "vocabulary", "here"])
        centroid = make_centroid("lone-topic", lonely, provider)
        clusters = form_clusters([centroid], fixture_tables + [lonely], provider)
        assert clusters[0].member_table_ids == {"lone:t0"}
