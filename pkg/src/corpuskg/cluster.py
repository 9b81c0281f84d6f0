"""Topical table clustering around data-scientist-chosen centroid tables.

The pipeline: pick a centroid table per topic, take every table within an
angular threshold of it (18 degrees by default) as positives, sample the same
number of random tables as negatives, train a binary classifier, then run the
classifier over the corpus to form the topic's cluster. Clusters may overlap;
no partition constraint exists.

Classifier kinds behind one interface:

* ANGLE_THRESHOLD does no training; it labels a table by its angle to the
  centroid (inclusive boundary).
* LINEAR fits logistic regression on composite table vectors by full-batch
  gradient descent (L2 1e-3, learning rate 0.1, up to 500 epochs) and reports
  10-fold cross-validated precision/recall/F per fold.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .corpus import TableDoc
from .embed import EmbeddingProvider, TableVector, angular_distance, table_vector
from .errors import Diverged, InsufficientNegatives, ZeroCentroid

DEFAULT_ANGLE_DEG = 18.0
KIND_ANGLE = "ANGLE_THRESHOLD"
KIND_LINEAR = "LINEAR"

# which part of the composite vector angular selection measures
ANGLE_ON_FULL = "full"
ANGLE_ON_CHOICES = ("full", "hmd", "vmd", "data")

LEARNING_RATE = 0.1
L2_LAMBDA = 1e-3
MAX_EPOCHS = 500
GRAD_TOL = 1e-6

CREATED_CENTROID = "CENTROID_PIPELINE"
CREATED_DRILLDOWN = "METAPROFILE_DRILLDOWN"


@dataclass(frozen=True)
class Centroid:
    topic: str
    table_id: str
    vector: TableVector


def make_centroid(topic: str, table: TableDoc, provider: EmbeddingProvider) -> Centroid:
    return Centroid(topic=topic, table_id=table.table_id, vector=table_vector(table, provider))


@dataclass(frozen=True)
class TrainingSet:
    positives: tuple[str, ...]
    negatives: tuple[str, ...]
    seed: int


@dataclass
class FoldReport:
    fold: int
    precision: float
    recall: float
    f_measure: float


@dataclass
class TrainingReport:
    folds: list[FoldReport]

    @property
    def macro_f(self) -> float:
        return sum(f.f_measure for f in self.folds) / len(self.folds) if self.folds else 0.0

    def to_text(self) -> str:
        lines = ["fold\tprecision\trecall\tf_measure"]
        for f in self.folds:
            lines.append(f"{f.fold}\t{f.precision:.6f}\t{f.recall:.6f}\t{f.f_measure:.6f}")
        lines.append(f"macro_f\t{self.macro_f:.6f}")
        return "\n".join(lines) + "\n"


@dataclass
class BinaryTopicClassifier:
    kind: str
    centroid: Optional[Centroid] = None
    threshold_deg: float = DEFAULT_ANGLE_DEG
    angle_on: str = ANGLE_ON_FULL
    weights: Optional[np.ndarray] = None
    bias: float = 0.0
    report: Optional[TrainingReport] = None

    def to_json(self) -> dict:
        doc = {"kind": self.kind, "threshold_deg": self.threshold_deg, "angle_on": self.angle_on}
        if self.centroid is not None:
            doc["topic"] = self.centroid.topic
            doc["centroid_table_id"] = self.centroid.table_id
            doc["centroid_vector"] = self.centroid.vector.v_t.tolist()
        if self.weights is not None:
            doc["weights"] = self.weights.tolist()
            doc["bias"] = self.bias
        return doc


@dataclass
class TopicCluster:
    cluster_id: str
    topic: str
    member_table_ids: set[str]
    classifier: Optional[BinaryTopicClassifier] = None
    created_from: str = CREATED_CENTROID

    def to_json(self) -> dict:
        return {
            "cluster_id": self.cluster_id,
            "topic": self.topic,
            "member_table_ids": sorted(self.member_table_ids),
            "created_from": self.created_from,
            "classifier": self.classifier.to_json() if self.classifier else None,
        }


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(z, -500, 500)))


def component_vector(tv: TableVector, angle_on: str = ANGLE_ON_FULL) -> np.ndarray:
    if angle_on == "hmd":
        return tv.v_hmd
    if angle_on == "vmd":
        return tv.v_vmd
    if angle_on == "data":
        return tv.v_d
    return tv.v_t


def table_angle(
    table: TableDoc,
    centroid: Centroid,
    provider: EmbeddingProvider,
    angle_on: str = ANGLE_ON_FULL,
) -> Optional[float]:
    """Angle between a table and a centroid, None for zero-vector tables."""
    vec = component_vector(table_vector(table, provider), angle_on)
    ref = component_vector(centroid.vector, angle_on)
    if not np.any(vec) or not np.any(ref):
        return None
    return angular_distance(vec, ref)


def select_within_angle(
    centroid: Centroid,
    corpus_tables: Sequence[TableDoc],
    provider: EmbeddingProvider,
    threshold_deg: float = DEFAULT_ANGLE_DEG,
    angle_on: str = ANGLE_ON_FULL,
) -> set[str]:
    """Tables within the angular threshold of the centroid (boundary inclusive)."""
    if not np.any(component_vector(centroid.vector, angle_on)):
        raise ZeroCentroid(f"centroid {centroid.table_id} has a zero vector")
    selected = set()
    for table in corpus_tables:
        angle = table_angle(table, centroid, provider, angle_on)
        if angle is not None and angle <= threshold_deg:
            selected.add(table.table_id)
    return selected


def build_training_set(
    centroid: Centroid,
    corpus_tables: Sequence[TableDoc],
    provider: EmbeddingProvider,
    threshold_deg: float = DEFAULT_ANGLE_DEG,
    rng_seed: int = 0,
    angle_on: str = ANGLE_ON_FULL,
) -> TrainingSet:
    positives = sorted(
        select_within_angle(centroid, corpus_tables, provider, threshold_deg, angle_on)
    )
    pool = sorted({t.table_id for t in corpus_tables} - set(positives))
    if len(pool) < len(positives):
        raise InsufficientNegatives(
            f"need {len(positives)} negatives, only {len(pool)} tables outside the cluster"
        )
    rng = random.Random(rng_seed)
    negatives = tuple(sorted(rng.sample(pool, len(positives))))
    return TrainingSet(positives=tuple(positives), negatives=negatives, seed=rng_seed)


def _fit_logistic(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, float]:
    n, dim = x.shape
    w = np.zeros(dim)
    b = 0.0
    for _ in range(MAX_EPOCHS):
        p = _sigmoid(x @ w + b)
        err = p - y
        grad_w = x.T @ err / n + L2_LAMBDA * w
        grad_b = float(np.mean(err))
        if not (np.all(np.isfinite(grad_w)) and math.isfinite(grad_b)):
            raise Diverged("logistic regression gradients are not finite")
        w -= LEARNING_RATE * grad_w
        b -= LEARNING_RATE * grad_b
        if max(float(np.max(np.abs(grad_w))), abs(grad_b)) < GRAD_TOL:
            break
    if not (np.all(np.isfinite(w)) and math.isfinite(b)):
        raise Diverged("logistic regression weights are not finite")
    return w, b


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    if tp + fp == 0 and tp + fn == 0:
        return 1.0, 1.0, 1.0  # fold held no positives and none were predicted
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f


def _cross_validate(x: np.ndarray, y: np.ndarray, seed: int, n_folds: int = 10) -> TrainingReport:
    n = len(y)
    rng = random.Random(seed)
    positives = [i for i in range(n) if y[i] >= 0.5]
    negatives = [i for i in range(n) if y[i] < 0.5]
    rng.shuffle(positives)
    rng.shuffle(negatives)
    folds: list[list[int]] = [[] for _ in range(min(n_folds, n))]
    # stratified round-robin keeps both classes in every fold where possible
    for i, idx in enumerate(positives + negatives):
        folds[i % len(folds)].append(idx)
    order = positives + negatives
    reports = []
    for fi, fold in enumerate(folds):
        train = [i for i in order if i not in set(fold)]
        w, b = _fit_logistic(x[train], y[train])
        pred = _sigmoid(x[fold] @ w + b) >= 0.5
        truth = y[fold] >= 0.5
        tp = int(np.sum(pred & truth))
        fp = int(np.sum(pred & ~truth))
        fn = int(np.sum(~pred & truth))
        precision, recall, f = _prf(tp, fp, fn)
        reports.append(FoldReport(fold=fi + 1, precision=precision, recall=recall, f_measure=f))
    return TrainingReport(folds=reports)


def train_classifier(
    ts: TrainingSet,
    kind: str,
    centroid: Centroid,
    tables_by_id: dict[str, TableDoc],
    provider: EmbeddingProvider,
    threshold_deg: float = DEFAULT_ANGLE_DEG,
) -> BinaryTopicClassifier:
    if kind == KIND_ANGLE:
        return BinaryTopicClassifier(kind=KIND_ANGLE, centroid=centroid, threshold_deg=threshold_deg)
    if kind != KIND_LINEAR:
        raise ValueError(f"unknown classifier kind {kind!r}")
    ids = list(ts.positives) + list(ts.negatives)
    x = np.stack([table_vector(tables_by_id[tid], provider).v_t for tid in ids])
    y = np.array([1.0] * len(ts.positives) + [0.0] * len(ts.negatives))
    report = _cross_validate(x, y, ts.seed)
    w, b = _fit_logistic(x, y)
    return BinaryTopicClassifier(
        kind=KIND_LINEAR,
        centroid=centroid,
        threshold_deg=threshold_deg,
        weights=w,
        bias=b,
        report=report,
    )


def classify_table(
    classifier: BinaryTopicClassifier,
    table: TableDoc,
    provider: EmbeddingProvider,
) -> tuple[bool, float]:
    tv = table_vector(table, provider)
    if not np.any(tv.v_t):
        return False, 0.0
    if classifier.kind == KIND_ANGLE:
        part = component_vector(tv, classifier.angle_on)
        ref = component_vector(classifier.centroid.vector, classifier.angle_on)
        if not np.any(part) or not np.any(ref):
            return False, 0.0
        angle = angular_distance(part, ref)
        return angle <= classifier.threshold_deg, 1.0 - angle / 180.0
    score = float(_sigmoid(np.array([tv.v_t @ classifier.weights + classifier.bias]))[0])
    return score >= 0.5, score


def form_clusters(
    centroids: Sequence[Centroid],
    corpus_tables: Sequence[TableDoc],
    provider: EmbeddingProvider,
    classifiers: Optional[Sequence[BinaryTopicClassifier]] = None,
) -> list[TopicCluster]:
    """One cluster per centroid: all tables its classifier labels true."""
    if not centroids:
        raise ValueError("no centroids given")
    if classifiers is None:
        classifiers = [
            BinaryTopicClassifier(kind=KIND_ANGLE, centroid=c, threshold_deg=DEFAULT_ANGLE_DEG)
            for c in centroids
        ]
    used_ids: set[str] = set()
    clusters = []
    for centroid, clf in zip(centroids, classifiers):
        members = {
            t.table_id
            for t in corpus_tables
            if classify_table(clf, t, provider)[0]
        }
        cluster_id = slugify(centroid.topic)
        while cluster_id in used_ids:
            cluster_id += "-x"
        used_ids.add(cluster_id)
        clusters.append(
            TopicCluster(
                cluster_id=cluster_id,
                topic=centroid.topic,
                member_table_ids=members,
                classifier=clf,
                created_from=CREATED_CENTROID,
            )
        )
    return clusters


def slugify(text: str) -> str:
    out = []
    for ch in text.lower():
        if ch.isalnum():
            out.append(ch)
        elif out and out[-1] != "-":
            out.append("-")
    return "".join(out).strip("-") or "cluster"
