"""File-backed store wiring every module over one data directory.

Layout under ``data_dir``::

    corpus/<doc id>.json     parsed publications (lossless parsed form)
    pending/<doc id>.json    ingested but not yet folded into the index
    index/v00001/...         immutable index builds
    index/CURRENT            pointer file naming the live index build
    clusters.json            topic clusters with their classifiers
    kg.json                  knowledge graph, review queue, correction log
    vocab.json               ranked vocabulary
    quarantine/              malformed ingest files plus error reports
    reports/                 classifier training reports

Index folds write a complete new versioned directory and then atomically
replace the CURRENT pointer (write-temp plus rename), so a crash at any step
leaves either the old or the new build fully live, never a mix. Mutations
(ingest, fold, KG writes, drilldown) serialize through one writer lock;
readers work from immutable snapshots.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

from .cluster import (
    CREATED_DRILLDOWN,
    KIND_ANGLE,
    KIND_LINEAR,
    BinaryTopicClassifier,
    Centroid,
    TopicCluster,
    build_training_set,
    form_clusters,
    make_centroid,
    train_classifier,
)
from .config import ServiceConfig
from .convo import AttributeDictionary, build_attribute_dictionary
from .corpus import (
    Publication,
    TableDoc,
    parse_publication,
    publication_from_json,
    publication_to_json,
)
from .embed import (
    EmbeddingProvider,
    SynonymLexicon,
    TableVector,
    build_lexicon,
    provider_from_config,
)
from .errors import (
    CkgError,
    EmptyCluster,
    IndexMissing,
    UnknownCluster,
    UnknownNode,
)
from .index import FieldId, Index, build_index
from .kg import ORIGIN_DRILLDOWN, Kg, Subtree, SubtreeNode
from .tablesearch import MetaProfile, TableSearch, build_metaprofile, drilldown
from .vocab import Vocabulary, build_vocabulary

import numpy as np


@dataclass
class Snapshot:
    """Immutable view handed to request handlers."""

    pubs: dict[str, Publication]
    tables: list[TableDoc]
    index: Optional[Index]
    provider: EmbeddingProvider
    clusters: dict[str, TopicCluster]
    lexicon: SynonymLexicon
    dictionary: AttributeDictionary
    table_search: TableSearch
    vocabulary: Optional[Vocabulary]


class Store:
    def __init__(self, config: ServiceConfig):
        self.config = config
        self.data_dir = Path(config.data_dir)
        self.writer_lock = threading.RLock()
        self._snapshot: Optional[Snapshot] = None
        self._kg: Optional[Kg] = None

    # --- paths ---

    @property
    def corpus_dir(self) -> Path:
        return self.data_dir / "corpus"

    @property
    def pending_dir(self) -> Path:
        return self.data_dir / "pending"

    @property
    def index_dir(self) -> Path:
        return self.data_dir / "index"

    @property
    def quarantine_dir(self) -> Path:
        return self.data_dir / "quarantine"

    @property
    def reports_dir(self) -> Path:
        return self.data_dir / "reports"

    @property
    def clusters_path(self) -> Path:
        return self.data_dir / "clusters.json"

    @property
    def kg_path(self) -> Path:
        return self.data_dir / "kg.json"

    @property
    def vocab_path(self) -> Path:
        return self.data_dir / "vocab.json"

    def ensure_layout(self) -> None:
        for d in (self.corpus_dir, self.pending_dir, self.index_dir,
                  self.quarantine_dir, self.reports_dir):
            d.mkdir(parents=True, exist_ok=True)

    # --- corpus ---

    def _doc_filename(self, doc_id: str) -> str:
        safe = "".join(c if c.isalnum() or c in "-_." else "_" for c in doc_id)
        return f"{safe}.json"

    def save_publication(self, pub: Publication, pending: bool = False) -> Path:
        target = self.pending_dir if pending else self.corpus_dir
        target.mkdir(parents=True, exist_ok=True)
        path = target / self._doc_filename(pub.id)
        path.write_text(
            json.dumps(publication_to_json(pub), sort_keys=True), encoding="utf-8"
        )
        return path

    def load_publications(self, include_pending: bool = False) -> list[Publication]:
        pubs = []
        dirs = [self.corpus_dir] + ([self.pending_dir] if include_pending else [])
        for d in dirs:
            if not d.exists():
                continue
            for path in sorted(d.glob("*.json")):
                pubs.append(publication_from_json(json.loads(path.read_text("utf-8"))))
        return pubs

    def ingest_record(self, record: dict, pending: bool = True) -> Publication:
        pub = parse_publication(record)
        self.save_publication(pub, pending=pending)
        return pub

    def ingest_directory(self, source: Path) -> list[Publication]:
        from .corpus import load_records

        out = []
        with self.writer_lock:
            for record in load_records(Path(source)):
                out.append(self.ingest_record(record, pending=False))
        return out

    # --- embedding provider ---

    def provider(self) -> EmbeddingProvider:
        return provider_from_config(
            dimension=self.config.embed_dimension,
            seed=self.config.embed_seed,
            embeddings_file=self.config.embeddings_file,
        )

    # --- index builds with atomic pointer swap ---

    def current_index_path(self) -> Optional[Path]:
        pointer = self.index_dir / "CURRENT"
        if not pointer.exists():
            return None
        name = pointer.read_text(encoding="utf-8").strip()
        path = self.index_dir / name
        return path if path.exists() else None

    def _next_version_name(self) -> str:
        existing = [
            int(p.name[1:])
            for p in self.index_dir.glob("v*")
            if p.is_dir() and p.name[1:].isdigit()
        ]
        return f"v{(max(existing) + 1 if existing else 1):05d}"

    def fold(self, step_hook: Optional[Callable[[str], None]] = None) -> Path:
        """Fold pending documents into a fresh index and swap it live.

        ``step_hook`` is a crash-injection point for tests; it is called with
        a step name before each stage.
        """

        def step(name: str) -> None:
            if step_hook:
                step_hook(name)

        with self.writer_lock:
            self.ensure_layout()
            step("collect")
            pending_files = sorted(self.pending_dir.glob("*.json"))
            for path in pending_files:
                target = self.corpus_dir / path.name
                os.replace(path, target)
            pubs = self.load_publications()
            if not pubs:
                raise IndexMissing("no documents to index")
            step("build")
            index = build_index(
                pubs,
                field_weights={FieldId(k): v for k, v in self.config.field_weights.items()},
            )
            vocab = build_vocabulary(pubs)
            version = self._next_version_name()
            step("write")
            index.save(self.index_dir / version)
            vocab.save(self.vocab_path)
            step("swap")
            tmp = self.index_dir / "CURRENT.tmp"
            tmp.write_text(version, encoding="utf-8")
            os.replace(tmp, self.index_dir / "CURRENT")
            step("done")
            self._snapshot = None
            return self.index_dir / version

    # --- snapshot assembly ---

    def load_clusters(self) -> dict[str, TopicCluster]:
        if not self.clusters_path.exists():
            return {}
        doc = json.loads(self.clusters_path.read_text(encoding="utf-8"))
        clusters = {}
        for c in doc["clusters"]:
            clf = None
            if c.get("classifier"):
                cj = c["classifier"]
                centroid = None
                if "centroid_vector" in cj:
                    vec = np.array(cj["centroid_vector"])
                    third = len(vec) // 3
                    centroid = Centroid(
                        topic=cj.get("topic", c["topic"]),
                        table_id=cj.get("centroid_table_id", ""),
                        vector=TableVector(
                            v_hmd=vec[:third], v_vmd=vec[third : 2 * third], v_d=vec[2 * third :]
                        ),
                    )
                clf = BinaryTopicClassifier(
                    kind=cj["kind"],
                    centroid=centroid,
                    threshold_deg=cj.get("threshold_deg", 18.0),
                    angle_on=cj.get("angle_on", "full"),
                    weights=np.array(cj["weights"]) if cj.get("weights") else None,
                    bias=cj.get("bias", 0.0),
                )
            clusters[c["cluster_id"]] = TopicCluster(
                cluster_id=c["cluster_id"],
                topic=c["topic"],
                member_table_ids=set(c["member_table_ids"]),
                classifier=clf,
                created_from=c["created_from"],
            )
        return clusters

    def save_clusters(self, clusters: dict[str, TopicCluster]) -> None:
        payload = {"version": 1, "clusters": [clusters[k].to_json() for k in sorted(clusters)]}
        self.clusters_path.write_text(
            json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8"
        )

    def kg(self) -> Kg:
        if self._kg is None:
            if not self.kg_path.exists():
                raise UnknownNode("knowledge graph not initialized")
            self._kg = Kg.load(self.kg_path)
        return self._kg

    def save_kg(self) -> None:
        if self._kg is not None:
            self._kg.save(self.kg_path)

    def set_kg(self, kg: Kg) -> None:
        self._kg = kg
        self.save_kg()

    def snapshot(self, rebuild: bool = False) -> Snapshot:
        if self._snapshot is not None and not rebuild:
            return self._snapshot
        index_path = self.current_index_path()
        if index_path is None:
            raise IndexMissing("run the index step before serving queries")
        index = Index.load(index_path)
        pubs = {p.id: p for p in self.load_publications()}
        tables = [t for pid in sorted(pubs) for t in pubs[pid].tables]
        provider = self.provider()
        vocab = Vocabulary.load(self.vocab_path) if self.vocab_path.exists() else None
        lexicon = build_lexicon(tables, vocab.terms() if vocab else [], provider)
        dictionary = build_attribute_dictionary(tables, provider, lexicon=lexicon)
        clusters = self.load_clusters()
        table_search = TableSearch(tables, provider, clusters=clusters)
        self._snapshot = Snapshot(
            pubs=pubs,
            tables=tables,
            index=index,
            provider=provider,
            clusters=clusters,
            lexicon=lexicon,
            dictionary=dictionary,
            table_search=table_search,
            vocabulary=vocab,
        )
        return self._snapshot

    # --- clustering pipeline ---

    def run_clustering(
        self,
        seeds: Sequence[dict],
        kind: str = KIND_ANGLE,
        threshold_deg: Optional[float] = None,
        rng_seed: int = 0,
    ) -> dict[str, TopicCluster]:
        """Seed format: [{topic, table_id, threshold_deg?, kind?, attach_to?}]."""
        snap = self.snapshot()
        by_id = {t.table_id: t for t in snap.tables}
        clusters: dict[str, TopicCluster] = dict(snap.clusters)
        with self.writer_lock:
            for seed in seeds:
                topic = seed["topic"]
                table = by_id.get(seed["table_id"])
                if table is None:
                    raise UnknownCluster(f"seed table {seed['table_id']} not in corpus")
                theta = float(
                    seed.get("threshold_deg", threshold_deg or self.config.angle_threshold_deg)
                )
                seed_kind = seed.get("kind", kind).upper()
                if seed_kind == "ANGLE":
                    seed_kind = KIND_ANGLE
                if seed_kind == "LINEAR":
                    seed_kind = KIND_LINEAR
                angle_on = seed.get("angle_on", "full")
                centroid = make_centroid(topic, table, snap.provider)
                if seed_kind == KIND_LINEAR:
                    ts = build_training_set(
                        centroid, snap.tables, snap.provider, theta, rng_seed, angle_on
                    )
                    clf = train_classifier(
                        ts, KIND_LINEAR, centroid, by_id, snap.provider, theta
                    )
                    if clf.report is not None:
                        self.reports_dir.mkdir(parents=True, exist_ok=True)
                        (self.reports_dir / f"{topic}.txt").write_text(
                            clf.report.to_text(), encoding="utf-8"
                        )
                else:
                    clf = BinaryTopicClassifier(
                        kind=KIND_ANGLE, centroid=centroid, threshold_deg=theta,
                        angle_on=angle_on,
                    )
                formed = form_clusters([centroid], snap.tables, snap.provider, [clf])[0]
                clusters[formed.cluster_id] = formed
                attach_to = seed.get("attach_to")
                if attach_to:
                    kg = self.kg()
                    matches = kg.search(attach_to)
                    if not matches:
                        raise UnknownNode(f"attach_to {attach_to!r} matches no KG node")
                    kg.attach_cluster(matches[0][0], formed.cluster_id, replace=True)
                    self.save_kg()
            self.save_clusters(clusters)
            self._snapshot = None
        return clusters

    # --- subtree extraction and fusion ---

    def extract_subtrees(self, tables: Iterable[TableDoc]) -> list[Subtree]:
        """Depth-1 subtrees from hierarchical labels: parent label as root,
        its child labels as leaves, one subtree per distinct parent chain."""
        out = []
        for table in tables:
            groups: dict[int, tuple] = {}
            for label in list(table.hmd) + list(table.vmd):
                if label.parent is not None and label.normalized:
                    key = id(label.parent)
                    root_label, children = groups.get(key, (label.parent.raw, []))
                    if label.raw not in children:
                        children.append(label.raw)
                    groups[key] = (root_label, children)
            for root_label, children in groups.values():
                out.append(
                    Subtree(
                        root=SubtreeNode(
                            root_label, tuple(SubtreeNode(c) for c in children)
                        ),
                        source_table_id=table.table_id,
                    )
                )
        return out

    def fuse_from_clusters(self) -> list[dict]:
        snap = self.snapshot()
        kg = self.kg()
        results = []
        with self.writer_lock:
            clustered_ids = {
                tid for c in snap.clusters.values() for tid in c.member_table_ids
            }
            tables = [t for t in snap.tables if t.table_id in clustered_ids]
            for subtree_ in self.extract_subtrees(tables):
                decision = kg.fuse_subtree(
                    subtree_, snap.provider, self.config.synonym_threshold_deg
                )
                results.append(decision.to_json())
            self.save_kg()
        return results

    # --- drilldown wiring (sub-cluster registration + KG attachment) ---

    def metaprofile(self, cluster_id: str) -> MetaProfile:
        snap = self.snapshot()
        if cluster_id not in snap.clusters:
            raise UnknownCluster(cluster_id)
        return build_metaprofile(snap.clusters[cluster_id], snap.tables)

    def drilldown(self, cluster_id: str, selected_bars: Sequence[tuple[str, str]]) -> TopicCluster:
        snap = self.snapshot()
        if cluster_id not in snap.clusters:
            raise UnknownCluster(cluster_id)
        cluster = snap.clusters[cluster_id]
        profile = build_metaprofile(cluster, snap.tables)
        with self.writer_lock:
            sub = drilldown(cluster, profile, selected_bars, snap.tables)
            clusters = dict(snap.clusters)
            clusters[sub.cluster_id] = sub
            self.save_clusters(clusters)
            kg = self.kg()
            parent_node = kg.find_by_cluster(cluster_id)
            if parent_node is not None:
                existing = None
                for cid in parent_node.children:
                    if kg.nodes[cid].cluster_ref == sub.cluster_id:
                        existing = cid
                        break
                if existing is None:
                    label = " + ".join(lbl for lbl, _axis in selected_bars)
                    node = kg._new_node(
                        label, parent_node.node_id, ORIGIN_DRILLDOWN, cluster_ref=sub.cluster_id
                    )
                self.save_kg()
            self._snapshot = None
        return sub
