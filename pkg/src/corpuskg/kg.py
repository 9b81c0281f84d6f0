"""Hierarchical knowledge graph: seeding, search, fusion, review, persistence.

Fusion decision table for an extracted subtree:

* depth 1, root matched with confidence >= 0.8: merge the subtree's leaves
  under the matched node (duplicates by normalized label skipped), applied
  immediately and idempotently.
* depth 1, no root match, but a leaf embedding-matches an existing leaf:
  insert the subtree root as a new sibling of that leaf's parent, adopting
  only the subtree's own leaves; applied immediately at confidence >= 0.8,
  queued for review below.
* depth >= 2: always insert as a new separate branch (under the matched node
  when one exists, else under the root) and always queue for expert review;
  nothing mutates until approval, even when leaves overlap existing ones.
* any confidence below 0.8: queued, graph untouched until a verdict.

Reviewer verdicts append to a correction log; rejected items leave the node
set byte-identical to its pre-fusion serialization.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .corpus import AttributeLabel
from .embed import (
    DEFAULT_MATCH_THRESHOLD_DEG,
    EmbeddingProvider,
    confidence_from_angle,
    match_attribute,
)
from .errors import (
    AlreadyAttached,
    CorruptFile,
    CycleDetected,
    DuplicateSiblingLabel,
    EmptyQuery,
    MultipleRoots,
    NotALeaf,
    NotPending,
    SchemaVersionMismatch,
    UnknownItem,
    UnknownNode,
)
from .text import normalize_label, normalize_text

SCHEMA_VERSION = 1
HIGH_CONFIDENCE = 0.8

ORIGIN_SEED = "SEED"
ORIGIN_FUSED = "FUSED"
ORIGIN_DRILLDOWN = "DRILLDOWN"

ACTION_MERGE = "MERGE_LEAVES"
ACTION_INSERT = "INSERT_NEW_BRANCH"
ACTION_QUEUED = "QUEUED_FOR_REVIEW"

STATUS_PENDING = "PENDING"
STATUS_APPROVED = "APPROVED"
STATUS_REJECTED = "REJECTED"
STATUS_AMENDED = "AMENDED"


@dataclass
class KgNode:
    node_id: str
    label: str
    normalized_label: str
    parent_id: Optional[str]
    children: list[str] = field(default_factory=list)
    cluster_ref: Optional[str] = None
    origin: str = ORIGIN_SEED

    def to_json(self) -> dict:
        return {
            "id": self.node_id,
            "label": self.label,
            "parent": self.parent_id,
            "children": list(self.children),
            "cluster_ref": self.cluster_ref,
            "origin": self.origin,
        }


@dataclass(frozen=True)
class SubtreeNode:
    label: str
    children: tuple["SubtreeNode", ...] = ()

    @property
    def normalized(self) -> str:
        return normalize_label(self.label)

    def depth(self) -> int:
        if not self.children:
            return 0
        return 1 + max(c.depth() for c in self.children)

    def to_json(self) -> dict:
        return {"label": self.label, "children": [c.to_json() for c in self.children]}

    @classmethod
    def from_json(cls, doc: dict) -> "SubtreeNode":
        return cls(
            label=doc["label"],
            children=tuple(cls.from_json(c) for c in doc.get("children", [])),
        )


@dataclass(frozen=True)
class Subtree:
    root: SubtreeNode
    source_table_id: str = ""

    def depth(self) -> int:
        return self.root.depth()

    def to_json(self) -> dict:
        return {"root": self.root.to_json(), "source_table_id": self.source_table_id}

    @classmethod
    def from_json(cls, doc: dict) -> "Subtree":
        return cls(
            root=SubtreeNode.from_json(doc["root"]),
            source_table_id=doc.get("source_table_id", ""),
        )


def subtree(root_label: str, *leaves: str, source_table_id: str = "") -> Subtree:
    return Subtree(
        root=SubtreeNode(root_label, tuple(SubtreeNode(l) for l in leaves)),
        source_table_id=source_table_id,
    )


@dataclass
class FusionDecision:
    subtree: Subtree
    matched_node_id: Optional[str]
    action: str
    confidence: float
    rationale: str
    intended_action: Optional[str] = None  # set when action is QUEUED_FOR_REVIEW
    applied: bool = False

    def to_json(self) -> dict:
        return {
            "subtree": self.subtree.to_json(),
            "matched_node_id": self.matched_node_id,
            "action": self.action,
            "confidence": self.confidence,
            "rationale": self.rationale,
            "intended_action": self.intended_action,
            "applied": self.applied,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "FusionDecision":
        return cls(
            subtree=Subtree.from_json(doc["subtree"]),
            matched_node_id=doc["matched_node_id"],
            action=doc["action"],
            confidence=doc["confidence"],
            rationale=doc["rationale"],
            intended_action=doc.get("intended_action"),
            applied=doc.get("applied", False),
        )


@dataclass
class ReviewItem:
    item_id: str
    decision: FusionDecision
    status: str = STATUS_PENDING
    reviewer_note: str = ""

    def to_json(self) -> dict:
        return {
            "item_id": self.item_id,
            "decision": self.decision.to_json(),
            "status": self.status,
            "reviewer_note": self.reviewer_note,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "ReviewItem":
        return cls(
            item_id=doc["item_id"],
            decision=FusionDecision.from_json(doc["decision"]),
            status=doc["status"],
            reviewer_note=doc.get("reviewer_note", ""),
        )


class Kg:
    """Single-writer hierarchical KG; callers serialize mutations."""

    def __init__(self):
        self.nodes: dict[str, KgNode] = {}
        self.root_id: Optional[str] = None
        self.next_node_seq = 1
        self.next_item_seq = 1
        self.review_queue: dict[str, ReviewItem] = {}
        self.correction_log: list[dict] = []
        self.high_threshold = HIGH_CONFIDENCE

    # --- construction ---

    def _new_node(
        self,
        label: str,
        parent_id: Optional[str],
        origin: str,
        cluster_ref: Optional[str] = None,
    ) -> KgNode:
        node = KgNode(
            node_id=f"n{self.next_node_seq:04d}",
            label=label,
            normalized_label=normalize_label(label),
            parent_id=parent_id,
            origin=origin,
            cluster_ref=cluster_ref,
        )
        self.next_node_seq += 1
        self.nodes[node.node_id] = node
        if parent_id is not None:
            self.nodes[parent_id].children.append(node.node_id)
        return node

    @classmethod
    def init_seed(cls, seed_spec: dict) -> "Kg":
        """Build a KG from a nested {label, children[]} seed tree."""
        if isinstance(seed_spec, list):
            raise MultipleRoots("seed must have a single root")
        kg = cls()

        def add(spec: dict, parent_id: Optional[str], path_labels: tuple[str, ...]) -> None:
            label = spec.get("label", "")
            if not label:
                raise CycleDetected("seed node without a label")
            norm = normalize_label(label)
            if norm in path_labels:
                raise CycleDetected(f"seed node {label!r} appears within its own subtree")
            node = kg._new_node(label, parent_id, ORIGIN_SEED)
            seen = set()
            for child in spec.get("children", []):
                child_norm = normalize_label(child.get("label", ""))
                if child_norm in seen:
                    raise DuplicateSiblingLabel(child.get("label", ""))
                seen.add(child_norm)
                add(child, node.node_id, path_labels + (norm,))

        add(seed_spec, None, ())
        kg.root_id = "n0001"
        return kg

    # --- queries ---

    def node(self, node_id: str) -> KgNode:
        if node_id not in self.nodes:
            raise UnknownNode(node_id)
        return self.nodes[node_id]

    def path_to(self, node_id: str) -> list[str]:
        path = []
        cur: Optional[str] = node_id
        while cur is not None:
            path.append(cur)
            cur = self.nodes[cur].parent_id
        return list(reversed(path))

    def depth_of(self, node_id: str) -> int:
        return len(self.path_to(node_id)) - 1

    def is_leaf(self, node_id: str) -> bool:
        return not self.nodes[node_id].children

    def leaves(self) -> list[KgNode]:
        return [n for n in self.nodes.values() if not n.children]

    def find_by_cluster(self, cluster_id: str) -> Optional[KgNode]:
        for node_id in sorted(self.nodes):
            if self.nodes[node_id].cluster_ref == cluster_id:
                return self.nodes[node_id]
        return None

    def search(self, query: str) -> list[tuple[str, list[str]]]:
        """Nodes whose normalized label contains all query stems, with paths."""
        stems = [t.stem for t in normalize_text(query) if t.kind == "WORD"]
        if not stems:
            raise EmptyQuery("query normalized to zero stems")
        results = []
        for node in self.nodes.values():
            label_tokens = set(node.normalized_label.split())
            if all(s in label_tokens for s in stems):
                results.append((node.node_id, self.path_to(node.node_id)))
        results.sort(
            key=lambda r: (len(r[1]), self.nodes[r[0]].normalized_label, r[0])
        )
        return results

    # --- cluster attachment ---

    def attach_cluster(self, node_id: str, cluster_id: str, replace: bool = False) -> None:
        node = self.node(node_id)
        if node.children and not all(
            self.nodes[c].origin == ORIGIN_DRILLDOWN for c in node.children
        ):
            raise NotALeaf(node_id)
        if node.cluster_ref is not None and not replace:
            raise AlreadyAttached(f"{node_id} already references {node.cluster_ref}")
        if node.cluster_ref is not None and replace:
            self._log("attach_replace", node_id, f"{node.cluster_ref} -> {cluster_id}")
        node.cluster_ref = cluster_id

    # --- fusion ---

    def _log(self, kind: str, ref: str, detail: str) -> None:
        self.correction_log.append(
            {"seq": len(self.correction_log) + 1, "kind": kind, "ref": ref, "detail": detail}
        )

    def match_subtree_root(
        self,
        s: Subtree,
        provider: EmbeddingProvider,
        threshold_deg: float = DEFAULT_MATCH_THRESHOLD_DEG,
    ) -> tuple[Optional[str], float]:
        """Best node for a subtree root: exact normalized label first, then
        embedding; runners-up go to the correction log."""
        target = s.root.normalized
        exact = [
            nid
            for nid in sorted(self.nodes)
            if self.nodes[nid].normalized_label == target
        ]
        if exact:
            best = min(exact, key=lambda nid: (self.depth_of(nid), nid))
            for other in exact:
                if other != best:
                    self._log("match_runner_up", other, f"exact match for {s.root.label!r}")
            return best, 1.0
        ordered = sorted(self.nodes)
        candidates = [
            AttributeLabel.make(self.nodes[nid].label) for nid in ordered
        ]
        matches = match_attribute(s.root.label, candidates, provider, threshold_deg)
        if not matches:
            return None, 0.0
        by_label: dict[str, str] = {}
        for nid in ordered:
            by_label.setdefault(self.nodes[nid].normalized_label, nid)
        best_match = matches[0]
        for runner in matches[1:]:
            runner_id = by_label.get(runner.matched_label.normalized)
            if runner_id:
                self._log(
                    "match_runner_up",
                    runner_id,
                    f"angle {runner.angle_deg:.2f} for {s.root.label!r}",
                )
        return by_label[best_match.matched_label.normalized], best_match.confidence

    def _match_leaf_level(
        self,
        s: Subtree,
        provider: EmbeddingProvider,
        threshold_deg: float,
    ) -> tuple[Optional[str], float]:
        """Best existing leaf matching any of the subtree's leaves."""
        leaf_nodes = [n for n in self.leaves()]
        if not leaf_nodes:
            return None, 0.0
        ordered = sorted(leaf_nodes, key=lambda n: n.node_id)
        candidates = [AttributeLabel.make(n.label) for n in ordered]
        best: tuple[float, Optional[str]] = (-1.0, None)
        for child in s.root.children:
            matches = match_attribute(child.label, candidates, provider, threshold_deg)
            if matches:
                m = matches[0]
                for node in ordered:
                    if normalize_label(node.label) == m.matched_label.normalized:
                        if m.confidence > best[0]:
                            best = (m.confidence, node.node_id)
                        break
        if best[1] is None:
            return None, 0.0
        return best[1], best[0]

    def fuse_subtree(
        self,
        s: Subtree,
        provider: EmbeddingProvider,
        threshold_deg: float = DEFAULT_MATCH_THRESHOLD_DEG,
    ) -> FusionDecision:
        matched_id, confidence = self.match_subtree_root(s, provider, threshold_deg)
        depth = s.depth()

        if depth >= 2:
            where = f"under {matched_id}" if matched_id else "under the root"
            decision = FusionDecision(
                subtree=s,
                matched_node_id=matched_id,
                action=ACTION_INSERT,
                confidence=confidence,
                rationale=f"multi-level subtree kept separate, inserted {where} on approval",
            )
            self._enqueue(decision)
            self._log("fuse_decision", decision.action, self._decision_ref(decision))
            return decision

        if matched_id is not None:
            decision = FusionDecision(
                subtree=s,
                matched_node_id=matched_id,
                action=ACTION_MERGE,
                confidence=confidence,
                rationale=f"root matched node {matched_id} at {confidence:.3f}",
            )
            if confidence >= self.high_threshold:
                self._apply_merge_leaves(decision)
                decision.applied = True
            else:
                decision.intended_action = ACTION_MERGE
                decision.action = ACTION_QUEUED
                self._enqueue(decision)
            self._log("fuse_decision", decision.action, self._decision_ref(decision))
            return decision

        leaf_id, leaf_conf = self._match_leaf_level(s, provider, threshold_deg)
        if leaf_id is not None:
            decision = FusionDecision(
                subtree=s,
                matched_node_id=leaf_id,
                action=ACTION_INSERT,
                confidence=leaf_conf,
                rationale=f"no root match; leaf matched {leaf_id} at {leaf_conf:.3f}",
            )
            if leaf_conf >= self.high_threshold:
                self._apply_insert_sibling(decision)
                decision.applied = True
            else:
                decision.intended_action = ACTION_INSERT
                decision.action = ACTION_QUEUED
                self._enqueue(decision)
            self._log("fuse_decision", decision.action, self._decision_ref(decision))
            return decision

        decision = FusionDecision(
            subtree=s,
            matched_node_id=None,
            action=ACTION_QUEUED,
            confidence=0.0,
            rationale="no root or leaf match; new branch under the root needs review",
            intended_action=ACTION_INSERT,
        )
        self._enqueue(decision)
        self._log("fuse_decision", decision.action, self._decision_ref(decision))
        return decision

    def _decision_ref(self, decision: FusionDecision) -> str:
        return (
            f"{decision.subtree.root.label!r} conf={decision.confidence:.3f} "
            f"applied={decision.applied}"
        )

    def _enqueue(self, decision: FusionDecision) -> ReviewItem:
        item = ReviewItem(item_id=f"r{self.next_item_seq:04d}", decision=decision)
        self.next_item_seq += 1
        self.review_queue[item.item_id] = item
        return item

    # --- mutations (idempotent) ---

    def _child_by_norm(self, parent_id: str, normalized: str) -> Optional[str]:
        for cid in self.nodes[parent_id].children:
            if self.nodes[cid].normalized_label == normalized:
                return cid
        return None

    def _apply_merge_leaves(self, decision: FusionDecision) -> None:
        parent_id = decision.matched_node_id
        for child in decision.subtree.root.children:
            if self._child_by_norm(parent_id, child.normalized) is None:
                self._new_node(child.label, parent_id, ORIGIN_FUSED)

    def _apply_insert_sibling(self, decision: FusionDecision) -> None:
        """Insert the subtree root above its own leaves, next to the matched
        leaf's parent (never re-parenting existing nodes)."""
        matched_leaf = self.nodes[decision.matched_node_id]
        anchor = (
            matched_leaf.parent_id if matched_leaf.parent_id is not None else self.root_id
        )
        grandparent = (
            self.nodes[anchor].parent_id
            if self.nodes[anchor].parent_id is not None
            else self.root_id
        )
        root_norm = decision.subtree.root.normalized
        new_id = self._child_by_norm(grandparent, root_norm)
        if new_id is None:
            new_id = self._new_node(
                decision.subtree.root.label, grandparent, ORIGIN_FUSED
            ).node_id
        for child in decision.subtree.root.children:
            if self._child_by_norm(new_id, child.normalized) is None:
                self._new_node(child.label, new_id, ORIGIN_FUSED)

    def _apply_insert_branch(self, decision: FusionDecision) -> None:
        """Graft the subtree as a separate branch (multi-level case)."""
        anchor = decision.matched_node_id or self.root_id

        def graft(node: SubtreeNode, parent_id: str) -> None:
            existing = self._child_by_norm(parent_id, node.normalized)
            if existing is None:
                existing = self._new_node(node.label, parent_id, ORIGIN_FUSED).node_id
            for child in node.children:
                graft(child, existing)

        if decision.matched_node_id is not None:
            # matched the root label itself: keep the new categorization
            # separate by grafting the subtree's children under the match
            for child in decision.subtree.root.children:
                graft(child, anchor)
        else:
            graft(decision.subtree.root, anchor)

    def _apply(self, decision: FusionDecision) -> None:
        action = decision.intended_action or decision.action
        if decision.subtree.depth() >= 2:
            self._apply_insert_branch(decision)
        elif action == ACTION_MERGE:
            self._apply_merge_leaves(decision)
        else:
            if decision.matched_node_id is not None:
                self._apply_insert_sibling(decision)
            else:
                self._apply_insert_branch(decision)
        decision.applied = True

    # --- review ---

    def review(
        self,
        item_id: str,
        verdict: str,
        amended_subtree: Optional[Subtree] = None,
        note: str = "",
    ) -> ReviewItem:
        if item_id not in self.review_queue:
            raise UnknownItem(item_id)
        item = self.review_queue[item_id]
        if item.status != STATUS_PENDING:
            raise NotPending(f"{item_id} is {item.status}")
        if verdict == STATUS_APPROVED:
            self._apply(item.decision)
        elif verdict == STATUS_AMENDED:
            if amended_subtree is None:
                raise ValueError("AMENDED verdict requires an amended subtree")
            amended = FusionDecision(
                subtree=amended_subtree,
                matched_node_id=item.decision.matched_node_id,
                action=item.decision.intended_action or item.decision.action,
                confidence=item.decision.confidence,
                rationale=f"amended by reviewer from {item.decision.subtree.root.label!r}",
            )
            self._apply(amended)
            item.decision = amended
        elif verdict != STATUS_REJECTED:
            raise ValueError(f"unknown verdict {verdict!r}")
        item.status = verdict
        item.reviewer_note = note
        self._log("review", item_id, f"{verdict}: {item.decision.subtree.root.label!r}")
        return item

    def pending_reviews(self) -> list[ReviewItem]:
        return [
            self.review_queue[k]
            for k in sorted(self.review_queue)
            if self.review_queue[k].status == STATUS_PENDING
        ]

    # --- integrity ---

    def check_integrity(self) -> None:
        roots = [n for n in self.nodes.values() if n.parent_id is None]
        assert len(roots) == 1, f"expected one root, found {len(roots)}"
        assert roots[0].node_id == self.root_id
        seen = set()
        stack = [self.root_id]
        while stack:
            nid = stack.pop()
            assert nid not in seen, f"cycle through {nid}"
            seen.add(nid)
            node = self.nodes[nid]
            for cid in node.children:
                assert self.nodes[cid].parent_id == nid, f"broken link {nid}->{cid}"
                stack.append(cid)
        assert seen == set(self.nodes), "orphan nodes outside the root tree"
        for node in self.nodes.values():
            if node.cluster_ref is not None and node.children:
                assert all(
                    self.nodes[c].origin == ORIGIN_DRILLDOWN for c in node.children
                ), f"{node.node_id} carries a cluster but has non-drilldown children"

    # --- persistence ---

    def nodes_payload(self) -> list[dict]:
        return [self.nodes[nid].to_json() for nid in sorted(self.nodes)]

    def canonical_nodes_bytes(self) -> bytes:
        """Stable serialization of the node set alone (audit surfaces excluded)."""
        return json.dumps(self.nodes_payload(), sort_keys=True).encode("utf-8")

    def to_json(self) -> dict:
        return {
            "version": SCHEMA_VERSION,
            "root": self.root_id,
            "next_node_seq": self.next_node_seq,
            "next_item_seq": self.next_item_seq,
            "nodes": self.nodes_payload(),
            "review_queue": [
                self.review_queue[k].to_json() for k in sorted(self.review_queue)
            ],
            "correction_log": list(self.correction_log),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "Kg":
        version = doc.get("version")
        if version != SCHEMA_VERSION:
            raise SchemaVersionMismatch(f"schema version {version}, supported {SCHEMA_VERSION}")
        kg = cls()
        kg.root_id = doc["root"]
        kg.next_node_seq = doc["next_node_seq"]
        kg.next_item_seq = doc["next_item_seq"]
        for n in doc["nodes"]:
            kg.nodes[n["id"]] = KgNode(
                node_id=n["id"],
                label=n["label"],
                normalized_label=normalize_label(n["label"]),
                parent_id=n["parent"],
                children=list(n["children"]),
                cluster_ref=n["cluster_ref"],
                origin=n["origin"],
            )
        for item in doc.get("review_queue", []):
            kg.review_queue[item["item_id"]] = ReviewItem.from_json(item)
        kg.correction_log = list(doc.get("correction_log", []))
        return kg

    def save(self, path: Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_json(), indent=2, sort_keys=True), encoding="utf-8"
        )

    @classmethod
    def load(cls, path: Path) -> "Kg":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise CorruptFile(str(path)) from exc
        if not isinstance(doc, dict) or "nodes" not in doc:
            raise CorruptFile(f"{path} is not a knowledge graph file")
        return cls.from_json(doc)

    def structurally_equal(self, other: "Kg") -> bool:
        return self.to_json() == other.to_json()
