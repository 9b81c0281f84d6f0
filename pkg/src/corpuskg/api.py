"""Versioned REST API over the file-backed store.

Every response is a versioned document ``{"version": 1, ...}``; module errors
map onto machine-readable codes: 400 for validation failures, 404 for unknown
ids, 503 only for an unavailable LLM behind /chat (search results in that
response still arrive, with an empty narrative).
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .convo import ENGINE_ALL, ENGINE_FIELD, ENGINE_TABLE, LlmConfig, answer, llm_client
from .corpus import TableDoc, table_to_json
from .errors import (
    AlreadyAttached,
    AuthError,
    CkgError,
    CorruptFile,
    EmptyCluster,
    EmptyQuery,
    EmptySelection,
    IndexMissing,
    LlmUnavailable,
    MalformedRecord,
    MalformedResponse,
    NestingTooDeep,
    NotALeaf,
    NotPending,
    SchemaVersionMismatch,
    Timeout,
    UnknownBar,
    UnknownCluster,
    UnknownDoc,
    UnknownItem,
    UnknownNode,
)
from .index import FieldId
from .kg import Subtree
from .store import Store
from .tablesearch import Predicate, StructuralQuery, ValuePredicate

API_VERSION = 1

_NOT_FOUND = (UnknownDoc, UnknownNode, UnknownItem, UnknownCluster, UnknownBar, NotALeaf)
_BAD_REQUEST = (
    EmptyQuery,
    EmptyCluster,
    EmptySelection,
    MalformedRecord,
    NestingTooDeep,
    NotPending,
    AlreadyAttached,
    IndexMissing,
    CorruptFile,
    SchemaVersionMismatch,
    MalformedResponse,
    AuthError,
    Timeout,
)


def _versioned(payload: dict) -> dict:
    return {"version": API_VERSION, **payload}


class PublicationSearchRequest(BaseModel):
    mode: str = Field(pattern="^(fielded|all)$")
    query: Optional[str] = None
    fields: Optional[dict[str, str]] = None
    k: int = 20


class ValuePredicateModel(BaseModel):
    kind: str
    number: Optional[float] = None
    tolerance: float = 1e-9
    text: Optional[str] = None


class PredicateModel(BaseModel):
    attribute_query: str
    value: Optional[ValuePredicateModel] = None


class TableSearchRequest(BaseModel):
    predicates: list[PredicateModel]
    scope: str = "ALL_TABLES"
    match_threshold_deg: float = 25.0
    k: int = 20


class DrilldownRequest(BaseModel):
    bars: list[dict[str, str]]  # [{"label": ..., "axis": "HMD"|"VMD"}]


class ChatRequest(BaseModel):
    question: str
    engine: str = Field(default="ALL", pattern="^(FIELD|ALL|TABLE)$")
    llm: Optional[str] = None  # "stub" forces offline mode


class ReviewRequest(BaseModel):
    verdict: str = Field(pattern="^(APPROVED|REJECTED|AMENDED)$")
    amended_subtree: Optional[dict] = None
    note: str = ""


def _structural_query(req: TableSearchRequest) -> StructuralQuery:
    predicates = []
    for p in req.predicates:
        value = None
        if p.value is not None:
            value = ValuePredicate(
                kind=p.value.kind,
                number=p.value.number,
                tolerance=p.value.tolerance,
                text=p.value.text,
            )
        predicates.append(Predicate(attribute_query=p.attribute_query, value=value))
    return StructuralQuery(
        predicates=tuple(predicates),
        scope=req.scope,
        match_threshold_deg=req.match_threshold_deg,
    )


def _hit_json(hit) -> dict:
    return {
        "doc_id": hit.doc_id,
        "score": hit.score,
        "matched": {f.value: terms for f, terms in hit.matched.items()},
        "snippets": [
            {
                "field": s.field.value,
                "text": s.text,
                "highlight_spans": [list(h) for h in s.highlight_spans],
            }
            for s in hit.snippets
        ],
        "render": hit.render,
    }


def create_app(store: Store, static_dir: Optional[Path] = None) -> FastAPI:
    app = FastAPI(title="corpuskg", version=str(API_VERSION))

    @app.middleware("http")
    async def require_token(request: Request, call_next):
        token = store.config.api_token
        if token and request.url.path.startswith("/v1"):
            supplied = request.headers.get("Authorization", "")
            if supplied != f"Bearer {token}":
                return JSONResponse(
                    status_code=401,
                    content=_versioned(
                        {"error": {"code": "AuthError", "message": "missing or wrong API token"}}
                    ),
                )
        return await call_next(request)

    @app.exception_handler(CkgError)
    async def ckg_error_handler(_req: Request, exc: CkgError):
        if isinstance(exc, LlmUnavailable):
            status = 503
        elif isinstance(exc, _NOT_FOUND):
            status = 404
        elif isinstance(exc, _BAD_REQUEST):
            status = 400
        else:
            status = 500
        return JSONResponse(
            status_code=status,
            content=_versioned({"error": {"code": exc.code, "message": str(exc)}}),
        )

    # --- knowledge graph ---

    @app.get("/v1/kg")
    def get_kg():
        kg = store.kg()
        return _versioned({"root": kg.root_id, "nodes": kg.nodes_payload()})

    @app.get("/v1/kg/search")
    def kg_search(q: str):
        kg = store.kg()
        results = [
            {"node_id": nid, "path": path, "labels": [kg.node(p).label for p in path]}
            for nid, path in kg.search(q)
        ]
        return _versioned({"results": results})

    @app.get("/v1/kg/node/{node_id}/tables")
    def node_tables(node_id: str):
        kg = store.kg()
        node = kg.node(node_id)
        if node.cluster_ref is None:
            raise NotALeaf(f"{node_id} has no attached cluster")
        snap = store.snapshot()
        if node.cluster_ref not in snap.clusters:
            raise UnknownCluster(node.cluster_ref)
        cluster = snap.clusters[node.cluster_ref]
        tables = [
            table_to_json(t) for t in snap.tables if t.table_id in cluster.member_table_ids
        ]
        return _versioned(
            {"node_id": node_id, "cluster_id": node.cluster_ref, "tables": tables}
        )

    @app.get("/v1/kg/node/{node_id}/metaprofile")
    def node_metaprofile(node_id: str):
        kg = store.kg()
        node = kg.node(node_id)
        if node.cluster_ref is None:
            raise NotALeaf(f"{node_id} has no attached cluster")
        profile = store.metaprofile(node.cluster_ref)
        return _versioned(profile.to_json())

    @app.post("/v1/kg/node/{node_id}/drilldown")
    def node_drilldown(node_id: str, req: DrilldownRequest):
        kg = store.kg()
        node = kg.node(node_id)
        if node.cluster_ref is None:
            raise NotALeaf(f"{node_id} has no attached cluster")
        bars = [(b["label"], b["axis"]) for b in req.bars]
        sub = store.drilldown(node.cluster_ref, bars)
        new_node = store.kg().find_by_cluster(sub.cluster_id)
        return _versioned(
            {
                "cluster": sub.to_json(),
                "kg_node_id": new_node.node_id if new_node else None,
                "empty": not sub.member_table_ids,
            }
        )

    # --- search ---

    @app.post("/v1/search/publications")
    def search_publications(req: PublicationSearchRequest):
        snap = store.snapshot()
        if req.mode == "fielded":
            fields = {FieldId(k.upper()): v for k, v in (req.fields or {}).items()}
            hits = snap.index.search_fielded(fields, k=req.k)
        else:
            hits = snap.index.search_all_fields(req.query or "", k=req.k)
        return _versioned({"hits": [_hit_json(h) for h in hits]})

    @app.post("/v1/search/tables")
    def search_tables(req: TableSearchRequest):
        snap = store.snapshot()
        hits = snap.table_search.search(_structural_query(req), k=req.k)
        return _versioned({"hits": [h.to_json() for h in hits]})

    # --- chat ---

    @app.post("/v1/chat")
    def chat(req: ChatRequest):
        snap = store.snapshot()
        llm_cfg = store.config.llm
        if req.llm == "stub":
            llm_cfg = LlmConfig(stub=True)
        client = llm_client(llm_cfg)
        result = answer(
            req.question,
            req.engine,
            client,
            dictionary=snap.dictionary,
            table_search=snap.table_search,
            index=snap.index,
            kg=store.kg() if store.kg_path.exists() else None,
            lexicon=snap.lexicon,
        )
        status_code = 200
        if result.exchange.status == "LlmUnavailable":
            status_code = 503
        payload = _versioned(
            {
                "tables": [t.to_json() for t in result.tables],
                "hits": [_hit_json(h) for h in result.hits],
                "narrative": result.narrative,
                "exchange": result.exchange.to_json(),
                "parsed": {
                    "structural": result.parsed.structural.to_json(),
                    "textual": result.parsed.textual,
                    "identified": [
                        {
                            "surface": s.surface,
                            "matched_attribute": s.matched_label.raw,
                            "value": s.value,
                        }
                        for s in result.parsed.identified
                    ],
                },
            }
        )
        return JSONResponse(status_code=status_code, content=payload)

    # --- ingest ---

    @app.post("/v1/ingest")
    def ingest(record: dict):
        with store.writer_lock:
            pub = store.ingest_record(record, pending=True)
        return _versioned({"accepted": pub.id, "pending": True})

    # --- review ---

    @app.get("/v1/review")
    def review_list():
        kg = store.kg()
        return _versioned({"items": [i.to_json() for i in kg.pending_reviews()]})

    @app.post("/v1/review/{item_id}")
    def review_apply(item_id: str, req: ReviewRequest):
        kg = store.kg()
        amended = Subtree.from_json(req.amended_subtree) if req.amended_subtree else None
        with store.writer_lock:
            item = kg.review(item_id, req.verdict, amended_subtree=amended, note=req.note)
            store.save_kg()
        return _versioned({"item": item.to_json()})

    # --- embeddings ---

    @app.get("/v1/embed")
    def embed_term(term: str):
        snap = store.snapshot()
        vec = snap.provider.embed_term(term)
        return _versioned({"term": term, "vector": vec.tolist()})

    if static_dir is not None and Path(static_dir).exists():
        app.mount("/ui", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
