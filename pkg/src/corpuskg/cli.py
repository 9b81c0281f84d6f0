"""Command-line interface.

Subcommands: ingest, index, cluster, kg init, kg fuse, search pubs, search
tables, metaprofile, review list, review apply, serve. Every failure exits
nonzero with the module error name on stderr. `--data-dir` (or CKG_DATA_DIR)
selects the store.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import ServiceConfig
from .convo import LlmConfig
from .errors import CkgError, IndexMissing
from .index import FieldId
from .kg import Kg, Subtree
from .store import Store
from .tablesearch import EQ_NUM, Predicate, StructuralQuery, ValuePredicate


def _store(args) -> Store:
    config = ServiceConfig.from_env(
        data_dir=Path(args.data_dir) if args.data_dir else None,
        embeddings_file=Path(args.embeddings) if getattr(args, "embeddings", None) else None,
    )
    if getattr(args, "llm", None) == "stub":
        config.llm = LlmConfig(stub=True)
    store = Store(config)
    store.ensure_layout()
    return store


def cmd_ingest(args) -> int:
    store = _store(args)
    pubs = store.ingest_directory(Path(args.source))
    print(f"ingested {len(pubs)} publications into {store.corpus_dir}")
    return 0


def cmd_index(args) -> int:
    store = _store(args)
    path = store.fold()
    print(f"index built at {path}")
    return 0


def cmd_cluster(args) -> int:
    store = _store(args)
    seeds = json.loads(Path(args.seeds).read_text(encoding="utf-8"))
    if args.angle_on:
        for seed in seeds:
            seed.setdefault("angle_on", args.angle_on)
    clusters = store.run_clustering(
        seeds,
        kind=args.kind,
        threshold_deg=args.threshold,
        rng_seed=args.rng_seed,
    )
    for cid in sorted(clusters):
        print(f"{cid}\t{len(clusters[cid].member_table_ids)} tables")
    return 0


def cmd_kg_init(args) -> int:
    store = _store(args)
    seed = json.loads(Path(args.seed).read_text(encoding="utf-8"))
    kg = Kg.init_seed(seed)
    store.set_kg(kg)
    print(f"knowledge graph seeded with {len(kg.nodes)} nodes at {store.kg_path}")
    return 0


def cmd_kg_fuse(args) -> int:
    store = _store(args)
    if not args.from_clusters:
        print("nothing to fuse: pass --from-clusters", file=sys.stderr)
        return 2
    decisions = store.fuse_from_clusters()
    applied = sum(1 for d in decisions if d["applied"])
    queued = sum(1 for d in decisions if not d["applied"])
    print(f"fused {len(decisions)} subtrees: {applied} applied, {queued} queued for review")
    return 0


def cmd_search_pubs(args) -> int:
    store = _store(args)
    snap = store.snapshot()
    if args.field:
        fields = {}
        for spec in args.field:
            name, _, text = spec.partition("=")
            fields[FieldId(name.upper())] = text
        hits = snap.index.search_fielded(fields, k=args.k)
    else:
        hits = snap.index.search_all_fields(args.query or "", k=args.k)
    for h in hits:
        print(f"{h.score:10.4f}  {h.doc_id}")
    return 0


def _parse_attr(spec: str) -> Predicate:
    name, sep, value = spec.partition("=")
    if not sep:
        return Predicate(attribute_query=name)
    return Predicate(
        attribute_query=name,
        value=ValuePredicate(kind=EQ_NUM, number=float(value)),
    )


def cmd_search_tables(args) -> int:
    store = _store(args)
    snap = store.snapshot()
    query = StructuralQuery(
        predicates=tuple(_parse_attr(a) for a in args.attr),
        scope=args.scope,
        match_threshold_deg=args.threshold,
    )
    hits = snap.table_search.search(query, k=args.k)
    for h in hits:
        bound = ", ".join(
            f"{b.label.raw}[{b.axis}]"
            + (f"={b.matched_literal}" if b.matched_literal is not None else "")
            for b in h.bindings
        )
        print(f"{h.score:10.4f}  {h.table_id}  {bound}")
    return 0


def cmd_metaprofile(args) -> int:
    store = _store(args)
    profile = store.metaprofile(args.cluster)
    if args.json:
        print(json.dumps(profile.to_json(), indent=2, sort_keys=True))
    else:
        for bar in profile.bars:
            print(f"{bar.score:10.4f}  {bar.axis:3}  {bar.label.raw}")
    return 0


def cmd_review_list(args) -> int:
    store = _store(args)
    kg = store.kg()
    for item in kg.pending_reviews():
        d = item.decision
        print(
            f"{item.item_id}  {d.action}  conf={d.confidence:.3f}  "
            f"{d.subtree.root.label!r} <- {d.subtree.source_table_id or 'manual'}"
        )
    return 0


def cmd_review_apply(args) -> int:
    store = _store(args)
    kg = store.kg()
    amended = None
    if args.amended:
        amended = Subtree.from_json(json.loads(Path(args.amended).read_text("utf-8")))
    item = kg.review(args.item, args.verdict, amended_subtree=amended, note=args.note)
    store.save_kg()
    print(f"{item.item_id} -> {item.status}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .api import create_app
    from .watch import IngestWatcher

    store = _store(args)
    store.snapshot()  # fails fast with IndexMissing before binding the port
    static = Path(args.static) if args.static else None
    app = create_app(store, static_dir=static)
    watcher = None
    if args.watch:
        watcher = IngestWatcher(store, Path(args.watch), store.config.fold_interval_s)
        watcher.start()
    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    finally:
        if watcher is not None:
            watcher.stop()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ckg", description=__doc__)
    parser.add_argument("--data-dir", default=None, help="store location (or CKG_DATA_DIR)")
    parser.add_argument("--embeddings", default=None, help="embedding file (or CKG_EMBEDDINGS_FILE)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse corpus records into the store")
    p.add_argument("source", help="directory or file of corpus records")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("index", help="(re)build the search index")
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("cluster", help="form topic clusters from a seed file")
    p.add_argument("--seeds", required=True)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--kind", choices=["angle", "linear"], default="angle")
    p.add_argument("--rng-seed", type=int, default=0)
    p.add_argument("--angle-on", choices=["full", "hmd", "vmd", "data"], default=None,
                   help="composite-vector component measured by angular selection")
    p.set_defaults(func=cmd_cluster)

    kg = sub.add_parser("kg", help="knowledge graph operations")
    kg_sub = kg.add_subparsers(dest="kg_command", required=True)
    p = kg_sub.add_parser("init", help="seed a fresh knowledge graph")
    p.add_argument("--seed", required=True)
    p.set_defaults(func=cmd_kg_init)
    p = kg_sub.add_parser("fuse", help="fuse extracted subtrees into the KG")
    p.add_argument("--from-clusters", action="store_true")
    p.set_defaults(func=cmd_kg_fuse)

    search = sub.add_parser("search", help="query the store")
    search_sub = search.add_subparsers(dest="search_command", required=True)
    p = search_sub.add_parser("pubs", help="publication search")
    p.add_argument("query", nargs="?", default=None)
    p.add_argument("--field", action="append", default=[], help="FIELD=query (engine 1)")
    p.add_argument("-k", type=int, default=20)
    p.set_defaults(func=cmd_search_pubs)
    p = search_sub.add_parser("tables", help="structural table search")
    p.add_argument("--attr", action="append", required=True, help='"label" or "label=number"')
    p.add_argument("--scope", default="ALL_TABLES")
    p.add_argument("--threshold", type=float, default=25.0)
    p.add_argument("-k", type=int, default=20)
    p.set_defaults(func=cmd_search_tables)

    p = sub.add_parser("metaprofile", help="per-cluster attribute profile")
    p.add_argument("cluster")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_metaprofile)

    review = sub.add_parser("review", help="expert review queue")
    review_sub = review.add_subparsers(dest="review_command", required=True)
    p = review_sub.add_parser("list")
    p.set_defaults(func=cmd_review_list)
    p = review_sub.add_parser("apply")
    p.add_argument("item")
    p.add_argument("verdict", choices=["APPROVED", "REJECTED", "AMENDED"])
    p.add_argument("--amended", default=None, help="JSON file with the amended subtree")
    p.add_argument("--note", default="")
    p.set_defaults(func=cmd_review_apply)

    p = sub.add_parser("serve", help="run the REST service")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--watch", default=None, help="ingest watch directory")
    p.add_argument("--static", default=None, help="directory with the web UI build")
    p.add_argument("--llm", default=None, help="'stub' forces the offline LLM")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CkgError as exc:
        print(f"{exc.code}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
