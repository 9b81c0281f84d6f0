"""Polling ingest watcher: the simulated feed of newly published knowledge.

Files dropped into the watch directory are parsed into the pending segment;
malformed files move to quarantine with an error report instead of crashing
the loop. A periodic fold rebuilds the index atomically and runs extracted
subtrees through fusion so new tables reach the KG and the review queue.
"""

from __future__ import annotations

import json
import threading
import time
import traceback
from pathlib import Path
from typing import Optional

from .corpus import load_records
from .errors import CkgError
from .store import Store


class IngestWatcher:
    def __init__(self, store: Store, watch_dir: Path, fold_interval_s: float = 10.0):
        self.store = store
        self.watch_dir = Path(watch_dir)
        self.fold_interval_s = fold_interval_s
        self._stop = threading.Event()
        self._thread: Optional[threading.Thread] = None
        self._seen: set[str] = set()
        self._dirty = False

    def scan_once(self) -> int:
        """Ingest new files; returns how many records were accepted."""
        self.watch_dir.mkdir(parents=True, exist_ok=True)
        accepted = 0
        for path in sorted(self.watch_dir.glob("*.json*")):
            if path.name in self._seen:
                continue
            self._seen.add(path.name)
            try:
                for record in load_records(path):
                    self.store.ingest_record(record, pending=True)
                    accepted += 1
                path.unlink()
                self._dirty = True
            except (CkgError, json.JSONDecodeError, KeyError, ValueError) as exc:
                self.store.quarantine_dir.mkdir(parents=True, exist_ok=True)
                target = self.store.quarantine_dir / path.name
                path.replace(target)
                report = target.with_suffix(target.suffix + ".error.txt")
                report.write_text(
                    f"{type(exc).__name__}: {exc}\n{traceback.format_exc()}",
                    encoding="utf-8",
                )
        return accepted

    def fold_if_dirty(self) -> bool:
        """Fold pending docs into the live index and fuse their subtrees."""
        if not self._dirty:
            return False
        self._dirty = False
        before = {t.table_id for t in self.store.snapshot().tables} if self.store.current_index_path() else set()
        self.store.fold()
        snap = self.store.snapshot(rebuild=True)
        if self.store.kg_path.exists():
            new_tables = [t for t in snap.tables if t.table_id not in before]
            kg = self.store.kg()
            for subtree in self.store.extract_subtrees(new_tables):
                kg.fuse_subtree(subtree, snap.provider, self.store.config.synonym_threshold_deg)
            self.store.save_kg()
        return True

    def run_forever(self) -> None:
        while not self._stop.is_set():
            try:
                self.scan_once()
                self.fold_if_dirty()
            except Exception:
                # the watcher must outlive individual failures
                traceback.print_exc()
            self._stop.wait(self.fold_interval_s)

    def start(self) -> None:
        self._thread = threading.Thread(target=self.run_forever, daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=5)
