"""On-disk store layout, state file, pending changes and the writer lock."""

from __future__ import annotations

import fcntl
import os
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional

from selertion.errors import StoreError, StoreLockedError
from selertion.fingerprint import Change, ChangeSet

LAYOUT_VERSION = "1"
DEFAULT_STORE = ".selertion"
STORE_ENV = "SELERTION_STORE"


def resolve_store(project_dir: Path, store: Optional[str] = None) -> Path:
    """--store wins, then $SELERTION_STORE, then <project>/.selertion."""
    chosen = store or os.environ.get(STORE_ENV)
    if chosen:
        return Path(chosen)
    return Path(project_dir) / DEFAULT_STORE


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8", newline="\n")
    os.replace(tmp, path)


@dataclass
class StoreState:
    store_dir: Path
    layout_version: str = LAYOUT_VERSION
    last_revision: str = "-"
    collection_current: bool = True
    method_level: bool = False

    def save(self) -> None:
        rows = [
            ("layoutVersion", self.layout_version),
            ("lastAnalyzedRevisionId", self.last_revision),
            ("collectionCurrent", "true" if self.collection_current else "false"),
            ("methodLevel", "true" if self.method_level else "false"),
        ]
        write_atomic(self.store_dir / "state.tsv", "".join(f"{k}\t{v}\n" for k, v in rows))

    @classmethod
    def load(cls, store_dir: Path) -> "StoreState":
        path = Path(store_dir) / "state.tsv"
        if not path.is_file():
            raise StoreError(f"no store at {store_dir}; run init first")
        values = {}
        for line in path.read_text(encoding="utf-8").splitlines():
            key, sep, val = line.partition("\t")
            if not sep:
                raise StoreError(f"{path}: malformed row {line!r}")
            values[key] = val
        version = values.get("layoutVersion")
        if version != LAYOUT_VERSION:
            raise StoreError(f"store layout version {version} is not supported (expected {LAYOUT_VERSION})")
        return cls(Path(store_dir), version, values.get("lastAnalyzedRevisionId", "-"),
                   values.get("collectionCurrent") == "true", values.get("methodLevel") == "true")

    def to_json(self) -> dict:
        return {"store": str(self.store_dir), "layoutVersion": self.layout_version,
                "lastAnalyzedRevisionId": self.last_revision,
                "collectionCurrent": self.collection_current, "methodLevel": self.method_level}


class Layout:
    def __init__(self, store_dir: Path):
        self.root = Path(store_dir)

    checksums = property(lambda self: self.root / "checksums")
    slices = property(lambda self: self.root / "slices")
    deps = property(lambda self: self.root / "deps")
    instrumented = property(lambda self: self.root / "instrumented")
    pending = property(lambda self: self.root / "pending.tsv")

    def selection(self, rev: str) -> Path:
        return self.root / "selection" / f"{rev}.tsv"

    def report(self, rev: str) -> Path:
        return self.root / "reports" / f"{rev}.report.tsv"

    def metrics(self, rev: str) -> Path:
        return self.root / "metrics" / f"{rev}.tsv"


@contextmanager
def store_lock(store_dir: Path) -> Iterator[None]:
    """Exclusive advisory lock; fails fast when another writer holds it."""
    store_dir = Path(store_dir)
    store_dir.mkdir(parents=True, exist_ok=True)
    with open(store_dir / "lock", "a+") as fh:
        try:
            fcntl.flock(fh, fcntl.LOCK_EX | fcntl.LOCK_NB)
        except BlockingIOError:
            raise StoreLockedError(f"store {store_dir} is locked by another run") from None
        try:
            yield
        finally:
            fcntl.flock(fh, fcntl.LOCK_UN)


# ---------------------------------------------------------------- pending δ

def changeset_to_tsv(cs: ChangeSet) -> str:
    rows = [f"{c.level}\t{c.name}\t{c.reason}\t{'test' if c.test else 'prod'}\n" for c in cs.entries]
    for kind, paths in (("added", cs.added_files), ("deleted", cs.deleted_files), ("changed", cs.changed_files)):
        rows += [f"file\t{p}\t{kind}\t-\n" for p in paths]
    return "".join(rows)


def changeset_from_tsv(text: str) -> ChangeSet:
    classes, methods = [], []
    files: dict[str, list[str]] = {"added": [], "deleted": [], "changed": []}
    for line in text.splitlines():
        parts = line.split("\t")
        if len(parts) != 4 or parts[0] not in ("class", "method", "file"):
            raise StoreError(f"malformed pending row {line!r}")
        level, name, reason, part = parts
        if level == "file":
            files[reason].append(name)
            continue
        ch = Change(level, name, reason, part == "test")
        (classes if level == "class" else methods).append(ch)
    return ChangeSet(tuple(classes), tuple(methods), tuple(files["added"]), tuple(files["deleted"]),
                     tuple(files["changed"]))


def load_pending(layout: Layout) -> ChangeSet:
    if not layout.pending.is_file():
        return ChangeSet()
    return changeset_from_tsv(layout.pending.read_text(encoding="utf-8"))


def save_pending(layout: Layout, cs: ChangeSet) -> None:
    write_atomic(layout.pending, changeset_to_tsv(cs))
