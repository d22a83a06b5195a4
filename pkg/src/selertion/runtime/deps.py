"""Dependency collection: trace sink, dependency database and its files."""

from __future__ import annotations

import os
import shutil
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from selertion.errors import InstrumentationError, StoreError
from selertion.frontend.project import Project
from selertion.runtime.runner import PASS, TestReport, execute_tests

LEVEL_OF_PREFIX = {"S": "assertion", "M": "method", "C": "class"}


def entity_class(entity: str) -> str:
    """Test class named by an entity id (``S=``/``M=``/``C=``)."""
    body = entity.split("=", 1)[1]
    return body.split("#", 1)[0]


def entity_method(entity: str) -> Optional[str]:
    body = entity.split("=", 1)[1]
    if "#" not in body:
        return None
    return body.split("#", 1)[1].split("@", 1)[0].split("[", 1)[0]


def entity_ordinal(entity: str) -> Optional[int]:
    if not entity.startswith("S=") or "@" not in entity:
        return None
    return int(entity.rsplit("@", 1)[1])


class Tracer:
    """Receives trace events from the interpreter.

    Invoked signatures go to every open scope; outside any scope they go to
    the setup set of the running test class, which is later folded into
    every entity of that class. Static initializers are recorded once per
    class run, so their callees are replayed on later static accesses.
    """

    def __init__(self):
        self.stack: list[str] = []
        self.records: dict[str, set[str]] = {}
        self.setup: dict[str, set[str]] = defaultdict(set)
        self.current_class: Optional[str] = None
        self.clinit: dict[str, set[str]] = {}
        self._captures: list[tuple[str, set[str]]] = []

    def open(self, entity: str) -> None:
        self.stack.append(entity)
        self.records.setdefault(entity, set())

    def close(self, entity: str) -> None:
        if not self.stack or self.stack[-1] != entity:
            top = self.stack[-1] if self.stack else "nothing"
            raise InstrumentationError(f"unbalanced trace markers: closing {entity}, open is {top}")
        self.stack.pop()

    def enter(self, signature: str) -> None:
        for _, sink in self._captures:
            sink.add(signature)
        if self.stack:
            for ent in self.stack:
                self.records[ent].add(signature)
        elif self.current_class is not None:
            self.setup[self.current_class].add(signature)

    def begin_capture(self, class_fq: str) -> bool:
        self._captures.append((class_fq, set()))
        return True

    def end_capture(self, class_fq: str) -> None:
        fq, sink = self._captures.pop()
        self.clinit[fq] = sink

    def static_access(self, class_fq: str) -> None:
        self.enter(f"{class_fq}.<clinit>()")
        for sig in sorted(self.clinit.get(class_fq, ())):
            self.enter(sig)

    def check_balanced(self) -> None:
        if self.stack:
            raise InstrumentationError(f"trace scopes left open: {', '.join(self.stack)}")


@dataclass
class DependencyDB:
    deps: dict[str, frozenset[str]] = field(default_factory=dict)
    hashes: dict[str, str] = field(default_factory=dict)  # S= entity -> statement content hash
    unstable: set[str] = field(default_factory=set)  # M= entities that did not pass during collection

    def level(self, entity: str) -> str:
        return LEVEL_OF_PREFIX[entity[0]]

    def entities_with(self, signatures) -> set[str]:
        wanted = set(signatures)
        return {e for e, sigs in self.deps.items() if sigs & wanted}

    def save(self, directory: Path) -> None:
        """Write one .dep file per entity plus an index, replacing the directory atomically."""
        directory = Path(directory)
        tmp = directory.with_name(directory.name + ".tmp")
        if tmp.exists():
            shutil.rmtree(tmp)
        tmp.mkdir(parents=True)
        rows = []
        for ent in sorted(self.deps):
            (tmp / f"{ent}.dep").write_text("".join(s + "\n" for s in sorted(self.deps[ent])),
                                            encoding="utf-8", newline="\n")
            rows.append(f"{ent}\t{self.level(ent)}\t{self.hashes.get(ent, '-')}\n")
        (tmp / "index.tsv").write_text("".join(rows), encoding="utf-8", newline="\n")
        (tmp / "unstable.tsv").write_text("".join(e + "\n" for e in sorted(self.unstable)),
                                          encoding="utf-8", newline="\n")
        replace_dir(tmp, directory)

    @classmethod
    def load(cls, directory: Path) -> "DependencyDB":
        directory = Path(directory)
        index = directory / "index.tsv"
        if not index.is_file():
            raise StoreError(f"no dependency index at {directory}")
        db = cls()
        for line in index.read_text(encoding="utf-8").splitlines():
            parts = line.split("\t")
            if len(parts) != 3:
                raise StoreError(f"{index}: malformed row {line!r}")
            ent, _, h = parts
            path = directory / f"{ent}.dep"
            try:
                sigs = path.read_text(encoding="utf-8").splitlines()
            except OSError as exc:
                raise StoreError(f"missing dependency file {path.name}") from exc
            db.deps[ent] = frozenset(s for s in sigs if s)
            if h != "-":
                db.hashes[ent] = h
        unstable = directory / "unstable.tsv"
        if unstable.is_file():
            db.unstable = {e for e in unstable.read_text(encoding="utf-8").splitlines() if e}
        return db


def replace_dir(new: Path, target: Path) -> None:
    """Swap ``new`` into place of ``target`` with renames only."""
    old = target.with_name(target.name + ".old")
    if old.exists():
        shutil.rmtree(old)
    if target.exists():
        os.replace(target, old)
    os.replace(new, target)
    if old.exists():
        shutil.rmtree(old)


def statement_hashes(project: Project) -> dict[str, str]:
    out = {}
    for c in project.all_classes():
        for m in c.methods:
            for st in m.body:
                out[st.id.entity] = st.id.content_hash
    return out


def collect_dependencies(instrumented: Union[Project, str, Path], original: Optional[Project] = None
                         ) -> tuple[DependencyDB, TestReport]:
    """Run the instrumented suite and fold its trace into a DependencyDB.

    ``original`` supplies statement content hashes; without it they are left
    out and staleness checks fall back to ordinals only.
    """
    project = instrumented if isinstance(instrumented, Project) else Project.load(instrumented)
    tracer = Tracer()
    report = execute_tests(project, tracer=tracer)
    tracer.check_balanced()
    db = DependencyDB()
    hashes = statement_hashes(original) if original is not None else {}
    for ent, sigs in tracer.records.items():
        setup = tracer.setup.get(entity_class(ent), set())
        db.deps[ent] = frozenset(sigs | setup)
        if ent in hashes:
            db.hashes[ent] = hashes[ent]
    db.unstable = {o.method_entity for o in report.outcomes if o.status != PASS}
    return db, report
