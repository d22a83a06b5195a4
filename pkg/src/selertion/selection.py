"""Multi-level test selection, test rewriting and restoration."""

from __future__ import annotations

import os
import shutil
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from selertion.errors import SelectionError, StoreError
from selertion.fingerprint import Change, ChangeSet, declaring_class
from selertion.frontend import ast as A
from selertion.frontend.model import ClassModel
from selertion.frontend.printer import file_to_str
from selertion.frontend.project import Project
from selertion.runtime.deps import DependencyDB, entity_class, entity_method, entity_ordinal
from selertion.slicer import CLASS_LEVEL, AssertionSlice, SelectionLevel, SliceStore


def retrieve_test_entities(db: DependencyDB, change: Change, project: Optional[Project] = None) -> set[str]:
    """Test entities whose recorded dependencies intersect one change entry.

    A class-level change matches any signature declared in the class or, when
    ``project`` is given, in one of its subclasses.
    """
    if change.level == "method":
        return {e for e, sigs in db.deps.items() if change.name in sigs}
    owners = {change.name}
    if project is not None and project.by_fq(change.name) is not None:
        owners |= project.subclasses(change.name)
    out = set()
    for e, sigs in db.deps.items():
        if any(declaring_class(s) in owners for s in sigs):
            out.add(e)
    return out


@dataclass
class SelectionResult:
    gamma_a: dict[str, AssertionSlice] = field(default_factory=dict)  # slice entity -> slice
    gamma_m: set[str] = field(default_factory=set)  # M= entities
    gamma_c: set[str] = field(default_factory=set)  # class fq names
    changed_tests: set[str] = field(default_factory=set)
    triggers: dict[tuple[str, str], set[str]] = field(default_factory=dict)

    def is_empty(self) -> bool:
        return not (self.gamma_a or self.gamma_m or self.gamma_c)

    def note(self, level: str, entity: str, trigger: str) -> None:
        self.triggers.setdefault((level, entity), set()).add(trigger)

    def manifest_rows(self) -> list[tuple[str, str, str]]:
        rows = []
        for ent in sorted(self.gamma_c):
            rows.append(("C", f"C={ent}", _trigger_text(self.triggers.get(("C", ent)))))
        for ent in sorted(self.gamma_m):
            rows.append(("M", ent, _trigger_text(self.triggers.get(("M", ent)))))
        for ent in sorted(self.gamma_a):
            rows.append(("A", ent, _trigger_text(self.triggers.get(("A", ent)))))
        return rows

    def to_tsv(self) -> str:
        return "".join(f"{lv}\t{ent}\t{trig}\n" for lv, ent, trig in self.manifest_rows())

    def selected_slices(self) -> list[AssertionSlice]:
        return sorted(self.gamma_a.values(), key=lambda s: (s.class_fq, s.method_sig, s.assertion))


def _trigger_text(triggers: Optional[set[str]]) -> str:
    return ",".join(sorted(triggers)) if triggers else "-"


class _Selector:
    def __init__(self, slices: SliceStore, project: Project, levels: dict[str, SelectionLevel],
                 old_slices: Optional[SliceStore] = None):
        self.slices = slices
        self.old_slices = old_slices
        self.project = project
        self.levels = levels
        self.result = SelectionResult()

    def class_level(self, fq: str) -> bool:
        lv = self.levels.get(f"C={fq}")
        return lv is not None and lv.level == CLASS_LEVEL

    def runnable(self, fq: str) -> Optional[ClassModel]:
        cls = self.project.by_fq(fq)
        if cls is None or not self.project.is_test_class(cls):
            return None
        return cls

    def add_class(self, fq: str, trigger: str, with_subclasses: bool = False) -> None:
        targets = [fq]
        if with_subclasses:
            targets += sorted(self.project.subclasses(fq))
        for t in targets:
            if self.runnable(t) is not None:
                self.result.gamma_c.add(t)
                self.result.note("C", t, trigger)

    def add_method(self, fq: str, sig: str, trigger: str) -> None:
        cls = self.runnable(fq)
        if cls is None:
            return
        if self.class_level(fq):
            self.add_class(fq, trigger)
            return
        if not any(m.short_sig == sig for m in self.project.runnable_tests(cls)):
            return
        ent = f"M={fq}#{sig}"
        self.result.gamma_m.add(ent)
        self.result.note("M", ent, trigger)

    def add_entity(self, entity: str, trigger: str, db: DependencyDB) -> None:
        fq = entity_class(entity)
        if entity.startswith("C="):
            self.add_class(fq, trigger)
            return
        sig = entity_method(entity)
        if entity.startswith("M="):
            self.add_method(fq, sig, trigger)
            return
        # statement entity
        if self.class_level(fq) or not self.slices.has_method(fq, sig):
            self.add_method(fq, sig, trigger)
            return
        ordinal = entity_ordinal(entity)
        cls = self.project.by_fq(fq)
        method = cls.method(sig) if cls is not None else None
        if method is None:
            return
        stale = ordinal >= len(method.body) or (
            entity in db.hashes and db.hashes[entity] != method.body[ordinal].id.content_hash)
        hits = [] if stale else self.slice_hits(fq, sig, ordinal)
        if not hits:
            # stale ordinal, or a statement no assertion depends on
            self.add_method(fq, sig, trigger if not stale else f"{trigger}+stale")
            return
        for s in hits:
            self.result.gamma_a[s.entity] = s
            self.result.note("A", s.entity, trigger)

    def slice_hits(self, fq: str, sig: str, ordinal: int) -> list[AssertionSlice]:
        """Current slices reached by a statement. The dependency data was
        recorded under the old slice boundaries, which a production edit can
        move (a callee turning pure), so a statement inside the old slice of
        an assertion still selects that assertion."""
        hits = {s.entity: s for s in self.slices.containing(fq, sig, ordinal)}
        if self.old_slices is not None:
            current = {s.entity: s for s in self.slices.for_method(fq, sig)}
            for s in self.old_slices.containing(fq, sig, ordinal):
                if s.entity in current:
                    hits.setdefault(s.entity, current[s.entity])
        return [hits[k] for k in sorted(hits)]

    def add_test_change(self, change: Change) -> bool:
        """Direct selection of a test-code change; False when it must go through
        dependency retrieval instead."""
        trigger = f"test:{change.name}"
        if change.level == "class":
            if change.reason == "deleted":
                return True
            self.add_class(change.name, trigger, with_subclasses=True)
            return True
        if change.reason == "deleted":
            return True  # purged from the stores, nothing left to run
        if change.reason == "lookup":
            return False
        fq = change.owner
        cls = self.project.by_fq(fq)
        sig = change.name[len(fq) + 1:]
        method = cls.method(sig) if cls is not None else None
        if method is None or not method.is_test:
            return False
        if self.class_level(fq):
            self.add_class(fq, trigger, with_subclasses=True)
        else:
            self.add_method(fq, sig, trigger)
        self.result.changed_tests.add(f"M={fq}#{sig}")
        return True

    def finish(self) -> SelectionResult:
        r = self.result
        r.gamma_m = {m for m in r.gamma_m if entity_class(m) not in r.gamma_c}
        r.gamma_a = {
            k: s for k, s in r.gamma_a.items()
            if s.class_fq not in r.gamma_c and s.method_entity not in r.gamma_m
        }
        return r


def select_tests(slices: SliceStore, db: DependencyDB, changes: ChangeSet, project: Project,
                 levels: dict[str, SelectionLevel], stale_classes: Iterable[str] = (),
                 old_slices: Optional[SliceStore] = None) -> SelectionResult:
    """Map a change set through the dependency database to selected entities.

    ``stale_classes`` are test classes whose files changed since dependencies
    were last collected; they are selected whole. ``old_slices`` are the
    slices the dependency data was collected with, when they differ.
    """
    sel = _Selector(slices, project, levels, old_slices)
    for ch in changes.tests:
        if sel.add_test_change(ch):
            continue
        for ent in sorted(retrieve_test_entities(db, ch, project)):
            sel.add_entity(ent, ch.name, db)
    for ch in changes.production:
        for ent in sorted(retrieve_test_entities(db, ch, project)):
            sel.add_entity(ent, ch.name, db)
    for fq in stale_classes:
        sel.add_class(fq, "staleCollection")
    if changes.entries:
        for ent in sorted(db.unstable):
            sel.add_method(entity_class(ent), entity_method(ent), "unstableCollection")
    return sel.finish()


# -------------------------------------------------------------------- rewrite

def _with_ignore(decl: A.ClassDecl) -> A.ClassDecl:
    if decl.annotation("Ignore") is not None:
        return decl
    return A.ClassDecl(decl.annotations + (A.Annotation("Ignore"),), decl.kind, decl.name,
                       decl.superclass, decl.members)


def _slice_method(decl: A.MethodDecl, s: AssertionSlice) -> A.MethodDecl:
    if s.statements[-1] != s.assertion or any(i >= len(decl.body) for i in s.statements):
        raise SelectionError(f"slice {s.entity} does not match {decl.name}")
    body = tuple(decl.body[i] for i in s.statements)
    return A.MethodDecl(decl.annotations, decl.static, decl.ret_type, s.generated_name, decl.params, body)


def _rewrite_class(decl: A.ClassDecl, fq: str, result: SelectionResult) -> A.ClassDecl:
    members = []
    by_method: dict[str, list[AssertionSlice]] = {}
    for s in result.selected_slices():
        if s.class_fq == fq:
            by_method.setdefault(s.method_sig, []).append(s)
    for m in decl.members:
        if not isinstance(m, A.MethodDecl) or m.annotation("Test") is None:
            members.append(m)
            continue
        sig = f"{m.name}({','.join(p.type for p in m.params)})"
        if f"M={fq}#{sig}" in result.gamma_m:
            members.append(m)
        for s in sorted(by_method.get(sig, []), key=lambda x: x.index):
            members.append(_slice_method(m, s))
    return A.ClassDecl(decl.annotations, decl.kind, decl.name, decl.superclass, tuple(members))


def rewrite_tests(result: SelectionResult, project: Project) -> dict[str, str]:
    """New text for every test file that differs from the original ("" = remove)."""
    if result.is_empty():
        return {}
    touched = set(result.gamma_c) | {entity_class(m) for m in result.gamma_m} | {
        s.class_fq for s in result.gamma_a.values()}
    needed: set[str] = set()
    for fq in touched:
        cls = project.by_fq(fq)
        if cls is not None:
            needed |= {a.fq_name for a in project.ancestors(cls)}
    out = {}
    for f in project.files:
        if not f.is_test:
            continue
        classes = []
        for decl in f.ast.classes:
            fq = decl.name
            cls = project.by_fq(fq)
            if cls is None or not project.is_test_class(cls):
                classes.append(decl)
            elif fq in result.gamma_c:
                classes.append(decl)
            elif fq in touched:
                classes.append(_rewrite_class(decl, fq, result))
            elif fq in needed:
                classes.append(_with_ignore(decl))
        text = file_to_str(A.FileAST(tuple(classes)))
        if text != f.text:
            out[f.path] = text
    return out


def rewritten_tree(project_tree: dict[str, str], rewritten: dict[str, str]) -> dict[str, str]:
    """Source tree with the rewritten tests applied; emptied files are dropped."""
    tree = dict(project_tree)
    for path, text in rewritten.items():
        if text:
            tree[path] = text
        else:
            tree.pop(path, None)
    return tree


# --------------------------------------------------------------- apply/restore

ACTIVE_MARKER = "active.tsv"


def apply_rewrite(project_dir: Path, store_dir: Path, rewritten: dict[str, str], revision: str) -> None:
    """Back up tests/ and write the rewritten files in place."""
    project_dir, store_dir = Path(project_dir), Path(store_dir)
    backup = store_dir / "backup"
    if (backup / ACTIVE_MARKER).exists():
        raise StoreError("a rewrite is already active; restore first")
    if backup.exists():
        shutil.rmtree(backup)
    backup.mkdir(parents=True)
    tests = project_dir / "tests"
    if tests.exists():
        shutil.copytree(tests, backup / "tests")
    (backup / ACTIVE_MARKER).write_text(f"{revision}\n", encoding="utf-8")
    for path, text in sorted(rewritten.items()):
        target = project_dir / path
        if text:
            tmp = target.with_name(target.name + ".tmp")
            tmp.write_text(text, encoding="utf-8", newline="\n")
            os.replace(tmp, target)
        elif target.exists():
            target.unlink()


def restore_tests(project_dir: Path, store_dir: Path) -> Optional[str]:
    """Put the original tests back; the rewritten tree is kept under
    rewritten/<revision>/. Returns the restored revision, or None when no
    rewrite was active."""
    project_dir, store_dir = Path(project_dir), Path(store_dir)
    backup = store_dir / "backup"
    marker = backup / ACTIVE_MARKER
    if not marker.exists():
        return None
    revision = marker.read_text(encoding="utf-8").strip()
    keep = store_dir / "rewritten" / revision
    if keep.exists():
        shutil.rmtree(keep)
    keep.mkdir(parents=True)
    tests = project_dir / "tests"
    if tests.exists():
        shutil.copytree(tests, keep / "tests")
        shutil.rmtree(tests)
    if (backup / "tests").exists():
        shutil.copytree(backup / "tests", tests)
    marker.unlink()
    shutil.rmtree(backup)
    return revision
