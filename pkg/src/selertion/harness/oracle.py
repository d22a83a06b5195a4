"""Brute-force oracles used to check selection safety.

Everything here runs the complete suite and traces every test method on its
own, so it shares no dependency data with the selection pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import wraps
from pathlib import Path
from typing import Union

from selertion.fingerprint import ChangeSet, ChecksumStore, compute_changes, declaring_class
from selertion.frontend.project import Project, enumerate_tests
from selertion.hashing import short_digest
from selertion.instrument import instrument_file
from selertion.runtime.deps import Tracer
from selertion.runtime.runner import execute_tests
from selertion.selection import SelectionResult, rewrite_tests, rewritten_tree
from selertion.slicer import compute_slices

Revision = Union[Project, dict, str, Path]


def as_project(rev: Revision) -> Project:
    if isinstance(rev, Project):
        return rev
    if isinstance(rev, dict):
        return Project.from_tree(rev)
    return Project.load(rev)


def _tree(project: Project) -> dict[str, str]:
    return {f.path: f.text for f in project.files}


_CACHE: dict[tuple[str, str], object] = {}
_CACHE_SIZE = 64


def _per_revision(fn):
    """Memoize a pure function of a project's exact source text."""

    @wraps(fn)
    def wrapper(project: Project):
        key = (fn.__name__, short_digest("".join(f"{f.path}\0{f.text}\0" for f in project.files)))
        if key not in _CACHE:
            if len(_CACHE) >= _CACHE_SIZE:
                _CACHE.pop(next(iter(_CACHE)))
            _CACHE[key] = fn(project)
        return _CACHE[key]

    return wrapper


@_per_revision
def outcome_statuses(project: Project) -> dict[str, str]:
    return {o.entity: o.status for o in execute_tests(project).outcomes}


def outcome_diff(v1: Project, v2: Project) -> set[str]:
    """Test methods (``M=`` of the running class) with any differing outcome."""
    a, b = outcome_statuses(v1), outcome_statuses(v2)
    return {ent.split("[", 1)[0] for ent in set(a) | set(b) if a.get(ent) != b.get(ent)}


@_per_revision
def method_traces(project: Project) -> dict[str, set[str]]:
    """Every signature each test method reaches, setup and static init included."""
    tree = {f.path: instrument_file(f, {}) for f in project.files}
    tracer = Tracer()
    execute_tests(Project.from_tree(tree), tracer=tracer, method_scopes=True)
    out: dict[str, set[str]] = {}
    for ent, sigs in tracer.records.items():
        cls = ent[2:].split("#", 1)[0]
        out[ent] = set(sigs) | tracer.setup.get(cls, set())
    return out


def _touches(sigs: set[str], changes: ChangeSet) -> bool:
    for ch in changes.entries:
        if ch.level == "method" and ch.name in sigs:
            return True
        if ch.level == "class" and any(declaring_class(s) == ch.name for s in sigs):
            return True
    return False


@dataclass
class OracleReport:
    changes: ChangeSet
    outcome_diff: set[str] = field(default_factory=set)
    trace_hits: set[str] = field(default_factory=set)

    @property
    def affected(self) -> set[str]:
        return self.outcome_diff | self.trace_hits


def oracle_report(v1: Revision, v2: Revision) -> OracleReport:
    p1, p2 = as_project(v1), as_project(v2)
    changes = compute_changes(ChecksumStore.from_project(p1), p2)
    report = OracleReport(changes)
    if changes.is_empty():
        return report
    report.outcome_diff = outcome_diff(p1, p2)
    for traces in (method_traces(p1), method_traces(p2)):
        report.trace_hits |= {ent for ent, sigs in traces.items() if _touches(sigs, changes)}
    return report


def oracle_affected_entities(v1: Revision, v2: Revision) -> set[str]:
    """Test methods whose outcome differs between the revisions, plus those
    whose full trace in either revision reaches a changed signature."""
    return oracle_report(v1, v2).affected


@_per_revision
def slice_statuses(project: Project) -> dict[str, str]:
    """Outcome of every assertion slice when each runs as its own test."""
    inv = enumerate_tests(project)
    slices = compute_slices(project, inv)
    result = SelectionResult(gamma_a={s.entity: s for s in slices.all()})
    tree = rewritten_tree(_tree(project), rewrite_tests(result, project))
    by_name = {f"M={s.class_fq}#{s.generated_name}({s.method_sig.split('(', 1)[1]}": s.entity
               for s in slices.all()}
    out = {}
    for o in execute_tests(Project.from_tree(tree)).outcomes:
        ent = by_name.get(o.method_entity)
        if ent is not None:
            out[ent] = o.status
    return out


def changed_slices(v1: Revision, v2: Revision) -> set[str]:
    """Slice entities whose standalone outcome differs between the revisions."""
    a, b = slice_statuses(as_project(v1)), slice_statuses(as_project(v2))
    return {ent for ent in set(a) | set(b) if a.get(ent) != b.get(ent)}
