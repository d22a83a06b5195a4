"""In-memory analysis, collection and execution steps shared by the CLI and
the evaluation harness."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

from selertion.fingerprint import ChangeSet, ChecksumStore, compute_changes
from selertion.frontend.project import Project, TestInventory, enumerate_tests
from selertion.harness.metrics import Metrics, compute_metrics
from selertion.instrument import instrument_file
from selertion.runtime.deps import DependencyDB, collect_dependencies
from selertion.runtime.runner import TestReport, execute_tests
from selertion.selection import SelectionResult, rewrite_tests, rewritten_tree, select_tests
from selertion.slicer import (ASSERTION_LEVEL, METHOD_LEVEL, SelectionLevel, SliceStore, class_levels,
                              compute_slices, update_slices)

FORCED = SelectionLevel(METHOD_LEVEL, "forcedMethodLevel")


def downgrade_levels(levels: dict[str, SelectionLevel]) -> dict[str, SelectionLevel]:
    """Levels with every assertion-level entry forced to method level."""
    return {k: (FORCED if v.level == ASSERTION_LEVEL else v) for k, v in levels.items()}


def analyze_levels(project: Project, method_level: bool = False) -> tuple[TestInventory, dict[str, SelectionLevel]]:
    inv = enumerate_tests(project)
    levels = class_levels(inv)
    return inv, downgrade_levels(levels) if method_level else levels


def instrumented_tree(project: Project, levels: dict[str, SelectionLevel], debug: bool = False) -> dict[str, str]:
    return {f.path: instrument_file(f, levels, debug) for f in project.files}


def copy_slices(store: SliceStore) -> SliceStore:
    return SliceStore({fq: list(items) for fq, items in store.slices.items()})


def stale_test_classes(changes: ChangeSet, project: Project) -> set[str]:
    """Test classes declared in files that changed since the last collection."""
    paths = set(changes.changed_paths)
    return {c.fq_name for c in project.test_classes() if project.class_file.get(c.fq_name) in paths}


@dataclass
class Snapshot:
    """Everything persisted about one analyzed and collected revision."""

    project: Project
    inventory: TestInventory
    levels: dict[str, SelectionLevel]
    slices: SliceStore
    db: DependencyDB
    checksums: ChecksumStore
    method_level: bool = False
    report: Optional[TestReport] = None


def snapshot(project: Project, method_level: bool = False) -> Snapshot:
    """Analyze ``project`` from scratch and collect its dependencies."""
    inv, levels = analyze_levels(project, method_level)
    slices = SliceStore({}) if method_level else compute_slices(project, inv)
    instrumented = Project.from_tree(instrumented_tree(project, levels))
    db, report = collect_dependencies(instrumented, original=project)
    return Snapshot(project, inv, levels, slices, db, ChecksumStore.from_project(project), method_level, report)


@dataclass
class Analysis:
    changes: ChangeSet
    result: SelectionResult
    inventory: TestInventory
    levels: dict[str, SelectionLevel]
    slices: SliceStore
    metrics: Metrics
    resliced: set[str] = field(default_factory=set)


def analyze(old_sums: Optional[ChecksumStore], slices: SliceStore, db: DependencyDB, project: Project,
            method_level: bool = False, pending: Optional[ChangeSet] = None,
            collection_current: bool = True) -> Analysis:
    """Change computation, slice update and selection for ``project``.

    ``pending`` holds changes analyzed earlier but not yet reflected in
    ``db``; when ``collection_current`` is false, test classes whose files
    changed since the last collection are selected whole.
    """
    started = time.perf_counter()
    changes = compute_changes(old_sums, project)
    # the dependency data predates pending changes, so they are replayed
    # whenever anything changed again
    since_collection = changes
    if pending is not None and not changes.is_empty():
        since_collection = changes.merge(pending)
    inv, levels = analyze_levels(project, method_level)
    old_slices, slices = slices, copy_slices(slices)
    resliced: set[str] = set()
    if not method_level:
        resliced = update_slices(slices, project, inv, {c.owner for c in changes.tests})
    stale = set()
    if not collection_current and not changes.is_empty():
        stale = stale_test_classes(since_collection, project)
    if old_sums is None:
        # initial run: everything is new, nothing has dependencies yet
        result = SelectionResult(gamma_c={c.fq_name for c in project.test_classes()})
    else:
        result = select_tests(slices, db, since_collection, project, levels, stale, old_slices)
    millis = (time.perf_counter() - started) * 1000.0
    metrics = compute_metrics(result, inv, slices, project, analysis_millis=millis)
    return Analysis(changes, result, inv, levels, slices, metrics, resliced)


def execute_selection(result: SelectionResult, project: Project) -> TestReport:
    """Run exactly the selection on an in-memory rewrite of the tests."""
    if result.is_empty():
        return TestReport()
    tree = {f.path: f.text for f in project.files}
    rewritten = Project.from_tree(rewritten_tree(tree, rewrite_tests(result, project)))
    return execute_tests(rewritten)


def analyze_against(base: Snapshot, project: Project) -> Analysis:
    return analyze(base.checksums, base.slices, base.db, project, base.method_level)
