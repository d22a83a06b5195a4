"""The driver commands: init, run (analyze + select + execute), collect,
retestall, mutate, report and oracle."""

from __future__ import annotations

import shutil
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from selertion.driver.pipeline import analyze, analyze_levels
from selertion.driver.store import (Layout, StoreState, load_pending, resolve_store, save_pending, store_lock,
                                    write_atomic)
from selertion.errors import StoreError
from selertion.fingerprint import ChangeSet, ChecksumStore, compute_changes
from selertion.frontend.project import Project
from selertion.harness.metrics import Metrics, compute_metrics
from selertion.harness.mutants import MutatedRevision, generate_mutant
from selertion.harness.oracle import OracleReport, oracle_report
from selertion.instrument import instrument_project, sync_instrumented_copy
from selertion.runtime.deps import DependencyDB, collect_dependencies
from selertion.runtime.runner import TestReport, execute_tests
from selertion.selection import SelectionResult, apply_rewrite, restore_tests, rewrite_tests
from selertion.slicer import SliceStore, compute_slices


@dataclass
class RunResult:
    revision: str
    state: StoreState
    selection: SelectionResult
    changes: ChangeSet
    report: TestReport
    metrics: Metrics
    reinstrumented: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {
            "revision": self.revision,
            "state": self.state.to_json(),
            "changes": [f"{c.level}:{c.reason}:{c.name}" for c in self.changes.entries],
            "selection": [{"level": lv, "entity": ent, "trigger": trig}
                          for lv, ent, trig in self.selection.manifest_rows()],
            "metrics": self.metrics.to_dict(),
            "report": self.report.to_json(),
            "reinstrumented": list(self.reinstrumented),
        }


def _write_outputs(layout: Layout, rev: str, selection: SelectionResult, report: TestReport,
                   metrics: Metrics) -> None:
    write_atomic(layout.selection(rev), selection.to_tsv())
    write_atomic(layout.report(rev), report.to_tsv())
    write_atomic(layout.metrics(rev), metrics.to_tsv())


def _collect(project: Project, layout: Layout) -> DependencyDB:
    db, _ = collect_dependencies(layout.instrumented, original=project)
    db.save(layout.deps)
    return db


def cmd_init(project_dir, store: Optional[str] = None, force: bool = False,
             method_level: bool = False) -> RunResult:
    """Analyze a project from scratch, collect dependencies and run every test once."""
    project_dir = Path(project_dir)
    store_dir = resolve_store(project_dir, store)
    layout = Layout(store_dir)
    if (store_dir / "state.tsv").exists() and not force:
        raise StoreError(f"store already exists at {store_dir}; use --force to rebuild it")
    project = Project.load(project_dir)
    with store_lock(store_dir):
        for sub in ("checksums", "slices", "deps", "instrumented", "backup", "pending.tsv", "state.tsv"):
            target = store_dir / sub
            if target.is_dir():
                shutil.rmtree(target)
            elif target.exists():
                target.unlink()
        started = time.perf_counter()
        inv, levels = analyze_levels(project, method_level)
        slices = SliceStore({}) if method_level else compute_slices(project, inv)
        sums = ChecksumStore.from_project(project)
        analysis_millis = (time.perf_counter() - started) * 1000.0
        instrument_project(project, levels, layout.instrumented)
        _collect(project, layout)
        started = time.perf_counter()
        report = execute_tests(project)
        exec_millis = (time.perf_counter() - started) * 1000.0
        selection = SelectionResult(gamma_c={c.fq_name for c in project.test_classes()})
        for fq in selection.gamma_c:
            selection.note("C", fq, "initialRun")
        metrics = compute_metrics(selection, inv, slices, project, analysis_millis, exec_millis)
        sums.save(layout.checksums)
        slices.save(layout.slices)
        save_pending(layout, ChangeSet())
        rev = sums.revision_id
        _write_outputs(layout, rev, selection, report, metrics)
        state = StoreState(store_dir, last_revision=rev, collection_current=True, method_level=method_level)
        state.save()
    return RunResult(rev, state, selection, compute_changes(None, project), report, metrics)


def cmd_analyze_and_run(project_dir, store: Optional[str] = None, collect: bool = False,
                        method_level: Optional[bool] = None) -> RunResult:
    """Select the tests affected since the last analyzed revision and run
    exactly them on rewritten test classes, then restore the originals."""
    project_dir = Path(project_dir)
    store_dir = resolve_store(project_dir, store)
    layout = Layout(store_dir)
    with store_lock(store_dir):
        state = StoreState.load(store_dir)
        restore_tests(project_dir, store_dir)  # leftover of an interrupted run
        if method_level is not None and method_level != state.method_level:
            raise StoreError("store was initialized at another granularity; rerun init with --force")
        project = Project.load(project_dir)
        old = ChecksumStore.load(layout.checksums)
        slices = SliceStore.load(layout.slices, project)
        db = DependencyDB.load(layout.deps)
        pending = load_pending(layout)
        analysis = analyze(old, slices, db, project, state.method_level, pending, state.collection_current)
        rev = ChecksumStore.from_project(project).revision_id
        rewritten = rewrite_tests(analysis.result, project)
        report = TestReport()
        started = time.perf_counter()
        if not analysis.result.is_empty():
            apply_rewrite(project_dir, store_dir, rewritten, rev)
            try:
                report = execute_tests(project_dir)
            finally:
                restore_tests(project_dir, store_dir)
        exec_millis = (time.perf_counter() - started) * 1000.0
        m = analysis.metrics
        metrics = Metrics(m.selected_tests, m.total_tests, m.selected_assertions, m.total_assertions,
                          m.analysis_millis, exec_millis)
        if rev != state.last_revision or not analysis.result.is_empty():
            # a formatting-only edit keeps the revision id; keep its records
            _write_outputs(layout, rev, analysis.result, report, metrics)

        # checksums and state go last: an interrupted run recomputes the same
        # change set next time, and every earlier step is idempotent
        analysis.slices.save(layout.slices)
        reinstrumented: list[str] = []
        if not analysis.changes.is_empty():
            reinstrumented = sync_instrumented_copy(analysis.changes, project, analysis.levels,
                                                    layout.instrumented)
            save_pending(layout, pending.merge(analysis.changes))
            state.collection_current = False
        ChecksumStore.from_project(project).save(layout.checksums)
        state.last_revision = rev
        state.save()
        if collect and not state.collection_current:
            _collect(project, layout)
            save_pending(layout, ChangeSet())
            state.collection_current = True
            state.save()
    return RunResult(rev, state, analysis.result, analysis.changes, report, metrics, tuple(reinstrumented))


def cmd_collect(project_dir, store: Optional[str] = None) -> StoreState:
    """Refresh the dependency database from the instrumented copy."""
    project_dir = Path(project_dir)
    store_dir = resolve_store(project_dir, store)
    layout = Layout(store_dir)
    with store_lock(store_dir):
        state = StoreState.load(store_dir)
        project = Project.load(project_dir)
        if ChecksumStore.from_project(project).revision_id != state.last_revision:
            raise StoreError("working tree differs from the last analyzed revision; run first")
        _collect(project, layout)
        save_pending(layout, ChangeSet())
        state.collection_current = True
        state.save()
    return state


def cmd_retestall(project_dir) -> TestReport:
    return execute_tests(Project.load(Path(project_dir)))


def cmd_mutate(project_dir, seed: int, out_dir=None) -> tuple[MutatedRevision, Path]:
    """Write the mutant for ``seed`` as a new revision directory."""
    project_dir = Path(project_dir)
    project = Project.load(project_dir)
    mutant = generate_mutant(project, seed)
    out = Path(out_dir) if out_dir else project_dir.with_name(f"{project_dir.name}-mutant{seed}")
    if out.exists():
        raise StoreError(f"{out} already exists")
    for path, text in mutant.tree.items():
        write_atomic(out / path, text)
    return mutant, out


def cmd_report(project_dir, store: Optional[str] = None, revision: Optional[str] = None) -> dict[str, str]:
    """Stored selection, report and metrics files of one revision."""
    store_dir = resolve_store(Path(project_dir), store)
    layout = Layout(store_dir)
    rev = revision or StoreState.load(store_dir).last_revision
    out = {}
    for kind, path in (("selection", layout.selection(rev)), ("report", layout.report(rev)),
                       ("metrics", layout.metrics(rev))):
        if not path.is_file():
            raise StoreError(f"no {kind} recorded for revision {rev}")
        out[kind] = path.read_text(encoding="utf-8")
    out["revision"] = rev
    return out


def cmd_oracle(v1_dir, v2_dir) -> OracleReport:
    return oracle_report(Path(v1_dir), Path(v2_dir))
