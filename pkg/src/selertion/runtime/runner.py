"""Test execution with JUnit-like lifecycle semantics.

Each test class (and each row of a parameterized class) runs in a fresh
interpreter, so static state never leaks between classes. Every test method
gets a fresh instance; @BeforeClass runs once per class run and @Before once
per method, superclass methods first.
"""

from __future__ import annotations

import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Union

from selertion.frontend.model import ClassModel, MethodModel
from selertion.frontend.project import Project
from selertion.runtime.interpreter import AssertionFailed, Interpreter, MiniJError, Obj, _Return

PASS, FAIL, ERROR = "pass", "fail", "error"
RECURSION_LIMIT = 30_000


@dataclass(frozen=True)
class Outcome:
    entity: str  # M=<class>#<sig>, with a [row] suffix for parameterized rows
    status: str
    message: str = ""
    asserts: tuple[tuple[int, bool], ...] = ()  # (top-level ordinal, passed)
    millis: float = field(default=0.0, compare=False)

    @property
    def method_entity(self) -> str:
        return self.entity.split("[", 1)[0]

    @property
    def origin(self) -> str:
        """Original test method this outcome belongs to (slice and row suffixes removed)."""
        ent = self.method_entity
        if "__slice" in ent:
            head, tail = ent.split("__slice", 1)
            ent = head + tail[tail.index("("):]
        return ent


@dataclass
class TestReport:
    outcomes: list[Outcome] = field(default_factory=list)
    assertions_evaluated: int = 0

    @property
    def tests_run(self) -> int:
        """Distinct original test methods executed (slices and rows fold into their method)."""
        return len({o.origin for o in self.outcomes})

    @property
    def entities_run(self) -> int:
        return len(self.outcomes)

    @property
    def failures(self) -> int:
        return sum(1 for o in self.outcomes if o.status == FAIL)

    @property
    def errors(self) -> int:
        return sum(1 for o in self.outcomes if o.status == ERROR)

    @property
    def exit_code(self) -> int:
        return 0 if self.failures == 0 and self.errors == 0 else 1

    def by_entity(self) -> dict[str, Outcome]:
        return {o.entity: o for o in self.outcomes}

    def statuses(self) -> dict[str, str]:
        return {o.entity: o.status for o in self.outcomes}

    def to_tsv(self) -> str:
        return "".join(f"{o.entity}\t{_outcome_text(o)}\t{o.millis:.3f}\n" for o in self.outcomes)

    def to_json(self) -> dict:
        return {
            "testsRun": self.tests_run,
            "entitiesRun": self.entities_run,
            "assertionsEvaluated": self.assertions_evaluated,
            "failures": self.failures,
            "errors": self.errors,
            "outcomes": [{"entity": o.entity, "outcome": o.status, "message": o.message,
                          "millis": round(o.millis, 3)} for o in self.outcomes],
        }


def _outcome_text(o: Outcome) -> str:
    if o.status == PASS:
        return PASS
    msg = o.message.replace("\t", " ").replace("\n", " ")
    return f"{o.status}({msg})"


def _wanted(cls: ClassModel, m: MethodModel, filt: Optional[set[str]]) -> bool:
    if filt is None:
        return True
    return f"C={cls.fq_name}" in filt or f"M={cls.fq_name}#{m.short_sig}" in filt


def _lifecycle(project: Project, cls: ClassModel, pred) -> list[MethodModel]:
    """Setup methods of the chain, ancestors first; an override replaces its parent."""
    chain = list(reversed(project.ancestors(cls))) + [cls]
    order: list[str] = []
    by_sig: dict[str, MethodModel] = {}
    for k in chain:
        for m in k.methods:
            if m.short_sig not in by_sig:
                order.append(m.short_sig)
            by_sig[m.short_sig] = m
    return [by_sig[s] for s in order if pred(by_sig[s])]


def _param_rows(project: Project, cls: ClassModel) -> Optional[list[tuple]]:
    if cls.decl.annotation("Parameterized") is None:
        return None
    interp = Interpreter(project)
    rows = interp.static_get(cls, "params")
    if not isinstance(rows, list):
        raise MiniJError("TypeError", f"{cls.name}.params is not a list")
    return [r if isinstance(r, tuple) else (r,) for r in rows]


def _instance_fields(project: Project, cls: ClassModel) -> list:
    chain = list(reversed(project.ancestors(cls))) + [cls]
    return [f for k in chain for f in k.fields if not f.static]


class _ClassRun:
    def __init__(self, project: Project, cls: ClassModel, tracer, soft: bool, row: Optional[tuple]):
        self.project = project
        self.cls = cls
        self.row = row
        self.interp = Interpreter(project, tracer, soft)
        self.tracer = tracer

    def new_instance(self) -> Obj:
        obj = self.interp.instantiate(self.cls, [])
        if self.row is not None:
            fields = _instance_fields(self.project, self.cls)
            if len(fields) < len(self.row):
                raise MiniJError("TypeError", f"{self.cls.name}: params row wider than its fields")
            for f, v in zip(fields, self.row):
                obj.fields[f.name] = v
        return obj

    def call(self, m: MethodModel, obj: Optional[Obj]) -> None:
        self.interp.invoke(m, None if m.decl.static else obj, [])

    def run_body(self, m: MethodModel, obj: Obj) -> None:
        interp = self.interp
        frame = interp._bind(m, obj, self.project.by_fq(m.class_fq), [])
        interp._enter()
        try:
            interp.exec_body(m.decl.body, frame)
        except _Return:
            pass
        finally:
            interp.depth -= 1
            interp.current_ordinal = -1


def _run_method(run: _ClassRun, m: MethodModel, befores: list[MethodModel], entity: str) -> Outcome:
    interp = run.interp
    interp.steps = 0
    interp.depth = 0
    log_start = len(interp.assert_log)
    expected = m.expected_exception
    started = time.perf_counter()
    status, message = PASS, ""
    try:
        obj = run.new_instance()
        for b in befores:
            run.call(b, obj)
    except AssertionFailed as exc:
        status, message = FAIL, f"in setup: {exc.message}"
    except MiniJError as exc:
        status, message = ERROR, f"in setup: {exc}"
    else:
        try:
            run.run_body(m, obj)
            if expected:
                status, message = FAIL, f"expected {expected}"
        except AssertionFailed as exc:
            status, message = FAIL, exc.message
        except MiniJError as exc:
            if expected and exc.name == expected:
                status, message = PASS, ""
            elif expected:
                status, message = FAIL, f"expected {expected} but got {exc.name}"
            else:
                status, message = ERROR, str(exc)
        except RecursionError:
            status, message = ERROR, "StackOverflow: host recursion limit"
    if interp.soft_asserts and status == PASS and any(not ok for _, ok, _ in interp.assert_log[log_start:]):
        failed = [msg for _, ok, msg in interp.assert_log[log_start:] if not ok]
        status, message = FAIL, failed[0]
    asserts = tuple((o, ok) for o, ok, _ in interp.assert_log[log_start:])
    return Outcome(entity, status, message, asserts, (time.perf_counter() - started) * 1000.0)


def _run_class(project: Project, cls: ClassModel, tests: list[MethodModel], tracer, soft: bool,
               row: Optional[tuple], suffix: str, method_scopes: bool = False) -> tuple[list[Outcome], int]:
    run = _ClassRun(project, cls, tracer, soft, row)
    if tracer is not None:
        tracer.current_class = cls.fq_name
    opened = [mk.entity for mk in cls.markers if mk.kind == "begin"]
    if tracer is not None:
        for ent in opened:
            tracer.open(ent)
    outcomes = []
    try:
        setup_error: Optional[str] = None
        try:
            for b in _lifecycle(project, cls, lambda m: m.is_before_class):
                run.call(b, run.new_instance() if not b.decl.static else None)
        except (AssertionFailed, MiniJError) as exc:
            setup_error = f"in class setup: {exc}"
        except RecursionError:
            setup_error = "in class setup: StackOverflow"
        befores = _lifecycle(project, cls, lambda m: m.is_before)
        for m in tests:
            entity = f"M={cls.fq_name}#{m.short_sig}{suffix}"
            if setup_error is not None:
                outcomes.append(Outcome(entity, ERROR, setup_error))
                continue
            if tracer is not None and method_scopes:
                scope = f"M={cls.fq_name}#{m.short_sig}"
                tracer.open(scope)
                try:
                    outcomes.append(_run_method(run, m, befores, entity))
                finally:
                    tracer.close(scope)
            else:
                outcomes.append(_run_method(run, m, befores, entity))
    finally:
        if tracer is not None:
            for ent in reversed(opened):
                tracer.close(ent)
            tracer.current_class = None
    return outcomes, run.interp.assertions


def runnable_classes(project: Project) -> list[ClassModel]:
    return [c for c in project.test_classes() if c.decl.annotation("Ignore") is None]


def execute_tests(project: Union[Project, str, Path], filter: Optional[Iterable[str]] = None,
                  tracer=None, soft: bool = False, method_scopes: bool = False) -> TestReport:
    """Run the suite (or the classes/methods named by ``filter`` entity ids).

    ``method_scopes`` makes the runner itself open an ``M=`` trace scope
    around every executed test method, setup included.
    """
    if not isinstance(project, Project):
        project = Project.load(project)
    project.link()
    filt = set(filter) if filter is not None else None
    if sys.getrecursionlimit() < RECURSION_LIMIT:
        sys.setrecursionlimit(RECURSION_LIMIT)
    report = TestReport()
    for cls in runnable_classes(project):
        tests = [m for m in project.runnable_tests(cls) if _wanted(cls, m, filt)]
        if not tests:
            continue
        try:
            rows = _param_rows(project, cls)
        except MiniJError as exc:
            for m in tests:
                report.outcomes.append(Outcome(f"M={cls.fq_name}#{m.short_sig}", ERROR, f"bad params: {exc}"))
            continue
        runs = [(None, "")] if rows is None else [(r, f"[{i}]") for i, r in enumerate(rows)]
        for row, suffix in runs:
            outcomes, count = _run_class(project, cls, tests, tracer, soft, row, suffix, method_scopes)
            report.outcomes += outcomes
            report.assertions_evaluated += count
    return report
