"""Selected test and assertion ratios of one selection."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from selertion.frontend.project import Project, TestInventory
from selertion.runtime.deps import entity_class, entity_method
from selertion.selection import SelectionResult
from selertion.slicer import SliceStore


@dataclass(frozen=True)
class Metrics:
    selected_tests: int
    total_tests: int
    selected_assertions: int
    total_assertions: int
    analysis_millis: float = 0.0
    execution_millis: float = 0.0

    @property
    def selected_test_ratio(self) -> float:
        return self.selected_tests / self.total_tests if self.total_tests else 0.0

    @property
    def selected_assertion_ratio(self) -> float:
        return self.selected_assertions / self.total_assertions if self.total_assertions else 0.0

    def to_dict(self) -> dict:
        return {
            "selectedTestRatio": self.selected_test_ratio,
            "selectedAssertionRatio": self.selected_assertion_ratio,
            "selectedTests": self.selected_tests,
            "totalTests": self.total_tests,
            "selectedAssertions": self.selected_assertions,
            "totalAssertions": self.total_assertions,
            "analysisMillis": round(self.analysis_millis, 3),
            "executionMillis": round(self.execution_millis, 3),
        }

    def to_tsv(self) -> str:
        cols = self.to_dict()
        vals = [f"{v:.6f}" if k.endswith("Ratio") else f"{v:.3f}" if k.endswith("Millis") else str(v)
                for k, v in cols.items()]
        return "\t".join(cols) + "\n" + "\t".join(vals) + "\n"


def selected_methods(result: SelectionResult, project: Project) -> tuple[set[tuple[str, str]], set[tuple[str, str]]]:
    """Declared test methods selected whole, and those contributing slices.

    Classes in the class-level set expand to their runnable tests, each
    attributed to the class declaring it, so an inherited test counts once.
    """
    whole: set[tuple[str, str]] = set()
    for fq in result.gamma_c:
        cls = project.by_fq(fq)
        if cls is not None:
            whole |= {(m.class_fq, m.short_sig) for m in project.runnable_tests(cls)}
    for ent in result.gamma_m:
        cls = project.by_fq(entity_class(ent))
        sig = entity_method(ent)
        if cls is None:
            continue
        hit = next((m for m in project.runnable_tests(cls) if m.short_sig == sig), None)
        if hit is not None:
            whole.add((hit.class_fq, hit.short_sig))
    sliced = {(s.class_fq, s.method_sig) for s in result.gamma_a.values()} - whole
    return whole, sliced


def compute_metrics(result: SelectionResult, inventory: TestInventory, slices: Optional[SliceStore],
                    project: Project, analysis_millis: float = 0.0, execution_millis: float = 0.0) -> Metrics:
    """Static selection metrics.

    Assertions are counted statically: every assertion of a method selected
    whole (parameterized rows count once), plus one per selected slice.
    When ``slices`` is given, slice entries it no longer knows are ignored.
    """
    whole, sliced = selected_methods(result, project)
    assertions = 0
    for fq, sig in whole:
        info = inventory.method(fq, sig)
        assertions += info.assertion_count if info is not None else 0
    known = {s.entity for s in slices.all()} if slices is not None else None
    assertions += sum(1 for s in result.gamma_a.values()
                      if (s.class_fq, s.method_sig) not in whole and (known is None or s.entity in known))
    return Metrics(len(whole | sliced), inventory.total_tests, assertions, inventory.total_assertions,
                   analysis_millis, execution_millis)
