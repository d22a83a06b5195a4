"""Mutant sweep over the bundled corpus: safety and precision per mutant.

Run as ``python3 -m selertion.harness.sweep --count 100`` for a TSV summary.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass, field
from typing import Optional

from selertion.driver.pipeline import Analysis, Snapshot, analyze_against, snapshot
from selertion.frontend.project import Project
from selertion.harness import CORPUS_NAMES, corpus_path
from selertion.harness.mutants import MutatedRevision, corpus_mutant, generate_mutant
from selertion.harness.oracle import OracleReport, changed_slices, oracle_report
from selertion.runtime.deps import entity_class, entity_method
from selertion.selection import SelectionResult


def covered_methods(result: SelectionResult, project: Project) -> set[str]:
    """Running test methods (``M=<running class>#sig``) the selection executes
    at least partly."""
    out = set()
    sliced = {(s.class_fq, s.method_sig) for s in result.gamma_a.values()}
    for cls in project.test_classes():
        for m in project.runnable_tests(cls):
            ent = f"M={cls.fq_name}#{m.short_sig}"
            if (cls.fq_name in result.gamma_c
                    or ent in result.gamma_m
                    or f"M={m.class_fq}#{m.short_sig}" in result.gamma_m
                    or (m.class_fq, m.short_sig) in sliced):
                out.add(ent)
    return out


def covered_slices(result: SelectionResult, slice_entities: set[str]) -> set[str]:
    """Slice entities executed by the selection, directly or inside a whole method."""
    out = set(result.gamma_a)
    for ent in slice_entities:
        fq, sig = entity_class(ent), entity_method(ent)
        if fq in result.gamma_c or f"M={fq}#{sig}" in result.gamma_m:
            out.add(ent)
    return out


@dataclass
class MutantOutcome:
    project: str
    mutant: MutatedRevision
    oracle: OracleReport
    changed_slices: set[str]
    fine: Analysis
    coarse: Analysis
    missed_methods: set[str] = field(default_factory=set)
    missed_slices: set[str] = field(default_factory=set)
    millis: float = 0.0

    @property
    def safe(self) -> bool:
        return not self.missed_methods and not self.missed_slices

    @property
    def fine_ratio(self) -> float:
        return self.fine.metrics.selected_assertion_ratio

    @property
    def coarse_ratio(self) -> float:
        return self.coarse.metrics.selected_assertion_ratio

    def row(self) -> str:
        m = self.mutant
        return "\t".join([
            self.project, str(m.seed), m.op, m.location.entity, str(len(self.oracle.outcome_diff)),
            str(len(self.oracle.affected)), f"{self.fine_ratio:.4f}", f"{self.coarse_ratio:.4f}",
            "safe" if self.safe else "MISS:" + ",".join(sorted(self.missed_methods | self.missed_slices)),
        ])


HEADER = "project\tseed\top\tlocation\toutcomeDiff\taffected\tassertionRatio\tmethodLevelRatio\tsafety"


class Sweep:
    """Evaluates mutants; baselines are computed once per corpus project."""

    def __init__(self):
        self._bases: dict[str, tuple[Project, Snapshot, Snapshot]] = {}

    def base(self, name: str) -> tuple[Project, Snapshot, Snapshot]:
        if name not in self._bases:
            p = Project.load(corpus_path(name))
            self._bases[name] = (p, snapshot(p), snapshot(p, method_level=True))
        return self._bases[name]

    def evaluate(self, name: str, mutant_seed: int) -> MutantOutcome:
        """Evaluate the ``mutant_seed``-th mutant of one corpus project."""
        v1 = self.base(name)[0]
        return self.evaluate_mutant(name, generate_mutant(v1, mutant_seed))

    def evaluate_seed(self, seed: int, projects: Optional[tuple[str, ...]] = None) -> MutantOutcome:
        """Evaluate the mutant drawn for ``seed`` from the pooled corpus sites."""
        names = projects or CORPUS_NAMES
        name, mutant = corpus_mutant({n: self.base(n)[0] for n in names}, seed)
        return self.evaluate_mutant(name, mutant)

    def evaluate_mutant(self, name: str, mutant: MutatedRevision) -> MutantOutcome:
        started = time.perf_counter()
        v1, fine_base, coarse_base = self.base(name)
        v2 = Project.from_tree(mutant.tree)
        fine = analyze_against(fine_base, v2)
        coarse = analyze_against(coarse_base, v2)
        oracle = oracle_report(v1, v2)
        diff_slices = changed_slices(v1, v2)
        out = MutantOutcome(name, mutant, oracle, diff_slices, fine, coarse)
        out.missed_methods = oracle.affected - covered_methods(fine.result, v2)
        out.missed_slices = diff_slices - covered_slices(fine.result, diff_slices)
        out.millis = (time.perf_counter() - started) * 1000.0
        return out

    def run(self, count: int, start: int = 0, projects: Optional[tuple[str, ...]] = None) -> list[MutantOutcome]:
        return [self.evaluate_seed(s, projects) for s in range(start, start + count)]


def main(argv: Optional[list[str]] = None) -> int:
    ap = argparse.ArgumentParser(prog="python3 -m selertion.harness.sweep",
                                 description="Evaluate seeded mutants over the bundled corpus.")
    ap.add_argument("--count", type=int, default=100)
    ap.add_argument("--start", type=int, default=0)
    ap.add_argument("--project", action="append", choices=CORPUS_NAMES)
    args = ap.parse_args(argv)
    outcomes = Sweep().run(args.count, args.start, tuple(args.project) if args.project else None)
    print(HEADER)
    for o in outcomes:
        print(o.row())
    misses = sum(1 for o in outcomes if not o.safe)
    print(f"# mutants={len(outcomes)} misses={misses}", file=sys.stderr)
    return 1 if misses else 0


if __name__ == "__main__":
    sys.exit(main())
