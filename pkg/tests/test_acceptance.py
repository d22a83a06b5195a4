"""One test per acceptance criterion; each prints a PASS or FAIL line, and
the lines are repeated in the terminal summary."""

import random
import re
import time
from collections import Counter
from contextlib import contextmanager

import pytest

from helpers import negate_mutant, per_assertion_outcomes, perturb_layout, token_edits
from selertion.driver import commands
from selertion.driver.pipeline import analyze_against, analyze_levels, instrumented_tree, snapshot
from selertion.fingerprint import ChecksumStore, compute_changes
from selertion.frontend.project import Project, enumerate_tests
from selertion.harness import CORPUS_NAMES, load_corpus_tree
from selertion.harness.mutants import generate_mutant
from selertion.harness.sweep import Sweep
from selertion.instrument import copy_digest, instrument_project, sync_instrumented_copy
from selertion.runtime.runner import execute_tests
from selertion.slicer import compute_slices

VERDICTS: dict[int, str] = {}

SWEEP_SIZE = 100


@contextmanager
def criterion(n: int, title: str):
    try:
        yield
    except BaseException:
        VERDICTS[n] = f"FAIL criterion {n}: {title}"
        print(VERDICTS[n])
        raise
    VERDICTS[n] = f"PASS criterion {n}: {title}"
    print(VERDICTS[n])


@pytest.fixture(scope="module")
def sweep_outcomes():
    started = time.perf_counter()
    outcomes = Sweep().run(SWEEP_SIZE)
    return outcomes, time.perf_counter() - started


def test_criterion_1_golden_slices(complexmath):
    with criterion(1, "golden slices of ComplexTest"):
        started = time.perf_counter()
        store = compute_slices(complexmath, enumerate_tests(complexmath))
        exp_lines = {0: 3, 1: 4, 2: 5, 3: 6, 4: 7, 5: 8}
        neg_lines = {0: 13, 1: 14, 2: 15, 3: 16}
        got = [tuple(exp_lines[i] for i in s.statements) for s in store.for_method("ComplexTest", "testExp()")]
        got += [tuple(neg_lines[i] for i in s.statements) for s in store.for_method("ComplexTest", "testNegate()")]
        assert got == [(3, 4, 5), (6,), (7, 8), (13, 14, 15), (13, 14, 16)]
        assert time.perf_counter() - started < 1.0


def test_criterion_2_golden_selection(complexmath):
    with criterion(2, "negate mutation selects exactly three fragments, ratio 0.6"):
        started = time.perf_counter()
        analysis = analyze_against(snapshot(complexmath), negate_mutant())
        assert set(analysis.result.gamma_a) == {"S=ComplexTest#testExp()@5", "S=ComplexTest#testNegate()@2",
                                                "S=ComplexTest#testNegate()@3"}
        assert not analysis.result.gamma_m and not analysis.result.gamma_c
        assert analysis.metrics.selected_assertion_ratio == 0.6
        assert time.perf_counter() - started < 2.0


def test_criterion_3_safety_sweep(sweep_outcomes):
    with criterion(3, f"{SWEEP_SIZE} corpus mutants, no affected test missed"):
        outcomes, seconds = sweep_outcomes
        assert len(outcomes) >= 100
        assert {o.project for o in outcomes} == set(CORPUS_NAMES)
        misses = [o.row() for o in outcomes if not o.safe]
        assert misses == []
        assert seconds < 300


def test_criterion_4_precision_dominance(sweep_outcomes):
    with criterion(4, "assertion-level ratio never above method-level, strictly below somewhere"):
        outcomes, _ = sweep_outcomes
        worse = [o.row() for o in outcomes if o.fine_ratio > o.coarse_ratio]
        assert worse == []
        strict = {o.project for o in outcomes if o.fine_ratio < o.coarse_ratio}
        print(f"strictly more precise on: {sorted(strict)}")
        assert strict


def test_criterion_5_checksum_robustness():
    with criterion(5, "1000 layout perturbations are empty, every token edit is detected"):
        rng = random.Random(20240501)
        files = [(name, path) for name in CORPUS_NAMES for path in sorted(load_corpus_tree(name))]
        stores = {name: ChecksumStore.from_project(Project.from_tree(load_corpus_tree(name)))
                  for name in CORPUS_NAMES}
        false_positives = []
        for i in range(1000):
            name, path = rng.choice(files)
            tree = load_corpus_tree(name)
            text = perturb_layout(tree[path], rng)
            if not compute_changes(stores[name], Project.from_tree(dict(tree, **{path: text}))).is_empty():
                false_positives.append((i, name, path))
        false_negatives, edits = [], 0
        for name, path in files:
            tree = load_corpus_tree(name)
            for tok, text in token_edits(tree[path]):
                edits += 1
                try:
                    v2 = Project.from_tree(dict(tree, **{path: text}))
                except Exception as exc:  # edits breaking name resolution still differ textually
                    if type(exc).__name__ != "LinkError":
                        raise
                    continue
                if compute_changes(stores[name], v2).is_empty():
                    false_negatives.append((name, path, tok))
        print(f"perturbations=1000 tokenEdits={edits}")
        assert false_positives == [] and false_negatives == []


def _literal_edits(text: str) -> list[str]:
    return [t for tok, t in token_edits(text) if tok.kind in ("INT", "FLOAT", "STRING")]


def test_criterion_6_incremental_instrumentation(tmp_path):
    with criterion(6, "ten synced revisions equal from-scratch instrumentation"):
        rng = random.Random(7)
        for name in CORPUS_NAMES:
            tree = load_corpus_tree(name)
            project = Project.from_tree(tree)
            copy = tmp_path / name / "copy"
            instrument_project(project, analyze_levels(project)[1], copy)
            for _ in range(10):
                nxt = dict(tree)
                for path in rng.sample(sorted(tree), k=rng.randint(1, min(2, len(tree)))):
                    nxt[path] = rng.choice(_literal_edits(nxt[path]))
                v2 = Project.from_tree(nxt)
                changes = compute_changes(ChecksumStore.from_project(project), v2)
                done = sync_instrumented_copy(changes, v2, analyze_levels(v2)[1], copy)
                assert sorted(done) == sorted(changes.changed_paths)
                tree, project = nxt, v2
            scratch = tmp_path / name / "scratch"
            instrument_project(project, analyze_levels(project)[1], scratch)
            assert copy_digest(copy) == copy_digest(scratch)
            assert {p: t for p, t in instrumented_tree(project, analyze_levels(project)[1]).items()} == {
                p.relative_to(scratch).as_posix(): p.read_text() for p in scratch.rglob("*.mj")}


def test_criterion_7_slice_executability(corpus_projects):
    with criterion(7, "slices reproduce per-assertion outcomes, masked failures included"):
        for project in corpus_projects.values():
            original, slices = per_assertion_outcomes(project)
            assert original == slices
            for seed in range(6):
                mutant = Project.from_tree(generate_mutant(project, seed).tree)
                original, slices = per_assertion_outcomes(mutant)
                # an error ends the method, so later assertions have no outcome to compare
                errored = {o.method_entity[2:] for o in execute_tests(mutant, soft=True).outcomes
                           if o.status == "error"}
                keep = lambda c: Counter({k: v for k, v in c.items() if f"{k[0]}#{k[1]}" not in errored})
                assert keep(original) == keep(slices)
                for ent in errored:
                    if any(f"{k[0]}#{k[1]}" == ent for k in slices):
                        assert any(f"{k[0]}#{k[1]}" == ent and k[3] == "error" for k in slices)
        masked = negate_mutant("return new Complex(re, im);")
        original, slices = per_assertion_outcomes(masked)
        negate_fails = {k for k in slices if k[1] == "testNegate()" and k[3] == "fail"}
        assert {k[2] for k in negate_fails} == {2, 3}


EXPECTED_PATHS = {
    "complexmath": ({"S"}, {"M=ComplexTest#testExp()", "M=ComplexTest#testNegate()"}, set(), set()),
    "inherit": ({"S", "C"}, {"M=CircleTest#testArea()", "M=CircleTest#testDescribe()"}, set(),
                {"RectTest", "SquareTest"}),
    "params": ({"S", "C"}, {"M=CalcTest#testClamp()", "M=CalcTest#testDigitSum()"}, set(), {"GcdTest"}),
    "expects": ({"S", "M"}, {"M=SafeMathTest#testDivide()", "M=SafeMathTest#testRoots()",
                             "M=StackTest#testPushPop()"},
                {"M=SafeMathTest#testDivideByZero()", "M=SafeMathTest#testNegativeRoot()",
                 "M=StackTest#testPeekAfterDrain()", "M=StackTest#testPopEmpty()"}, set()),
    "loops": ({"S", "M"}, {"M=CounterTest#testTicks()", "M=StatsTest#testMean()"},
              {"M=StatsTest#testCountAboveLoop()", "M=StatsTest#testMaxBranch()",
               "M=StatsTest#testNoAssertions()", "M=StatsTest#testSlowCounter()"}, set()),
    "chain": ({"S", "C"}, {"M=BankTest#testTransfer()", "M=BankTest#testTransferTooMuch()"}, set(),
              {"AccountTest"}),
}

_CLASS_HEAD = re.compile(r"^((?:abstract )?class \w+[^{]*\{)", re.M)


def test_criterion_8_downgrade_coverage():
    with criterion(8, "each corpus project has its expected levels and selection path"):
        for name in CORPUS_NAMES:
            prefixes, sliced, methods, classes = EXPECTED_PATHS[name]
            tree = load_corpus_tree(name)
            base = snapshot(Project.from_tree(tree))
            assert {ent[0] for ent in base.db.deps} == prefixes, name
            # a new field in every production class changes each of them
            v2 = {p: _CLASS_HEAD.sub(r"\1\n    static int revision = 0;", t) if p.startswith("src/") else t
                  for p, t in tree.items()}
            result = analyze_against(base, Project.from_tree(v2)).result
            assert {s.method_entity for s in result.gamma_a.values()} == sliced, name
            assert result.gamma_m == methods, name
            assert result.gamma_c == classes, name


def test_criterion_9_initial_run(project_copy):
    with criterion(9, "init runs every test, an unchanged run executes none"):
        for name in CORPUS_NAMES:
            root = project_copy(name)
            project = Project.load(root)
            first = commands.cmd_init(root)
            assert first.selection.gamma_c == {c.fq_name for c in project.test_classes()}
            assert first.metrics.selected_test_ratio == 1.0
            assert first.report.statuses() == execute_tests(project).statuses()
            second = commands.cmd_analyze_and_run(root)
            assert second.selection.is_empty()
            assert second.report.tests_run == 0 and second.report.entities_run == 0
