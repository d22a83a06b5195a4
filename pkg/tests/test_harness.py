import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import edit, negate_mutant, negate_tree
from selertion.driver.pipeline import analyze_against, snapshot
from selertion.errors import MutationError
from selertion.frontend.project import Project, enumerate_tests
from selertion.harness import CORPUS_NAMES, load_corpus_tree
from selertion.harness.metrics import compute_metrics
from selertion.harness.mutants import (ARITHMETIC, DELETE, OPERATORS, apply_site, corpus_mutant, enumerate_sites,
                                       find_site, generate_mutant)
from selertion.harness.oracle import changed_slices, oracle_affected_entities, oracle_report
from selertion.harness.sweep import Sweep
from selertion.selection import SelectionResult


def test_mutants_are_deterministic(corpus_projects):
    for project in corpus_projects.values():
        for seed in (0, 7, 123):
            assert generate_mutant(project, seed) == generate_mutant(project, seed)


def test_hundred_seeds_give_ninety_distinct_mutants(corpus_projects):
    keys = set()
    for seed in range(100):
        name, m = corpus_mutant(corpus_projects, seed)
        keys.add((name, m.op, m.location))
    assert len(keys) >= 90


def test_single_project_cycles_through_its_pairs(complexmath):
    sites = enumerate_sites(complexmath)
    pairs = {(s.op, s.location) for s in sites}
    seen = {(m.op, m.location) for m in (generate_mutant(complexmath, s) for s in range(len(pairs)))}
    assert seen == pairs


def test_mutants_touch_only_production_code(corpus_projects):
    for name, project in corpus_projects.items():
        for seed in range(10):
            m = generate_mutant(project, seed)
            assert m.op in OPERATORS
            tree = load_corpus_tree(name)
            diff = {p for p in tree if tree[p] != m.tree.get(p)}
            assert diff == {m.site.path} and m.site.path.startswith("src/")
            Project.from_tree(m.tree)  # still parses and links


def test_project_without_production_sites_cannot_be_mutated():
    project = Project.from_tree({"tests/T.mj": "class T { @Test void t() { assertTrue(true); } }"})
    with pytest.raises(MutationError):
        generate_mutant(project, 0)


def test_statement_delete_removes_the_statement(complexmath):
    site = find_site(complexmath, "Complex.Complex(float,float)", DELETE)
    text = apply_site(complexmath, site)["src/Complex.mj"]
    assert text.count("this.re = re;") + text.count("this.im = im;") == 1


def test_arithmetic_mutant_changes_one_operator(complexmath):
    site = find_site(complexmath, "Complex.multiply(Complex)", ARITHMETIC)
    text = apply_site(complexmath, site)["src/Complex.mj"]
    before = next(f.text for f in complexmath.files if f.path == "src/Complex.mj")
    assert text != before
    assert "return new Complex(re * o.re + im * o.im, re * o.im + im * o.re);" in text


def test_oracle_for_negate_edit(complexmath):
    assert oracle_affected_entities(complexmath, negate_tree()) == {
        "M=ComplexTest#testNegate()", "M=ComplexTest#testExp()"}
    # only the imaginary part is negated, so the real-part assertion still passes alone
    assert changed_slices(complexmath, negate_tree()) == {"S=ComplexTest#testNegate()@2",
                                                          "S=ComplexTest#testExp()@5"}


def test_oracle_for_identical_revisions_is_empty(complexmath):
    assert oracle_affected_entities(complexmath, complexmath) == set()


def test_oracle_for_comment_only_edit_is_empty():
    tree = load_corpus_tree("complexmath")
    v2 = edit(tree, "src/Complex.mj", "Complex negate() {", "// flips\n    Complex negate() {")
    report = oracle_report(tree, v2)
    assert report.affected == set() and report.changes.is_empty()


def test_oracle_reports_outcome_differences_separately(complexmath):
    report = oracle_report(complexmath, negate_tree())
    assert report.outcome_diff == {"M=ComplexTest#testNegate()", "M=ComplexTest#testExp()"}
    assert report.trace_hits == report.outcome_diff
    silent = edit(negate_tree(), "src/Complex.mj", "Complex(re, -im)", "Complex(-re + 0.0, -im)")
    assert oracle_report(complexmath, silent).outcome_diff == set()
    assert oracle_report(complexmath, silent).trace_hits == report.outcome_diff


def test_metrics_for_negate_selection(complexmath):
    analysis = analyze_against(snapshot(complexmath), negate_mutant())
    m = analysis.metrics
    assert (m.selected_tests, m.total_tests) == (2, 2)
    assert (m.selected_assertions, m.total_assertions) == (3, 5)
    assert m.selected_test_ratio == 1.0 and m.selected_assertion_ratio == 0.6


def test_metrics_for_empty_selection(complexmath):
    m = compute_metrics(SelectionResult(), enumerate_tests(complexmath), None, complexmath)
    assert m.selected_tests == 0 and m.selected_assertions == 0
    assert m.selected_assertion_ratio == 0.0
    empty = Project.from_tree({})
    assert compute_metrics(SelectionResult(), enumerate_tests(empty), None, empty).selected_test_ratio == 0.0


def test_whole_method_counts_all_its_assertions(complexmath):
    result = SelectionResult(gamma_m={"M=ComplexTest#testExp()"})
    m = compute_metrics(result, enumerate_tests(complexmath), None, complexmath)
    assert (m.selected_tests, m.selected_assertions) == (1, 3)


def test_metrics_tsv_has_a_header_and_one_row(complexmath):
    m = compute_metrics(SelectionResult(), enumerate_tests(complexmath), None, complexmath)
    lines = m.to_tsv().splitlines()
    assert len(lines) == 2 and lines[0].startswith("selectedTestRatio\t")


@pytest.fixture(scope="module")
def sweep():
    return Sweep()


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_sweep_mutants_are_covered(sweep, seed):
    out = sweep.evaluate_seed(seed)
    assert out.safe, out.row()
    assert out.fine_ratio <= out.coarse_ratio + 1e-9


@pytest.mark.parametrize("name", CORPUS_NAMES)
def test_sweep_rows_have_every_column(sweep, name):
    out = sweep.evaluate(name, 0)
    assert len(out.row().split("\t")) == 9
