import pytest

from selertion.driver.pipeline import analyze_levels, instrumented_tree
from selertion.errors import InstrumentationError, StoreError
from selertion.frontend.project import Project
from selertion.instrument import instrument_project
from selertion.runtime.deps import DependencyDB, Tracer, collect_dependencies
from selertion.runtime.interpreter import wrap_int
from selertion.runtime.runner import ERROR, FAIL, PASS, execute_tests


def _run(body: str, extra: str = "", annotation: str = "@Test") -> tuple[str, str]:
    src = f"class T {{ {annotation} void t() {{ {body} }} }}"
    tree = {"tests/T.mj": src}
    if extra:
        tree["src/X.mj"] = extra
    o = execute_tests(Project.from_tree(tree)).outcomes[0]
    return o.status, o.message


def _collect(project: Project, debug: bool = False) -> DependencyDB:
    _, levels = analyze_levels(project, False)
    return collect_dependencies(Project.from_tree(instrumented_tree(project, levels, debug)), project)[0]


def test_complex_suite_runs_clean(complexmath):
    report = execute_tests(complexmath)
    assert report.tests_run == 2
    assert report.assertions_evaluated == 5
    assert report.failures == 0 and report.errors == 0
    assert report.exit_code == 0


def test_empty_project_runs_nothing():
    report = execute_tests(Project.from_tree({}))
    assert report.tests_run == 0 and report.exit_code == 0


def test_expected_exception_passes_only_when_thrown():
    extra = "class M { static int div(int a, int b) { return a / b; } }"
    assert _run("M.div(1, 0);", extra, "@Test(expected=DivByZero)")[0] == PASS
    status, message = _run("M.div(4, 2);", extra, "@Test(expected=DivByZero)")
    assert status == FAIL and "DivByZero" in message
    assert _run("M.div(1, 0);", extra)[0] == ERROR


def test_failed_assertion_stops_only_its_method(complexmath):
    tree = {f.path: f.text for f in complexmath.files}
    tree["tests/ComplexTest.mj"] = tree["tests/ComplexTest.mj"].replace("assertNear(-3.0", "assertNear(3.0")
    report = execute_tests(Project.from_tree(tree))
    assert report.statuses() == {"M=ComplexTest#testExp()": PASS, "M=ComplexTest#testNegate()": FAIL}
    assert report.assertions_evaluated == 4  # the second assertion of testNegate never ran
    assert report.assertions_evaluated >= report.failures


def test_runtime_errors_are_test_errors():
    status, message = _run("int x = 1 / 0;")
    assert status == ERROR and "DivByZero" in message
    assert _run("Foo f = null; f.bar();")[0] == ERROR
    assert "Timeout" in _run("int i = 0; while (true) { i = i + 1; }")[1]
    assert "OutOfMemory" in _run('string s = "ab"; while (true) { s = s + s; }')[1]


def test_ints_wrap_at_32_bits():
    assert wrap_int(2**31) == -2**31
    assert wrap_int(-2**31 - 1) == 2**31 - 1
    assert _run("int x = 2147483647; assertEq(-2147483648, x + 1);")[0] == PASS
    assert _run("int x = 65536; assertEq(0, x * x);")[0] == PASS


def test_before_and_before_class_run_for_each_test():
    src = """
    class T {
        static int classRuns = 0;
        int n;
        @BeforeClass static void once() { classRuns = classRuns + 1; }
        @Before void each() { n = 10; }
        @Test void a() { n = n + 1; assertEq(11, n); assertEq(1, classRuns); }
        @Test void b() { assertEq(10, n); assertEq(1, classRuns); }
    }"""
    report = execute_tests(Project.from_tree({"tests/T.mj": src}))
    assert set(report.statuses().values()) == {PASS}


def test_parameterized_rows_run_separately(corpus_projects):
    report = execute_tests(corpus_projects["params"])
    gcd = [o.entity for o in report.outcomes if o.entity.startswith("M=GcdTest#testGcd()")]
    assert len(gcd) == 3
    assert report.tests_run == len({o.origin for o in report.outcomes})


def test_negate_statement_depends_on_negate(complexmath):
    db = _collect(complexmath)
    deps = db.deps["S=ComplexTest#testNegate()@1"]
    assert "Complex.negate()" in deps
    assert "Complex.Complex(float,float)" in deps
    assert "Complex.negate()" not in db.deps["S=ComplexTest#testExp()@0"]


def test_literal_assertion_has_no_dependencies():
    src = "class T { @Test void t() { assertTrue(true); } }"
    db = _collect(Project.from_tree({"tests/T.mj": src}))
    assert db.deps == {"S=T#t()@0": frozenset()}


def test_parameterized_class_has_one_class_entry(corpus_projects):
    db = _collect(corpus_projects["params"])
    gcd_entities = [e for e in db.deps if "GcdTest" in e]
    assert gcd_entities == ["C=GcdTest"]
    assert {"Calc.gcd(int,int)", "Calc.lcm(int,int)"} <= db.deps["C=GcdTest"]


def test_entity_prefixes_follow_levels(corpus_projects):
    for project in corpus_projects.values():
        inv, levels = analyze_levels(project, False)
        db = _collect(project)
        for ent in db.deps:
            fq = ent[2:].split("#", 1)[0]
            lv = levels[f"C={fq}"] if ent[0] == "C" else levels[f"M={ent[2:].split('@')[0]}"]
            assert {"S": "assertion", "M": "method", "C": "class"}[ent[0]] == lv.level


def test_collection_is_deterministic(corpus_projects, tmp_path):
    for name, project in corpus_projects.items():
        _collect(project).save(tmp_path / f"{name}-a")
        _collect(project).save(tmp_path / f"{name}-b")
        a = {p.name: p.read_bytes() for p in (tmp_path / f"{name}-a").iterdir()}
        b = {p.name: p.read_bytes() for p in (tmp_path / f"{name}-b").iterdir()}
        assert a == b
        assert execute_tests(project).statuses() == execute_tests(project).statuses()


def test_dependency_db_round_trip(tmp_path, complexmath):
    db = _collect(complexmath)
    db.save(tmp_path / "deps")
    assert DependencyDB.load(tmp_path / "deps") == db
    with pytest.raises(StoreError):
        DependencyDB.load(tmp_path / "nothing")


def test_method_scope_is_the_union_of_its_statement_scopes(corpus_projects):
    for project in corpus_projects.values():
        db = _collect(project, debug=True)
        methods = [e for e in db.deps if e.startswith("M=")]
        checked = 0
        for ent in methods:
            parts = [sigs for e, sigs in db.deps.items() if e.startswith("S=" + ent[2:] + "@")]
            if parts:
                assert db.deps[ent] == frozenset().union(*parts), ent
                checked += 1
        assert checked or not methods


def test_debug_statement_sets_are_subsets_of_the_method_set(complexmath):
    db = _collect(complexmath, debug=True)
    whole = db.deps["M=ComplexTest#testExp()"]
    for i in range(6):
        assert db.deps[f"S=ComplexTest#testExp()@{i}"] <= whole


def test_unbalanced_markers_are_reported():
    t = Tracer()
    t.open("M=A#a()")
    with pytest.raises(InstrumentationError):
        t.close("M=A#b()")
    with pytest.raises(InstrumentationError):
        t.check_balanced()


def test_method_scope_closes_on_expected_exception(corpus_projects, tmp_path):
    project = corpus_projects["expects"]
    _, levels = analyze_levels(project, False)
    instrument_project(project, levels, tmp_path)
    db, report = collect_dependencies(tmp_path, project)  # would raise on an open scope
    assert "M=StackTest#testPopEmpty()" in db.deps
    assert "Stack.pop()" in db.deps["M=StackTest#testPopEmpty()"]
    assert report.exit_code == 0
