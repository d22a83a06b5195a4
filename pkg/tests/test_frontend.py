import dataclasses

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from selertion.errors import LinkError, MiniJSyntaxError, ModelError
from selertion.frontend import ast as A
from selertion.frontend.model import build_class_model, parse_source, pretty_print
from selertion.frontend.parser import parse_text
from selertion.frontend.printer import expr_to_str
from selertion.frontend.project import Project, enumerate_tests
from selertion.harness import CORPUS_NAMES, load_corpus_tree


def test_complex_test_file_has_two_methods_and_five_assertions(complexmath):
    src = next(f for f in complexmath.files if f.path == "tests/ComplexTest.mj")
    assert [c.fq_name for c in src.classes] == ["ComplexTest"]
    methods = src.classes[0].methods
    assert [m.short_sig for m in methods] == ["testExp()", "testNegate()"]
    assert [m.assertion_count() for m in methods] == [3, 2]


def test_empty_file_has_no_classes():
    assert parse_source("", "src/Empty.mj").classes == ()
    assert parse_source("// only a comment\n", "src/Empty.mj").classes == ()


def test_unknown_superclass_is_reported_at_link_time():
    src = "class A extends B { }"
    parsed = parse_source(src, "src/A.mj")
    assert parsed.classes[0].superclass == "B"
    project = Project.from_tree({"src/A.mj": src})
    with pytest.raises(LinkError):
        project.link()
    with pytest.raises(LinkError):
        enumerate_tests(project)


def test_syntax_error_carries_position():
    with pytest.raises(MiniJSyntaxError) as info:
        parse_source("class A {\n  int f( {\n}", "src/A.mj")
    assert info.value.line == 2
    assert info.value.col > 0
    assert "src/A.mj:2:" in str(info.value)


def test_duplicate_class_in_file_is_rejected():
    with pytest.raises(ModelError):
        parse_source("class A { } class A { }", "src/A.mj")


def test_class_members_are_partitioned():
    src = """
    class Point {
        int x;
        int y;
        Point(int x, int y) { this.x = x; this.y = y; }
        int getX() { return x; }
        int getY() { return y; }
        int sum() { return x + y; }
    }
    """
    c = parse_source(src).classes[0]
    assert len(c.others) == 2
    assert len(c.methods) == 4
    assert sum(m.is_constructor for m in c.methods) == 1


def test_empty_class_has_only_a_head():
    c = parse_source("class Nothing { }").classes[0]
    assert c.class_head == ((), "class", "Nothing", None)
    assert c.others == () and c.methods == () and c.nested == ()


def test_enum_constants_go_to_other_declarations():
    src = "enum Color { RED, GREEN, BLUE; int code() { return 1; } }"
    c = parse_source(src).classes[0]
    assert c.kind == "enum"
    assert c.enum_constants == ("RED", "GREEN", "BLUE")
    assert [m.short_sig for m in c.methods] == ["code()"]


def test_build_class_model_partitions_every_member():
    for name in CORPUS_NAMES:
        for path, text in load_corpus_tree(name).items():
            for decl in parse_text(text, path).classes:
                c = build_class_model(decl)
                assert len(c.others) + len(c.methods) + len(c.nested) == len(decl.members)


def test_nested_classes_stay_inside_their_outer_model():
    src = "class Outer { class Inner { int f() { return 1; } } int g() { return 2; } }"
    outer = parse_source(src).classes[0]
    assert [n.fq_name for n in outer.nested] == ["Outer.Inner"]
    assert [m.signature for m in outer.nested[0].methods] == ["Outer.Inner.f()"]


def test_statement_ordinals_follow_body_order(complexmath):
    m = complexmath.by_fq("ComplexTest").method("testExp()")
    assert [s.ordinal for s in m.body] == list(range(6))
    assert m.body[2].kind == "assertion"
    assert m.body[0].kind == "varDecl"


def test_assertion_uses_are_its_argument_variables(complexmath):
    m = complexmath.by_fq("ComplexTest").method("testNegate()")
    assert m.body[2].uses == frozenset({"z"})
    assert m.body[1].strong_defs == frozenset({"z"})


def test_content_hash_tracks_statement_text():
    a = parse_source("class T { @Test void t() { int x = 1; assertEq(1, x); } }").classes[0]
    b = parse_source("class T { @Test void t() {  int x = 1;\n assertEq(1, x); } }").classes[0]
    c = parse_source("class T { @Test void t() { int x = 2; assertEq(1, x); } }").classes[0]
    ha = [s.id.content_hash for s in a.methods[0].body]
    hb = [s.id.content_hash for s in b.methods[0].body]
    hc = [s.id.content_hash for s in c.methods[0].body]
    assert ha == hb
    assert ha[0] != hc[0] and ha[1] == hc[1]


def test_inventory_of_complexmath(complexmath):
    inv = enumerate_tests(complexmath)
    info = inv.cls("ComplexTest")
    assert info.features == type(info.features)()
    assert [m.short_sig for m in info.test_methods] == ["testExp()", "testNegate()"]
    assert not any(m.has_conditionals for m in info.test_methods)
    assert inv.total_tests == 2 and inv.total_assertions == 5


def test_inheritance_flags_both_sub_and_superclass(corpus_projects):
    inv = enumerate_tests(corpus_projects["inherit"])
    assert inv.cls("RectTest").features.uses_inheritance
    assert inv.cls("SquareTest").features.uses_inheritance
    assert not inv.cls("CircleTest").features.uses_inheritance


def test_test_calling_another_test_is_flagged(corpus_projects):
    inv = enumerate_tests(corpus_projects["chain"])
    assert inv.cls("AccountTest").features.calls_other_tests
    assert not inv.cls("BankTest").features.calls_other_tests


def test_expected_exception_is_read_from_annotation(corpus_projects):
    inv = enumerate_tests(corpus_projects["expects"])
    expected = {m.short_sig: m.expects_exception for m in inv.cls("SafeMathTest").test_methods}
    assert "DivByZero" in expected.values()


def test_parameterized_flag(corpus_projects):
    inv = enumerate_tests(corpus_projects["params"])
    assert inv.cls("GcdTest").features.parameterized
    assert not inv.cls("CalcTest").features.parameterized


@pytest.mark.parametrize("name", CORPUS_NAMES)
def test_pretty_print_round_trips_corpus(name):
    for path, text in load_corpus_tree(name).items():
        once = parse_source(text, path)
        printed = pretty_print(once)
        twice = parse_source(printed, path)
        assert twice.ast == once.ast
        assert pretty_print(twice) == printed


def _has_conditional(stmts) -> bool:
    for s in stmts:
        if isinstance(s, (A.If, A.While, A.For)):
            return True
        for f in dataclasses.fields(s):
            v = getattr(s, f.name)
            if isinstance(v, tuple) and v and isinstance(v[0], A.Stmt) and _has_conditional(v):
                return True
            if isinstance(v, A.Stmt) and _has_conditional((v,)):
                return True
    return False


@pytest.mark.parametrize("name", CORPUS_NAMES)
def test_conditional_flag_is_sound(name, corpus_projects):
    project = corpus_projects[name]
    inv = enumerate_tests(project)
    for c in inv.test_classes:
        cls = project.by_fq(c.class_fq)
        for m in c.test_methods:
            body = cls.method(m.short_sig).decl.body
            assert m.has_conditionals == _has_conditional(body)


# --------------------------------------------------------- printer properties

_names = st.sampled_from(["a", "b", "x", "total"])
_leaves = st.one_of(
    st.integers(min_value=0, max_value=10**6).map(A.IntLit),
    st.floats(min_value=0, max_value=1e6, allow_nan=False, allow_infinity=False).map(A.FloatLit),
    st.booleans().map(A.BoolLit),
    st.text(alphabet="abc \"\\\n", max_size=5).map(A.StrLit),
    _names.map(A.Name),
)


def _extend(children):
    return st.one_of(
        st.builds(A.Binary, st.sampled_from(["+", "-", "*", "/", "%", "<", "<=", "==", "!=", "&&", "||"]),
                  children, children),
        st.builds(A.Unary, st.sampled_from(["-", "!"]), children),
        st.builds(A.Call, children, st.sampled_from(["f", "near"]), st.lists(children, max_size=2).map(tuple)),
        st.builds(A.FieldAccess, children, st.sampled_from(["re", "im"])),
        st.builds(A.New, st.sampled_from(["Complex", "Box"]), st.lists(children, max_size=2).map(tuple)),
    )


expressions = st.recursive(_leaves, _extend, max_leaves=12)


@settings(max_examples=300, deadline=None)
@given(expressions)
def test_expression_printing_round_trips(expr):
    text = f"class T {{ void m() {{ print({expr_to_str(expr)}); }} }}"
    tree = parse_text(text)
    stmt = tree.classes[0].members[0].body[0]
    assert stmt.expr.args[0] == expr
