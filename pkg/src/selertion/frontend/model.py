"""Class, method and statement models built on top of the syntax tree."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from selertion.errors import ModelError
from selertion.frontend import ast as A
from selertion.frontend.parser import parse_text
from selertion.frontend.printer import file_to_str, stmt_to_str
from selertion.hashing import short_digest


@dataclass(frozen=True, order=True)
class StatementId:
    class_fq: str
    method_sig: str  # short form, e.g. "testNegate()"
    ordinal: int
    content_hash: str = field(compare=False, default="")

    @property
    def entity(self) -> str:
        return f"S={self.class_fq}#{self.method_sig}@{self.ordinal}"


@dataclass(frozen=True)
class Invocation:
    """Receiver and argument variables of one non-builtin call site."""

    receiver: Optional[str]
    args: tuple[Optional[str], ...]
    name: str = ""  # method name, "new <Class>" or "=" for a field store

    @property
    def participants(self) -> frozenset[str]:
        vals = [self.receiver, *self.args]
        return frozenset(v for v in vals if v is not None)


@dataclass(frozen=True)
class Statement:
    id: StatementId
    kind: str  # varDecl assign invocation assertion return if while for trace
    node: A.Stmt
    strong_defs: frozenset[str]
    mutated: frozenset[str]
    uses: frozenset[str]
    invocations: tuple[Invocation, ...]
    alias_groups: tuple[frozenset[str], ...]
    writes_global: bool = False
    calls_sleep: bool = False
    throws: bool = False

    @property
    def ordinal(self) -> int:
        return self.id.ordinal

    @property
    def defs(self) -> frozenset[str]:
        return self.strong_defs | self.mutated

    @property
    def is_assertion(self) -> bool:
        return self.kind == "assertion"


@dataclass(frozen=True)
class MethodModel:
    class_fq: str
    decl: A.MethodDecl
    body: tuple[Statement, ...]

    @property
    def name(self) -> str:
        return self.decl.name

    @property
    def short_sig(self) -> str:
        return f"{self.decl.name}({','.join(p.type for p in self.decl.params)})"

    @property
    def signature(self) -> str:
        return f"{self.class_fq}.{self.short_sig}"

    @property
    def annotations(self) -> frozenset[str]:
        return frozenset(a.name for a in self.decl.annotations)

    @property
    def is_test(self) -> bool:
        return self.decl.annotation("Test") is not None

    @property
    def is_before(self) -> bool:
        return self.decl.annotation("Before") is not None

    @property
    def is_before_class(self) -> bool:
        return self.decl.annotation("BeforeClass") is not None

    @property
    def is_constructor(self) -> bool:
        return self.decl.is_constructor

    @property
    def is_helper(self) -> bool:
        return not (self.is_test or self.is_constructor)

    @property
    def expected_exception(self) -> Optional[str]:
        ann = self.decl.annotation("Test")
        return None if ann is None else ann.get("expected")

    def assertion_count(self) -> int:
        return sum(1 for s in A.walk_stmts(self.decl.body) if isinstance(s, A.AssertStmt))

    def has_conditionals(self) -> bool:
        return any(isinstance(s, (A.If, A.While, A.For)) for s in A.walk_stmts(self.decl.body))


@dataclass(frozen=True)
class ClassModel:
    fq_name: str
    decl: A.ClassDecl
    others: tuple  # FieldDecl | EnumConsts
    methods: tuple[MethodModel, ...]
    nested: tuple["ClassModel", ...]
    markers: tuple[A.TraceMarker, ...] = ()

    @property
    def name(self) -> str:
        return self.decl.name

    @property
    def kind(self) -> str:
        return self.decl.kind

    @property
    def superclass(self) -> Optional[str]:
        return self.decl.superclass

    @property
    def class_head(self) -> tuple:
        return (self.decl.annotations, self.decl.kind, self.decl.name, self.decl.superclass)

    @property
    def fields(self) -> tuple[A.FieldDecl, ...]:
        return tuple(o for o in self.others if isinstance(o, A.FieldDecl))

    @property
    def enum_constants(self) -> tuple[str, ...]:
        out: list[str] = []
        for o in self.others:
            if isinstance(o, A.EnumConsts):
                out += o.names
        return tuple(out)

    def method(self, short_sig: str) -> Optional[MethodModel]:
        for m in self.methods:
            if m.short_sig == short_sig:
                return m
        return None

    def walk(self):
        yield self
        for n in self.nested:
            yield from n.walk()


@dataclass(frozen=True)
class SourceFile:
    path: str
    text: str
    ast: A.FileAST
    classes: tuple[ClassModel, ...]

    @property
    def is_test(self) -> bool:
        return self.path.startswith("tests/")

    def all_classes(self):
        for c in self.classes:
            yield from c.walk()


# ------------------------------------------------------------ statement facts

class _Ctx:
    def __init__(self, locals_: set[str], fields: set[str], static_fields: set[str]):
        self.locals = locals_
        self.fields = fields
        self.static_fields = static_fields


def expr_path(e: A.Expr, ctx: _Ctx) -> Optional[str]:
    """Variable path denoted by ``e``.

    Locals are plain names, fields of the enclosing class become ``this.f``
    and anything else rooted at a non-local name (class references, static
    fields of other classes) keeps its dotted spelling. A field read through
    a local collapses onto the local because the object is the unit of
    aliasing.
    """
    if isinstance(e, A.Name):
        if e.ident in ctx.locals:
            return e.ident
        if e.ident in A.BUILTIN_NAMESPACES:
            return None
        if e.ident in ctx.fields:
            return f"this.{e.ident}"
        return e.ident
    if isinstance(e, A.This):
        return "this"
    if isinstance(e, A.FieldAccess):
        base = expr_path(e.target, ctx)
        if base is None:
            return None
        if base in ctx.locals or "." in base:
            return base
        return f"{base}.{e.name}"
    return None


def _read_paths(e: A.Expr, ctx: _Ctx, out: set[str]) -> None:
    if isinstance(e, A.Call) and e.target is None and e.name == "throw":
        return
    if isinstance(e, A.Call) and A.builtin_namespace(e) == "trace":
        return
    if isinstance(e, A.Call) and e.target is None and not A.is_builtin_call(e):
        out.add("this")
    p = expr_path(e, ctx) if isinstance(e, (A.Name, A.This, A.FieldAccess)) else None
    if p is not None:
        out.add(p)
        return
    for c in A.child_exprs(e):
        _read_paths(c, ctx, out)


def _invocations(e: A.Expr, ctx: _Ctx, out: list[Invocation]) -> None:
    for node in A.walk_expr(e):
        if isinstance(node, A.Call):
            if A.is_builtin_call(node):
                continue
            receiver = "this" if node.target is None else expr_path(node.target, ctx)
            out.append(Invocation(receiver, tuple(expr_path(a, ctx) for a in node.args), node.name))
        elif isinstance(node, A.New):
            out.append(Invocation(None, tuple(expr_path(a, ctx) for a in node.args), f"new {node.cls}"))


def _is_primitive(type_name: Optional[str]) -> bool:
    return type_name in A.PRIMITIVE_TYPES


def _stmt_kind(s: A.Stmt) -> str:
    return {
        A.VarDecl: "varDecl", A.Assign: "assign", A.ExprStmt: "invocation",
        A.AssertStmt: "assertion", A.Return: "return", A.If: "if",
        A.While: "while", A.For: "for", A.TraceScope: "trace",
    }[type(s)]


def analyze_statement(sid: StatementId, s: A.Stmt, ctx: _Ctx, local_types: dict[str, str]) -> Statement:
    uses: set[str] = set()
    strong: set[str] = set()
    invs: list[Invocation] = []
    writes_global = False
    target_alias: set[str] = set()

    for sub in A.walk_stmts([s]):
        for e in A.stmt_exprs(sub):
            if isinstance(sub, A.Assign) and e is sub.target:
                continue
            _read_paths(e, ctx, uses)
            _invocations(e, ctx, invs)
        if isinstance(sub, A.VarDecl):
            strong.add(sub.name)
            if sub.init is not None and not _is_primitive(sub.type):
                rhs: set[str] = set()
                _read_paths(sub.init, ctx, rhs)
                if rhs:
                    target_alias |= rhs | {sub.name}
        elif isinstance(sub, A.Assign):
            tgt = sub.target
            if isinstance(tgt, A.Name) and tgt.ident in ctx.locals:
                strong.add(tgt.ident)
                if sub.op != "=":
                    uses.add(tgt.ident)
                if not _is_primitive(local_types.get(tgt.ident)):
                    rhs = set()
                    _read_paths(sub.value, ctx, rhs)
                    if rhs:
                        target_alias |= rhs | {tgt.ident}
            else:
                base = expr_path(tgt.target, ctx) if isinstance(tgt, A.FieldAccess) else None
                if base is not None and base in ctx.locals:
                    # field store into a local object mutates that object
                    uses.add(base)
                    rhs = set()
                    _read_paths(sub.value, ctx, rhs)
                    target_alias |= rhs | {base}
                    invs.append(Invocation(base, (), "="))
                else:
                    writes_global = True

    calls_sleep = False
    throws = False
    for e in A.walk_stmt_exprs([s]):
        if isinstance(e, A.Call) and A.builtin_namespace(e) == "sys" and e.name == "sleep":
            calls_sleep = True
        if isinstance(e, A.Call) and e.target is None and e.name == "throw":
            throws = True

    is_assert = isinstance(s, A.AssertStmt)
    mutated: set[str] = set()
    groups: list[frozenset[str]] = []
    if not is_assert:
        for inv in invs:
            parts = inv.participants
            mutated |= parts
            if len(parts) > 1:
                groups.append(parts)
            if inv.receiver is not None and inv.receiver.split(".")[0] == "this":
                name = inv.receiver.split(".")[1] if "." in inv.receiver else None
                if name in ctx.static_fields:
                    writes_global = True
            for a in inv.args:
                if a is not None and a.startswith("this.") and a.split(".")[1] in ctx.static_fields:
                    writes_global = True
    if len(target_alias) > 1:
        groups.append(frozenset(target_alias))

    return Statement(
        id=sid,
        kind=_stmt_kind(s),
        node=s,
        strong_defs=frozenset(strong),
        mutated=frozenset(mutated),
        uses=frozenset(uses),
        invocations=tuple(invs),
        alias_groups=tuple(groups),
        writes_global=writes_global,
        calls_sleep=calls_sleep,
        throws=throws,
    )


def statement_hash(s: A.Stmt) -> str:
    return short_digest(stmt_to_str(s))


def build_method_model(class_fq: str, decl: A.MethodDecl, fields: set[str], static_fields: set[str]) -> MethodModel:
    local_types = {p.name: p.type for p in decl.params}
    for s in A.walk_stmts(decl.body):
        if isinstance(s, A.VarDecl):
            local_types.setdefault(s.name, s.type)
    ctx = _Ctx(set(local_types), fields, static_fields)
    short = f"{decl.name}({','.join(p.type for p in decl.params)})"
    body = tuple(
        analyze_statement(StatementId(class_fq, short, i, statement_hash(s)), s, ctx, local_types)
        for i, s in enumerate(decl.body)
    )
    return MethodModel(class_fq, decl, body)


def build_class_model(decl: A.ClassDecl, outer: Optional[str] = None) -> ClassModel:
    fq = f"{outer}.{decl.name}" if outer else decl.name
    others = []
    methods: list[MethodModel] = []
    nested = []
    markers = []
    field_names = {m.name for m in decl.members if isinstance(m, A.FieldDecl)}
    static_names = {m.name for m in decl.members if isinstance(m, A.FieldDecl) and m.static}
    seen: set[str] = set()
    for m in decl.members:
        if isinstance(m, (A.FieldDecl, A.EnumConsts)):
            others.append(m)
        elif isinstance(m, A.MethodDecl):
            mm = build_method_model(fq, m, field_names, static_names)
            if mm.short_sig in seen:
                raise ModelError(f"duplicate method {mm.signature}")
            seen.add(mm.short_sig)
            methods.append(mm)
        elif isinstance(m, A.ClassDecl):
            nested.append(build_class_model(m, fq))
        elif isinstance(m, A.TraceMarker):
            markers.append(m)
        else:  # pragma: no cover - parser never produces anything else
            raise ModelError(f"unknown member {type(m).__name__}")
    names = [f.name for f in others if isinstance(f, A.FieldDecl)]
    for o in others:
        if isinstance(o, A.EnumConsts):
            names += o.names
    dupes = {n for n in names if names.count(n) > 1}
    if dupes:
        raise ModelError(f"duplicate field {fq}.{sorted(dupes)[0]}")
    return ClassModel(fq, decl, tuple(others), tuple(methods), tuple(nested), tuple(markers))


def parse_source(text: str, path: str = "") -> SourceFile:
    tree = parse_text(text, path)
    seen: set[str] = set()
    classes = []
    for decl in tree.classes:
        model = build_class_model(decl)
        for c in model.walk():
            if c.name in seen:
                raise ModelError(f"{path}: duplicate class name {c.name}")
            seen.add(c.name)
        classes.append(model)
    return SourceFile(path, text, tree, tuple(classes))


def pretty_print(src: SourceFile) -> str:
    return file_to_str(src.ast)
