"""MiniJ syntax tree.

Nodes are frozen dataclasses holding tuples, so trees are hashable and can be
shared between revisions. Source positions never take part in equality:
two trees that print identically compare equal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

PRIMITIVE_TYPES = frozenset({"int", "float", "bool", "string"})
ASSERT_NAMES = frozenset({"assertEq", "assertTrue", "assertNear"})
BUILTIN_NAMESPACES = frozenset({"math", "sys", "trace"})
BUILTIN_FUNCTIONS = frozenset({"print", "throw"})


@dataclass(frozen=True)
class Pos:
    line: int = 0
    col: int = 0


def _pos() -> Pos:
    return field(default=Pos(), compare=False, repr=False)


# ---------------------------------------------------------------- expressions

class Expr:
    pass


@dataclass(frozen=True)
class IntLit(Expr):
    value: int
    pos: Pos = _pos()


@dataclass(frozen=True)
class FloatLit(Expr):
    value: float
    pos: Pos = _pos()


@dataclass(frozen=True)
class StrLit(Expr):
    value: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class BoolLit(Expr):
    value: bool
    pos: Pos = _pos()


@dataclass(frozen=True)
class NullLit(Expr):
    pos: Pos = _pos()


@dataclass(frozen=True)
class Name(Expr):
    ident: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class This(Expr):
    pos: Pos = _pos()


@dataclass(frozen=True)
class New(Expr):
    cls: str
    args: tuple[Expr, ...]
    pos: Pos = _pos()


@dataclass(frozen=True)
class Call(Expr):
    """Method invocation; ``target`` is None for unqualified calls."""

    target: Optional[Expr]
    name: str
    args: tuple[Expr, ...]
    pos: Pos = _pos()


@dataclass(frozen=True)
class FieldAccess(Expr):
    target: Expr
    name: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class Unary(Expr):
    op: str
    operand: Expr
    pos: Pos = _pos()


@dataclass(frozen=True)
class Binary(Expr):
    op: str
    left: Expr
    right: Expr
    pos: Pos = _pos()


@dataclass(frozen=True)
class ListLit(Expr):
    items: tuple[Expr, ...]
    pos: Pos = _pos()


@dataclass(frozen=True)
class TupleLit(Expr):
    items: tuple[Expr, ...]
    pos: Pos = _pos()


# ----------------------------------------------------------------- statements

class Stmt:
    pass


@dataclass(frozen=True)
class VarDecl(Stmt):
    type: str
    name: str
    init: Optional[Expr]
    pos: Pos = _pos()


@dataclass(frozen=True)
class Assign(Stmt):
    target: Expr  # Name or FieldAccess
    op: str  # "=", "+=", "-=", "*=", "/="
    value: Expr
    pos: Pos = _pos()


@dataclass(frozen=True)
class ExprStmt(Stmt):
    expr: Expr
    pos: Pos = _pos()


@dataclass(frozen=True)
class AssertStmt(Stmt):
    kind: str
    args: tuple[Expr, ...]
    pos: Pos = _pos()


@dataclass(frozen=True)
class Return(Stmt):
    value: Optional[Expr]
    pos: Pos = _pos()


@dataclass(frozen=True)
class If(Stmt):
    cond: Expr
    then: tuple[Stmt, ...]
    orelse: Optional[tuple[Stmt, ...]]
    pos: Pos = _pos()


@dataclass(frozen=True)
class While(Stmt):
    cond: Expr
    body: tuple[Stmt, ...]
    pos: Pos = _pos()


@dataclass(frozen=True)
class For(Stmt):
    init: Optional[Stmt]
    cond: Optional[Expr]
    update: Optional[Stmt]
    body: tuple[Stmt, ...]
    pos: Pos = _pos()


@dataclass(frozen=True)
class TraceScope(Stmt):
    """Instrumentation intrinsic: opens a dependency scope around ``body``.

    The body shares the enclosing variable scope and the scope is closed on
    every exit path, exceptional ones included.
    """

    entity: str
    body: tuple[Stmt, ...]
    pos: Pos = _pos()


# -------------------------------------------------------------------- members

AnnotationValue = Union[str, int, float, bool]


@dataclass(frozen=True)
class Annotation:
    name: str
    args: tuple[tuple[str, AnnotationValue], ...] = ()
    pos: Pos = _pos()

    def get(self, key: str, default=None):
        for k, v in self.args:
            if k == key:
                return v
        return default


@dataclass(frozen=True)
class Param:
    type: str
    name: str


@dataclass(frozen=True)
class FieldDecl:
    static: bool
    type: str
    name: str
    init: Optional[Expr]
    pos: Pos = _pos()


@dataclass(frozen=True)
class MethodDecl:
    annotations: tuple[Annotation, ...]
    static: bool
    ret_type: Optional[str]  # None marks a constructor
    name: str
    params: tuple[Param, ...]
    body: tuple[Stmt, ...]
    pos: Pos = _pos()

    @property
    def is_constructor(self) -> bool:
        return self.ret_type is None

    def annotation(self, name: str) -> Optional[Annotation]:
        for a in self.annotations:
            if a.name == name:
                return a
        return None


@dataclass(frozen=True)
class EnumConsts:
    names: tuple[str, ...]
    pos: Pos = _pos()


@dataclass(frozen=True)
class TraceMarker:
    """Class-body instrumentation marker (``trace.begin``/``trace.end``)."""

    kind: str  # "begin" | "end"
    entity: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class ClassDecl:
    annotations: tuple[Annotation, ...]
    kind: str  # "class" | "enum"
    name: str
    superclass: Optional[str]
    members: tuple  # FieldDecl | MethodDecl | ClassDecl | EnumConsts | TraceMarker
    pos: Pos = _pos()

    def annotation(self, name: str) -> Optional[Annotation]:
        for a in self.annotations:
            if a.name == name:
                return a
        return None


@dataclass(frozen=True)
class FileAST:
    classes: tuple[ClassDecl, ...]


# -------------------------------------------------------------------- helpers

def child_exprs(e: Expr) -> tuple[Expr, ...]:
    if isinstance(e, (New, ListLit, TupleLit)):
        return e.args if isinstance(e, New) else e.items
    if isinstance(e, Call):
        return ((e.target,) if e.target is not None else ()) + e.args
    if isinstance(e, FieldAccess):
        return (e.target,)
    if isinstance(e, Unary):
        return (e.operand,)
    if isinstance(e, Binary):
        return (e.left, e.right)
    return ()


def walk_expr(e: Expr):
    yield e
    for c in child_exprs(e):
        yield from walk_expr(c)


def stmt_exprs(s: Stmt) -> tuple[Expr, ...]:
    """Expressions owned directly by ``s`` (not by nested statements)."""
    if isinstance(s, VarDecl):
        return (s.init,) if s.init is not None else ()
    if isinstance(s, Assign):
        return (s.target, s.value)
    if isinstance(s, ExprStmt):
        return (s.expr,)
    if isinstance(s, AssertStmt):
        return s.args
    if isinstance(s, Return):
        return (s.value,) if s.value is not None else ()
    if isinstance(s, (If, While)):
        return (s.cond,)
    if isinstance(s, For):
        return (s.cond,) if s.cond is not None else ()
    return ()


def child_stmts(s: Stmt) -> tuple[Stmt, ...]:
    if isinstance(s, If):
        return s.then + (s.orelse or ())
    if isinstance(s, While):
        return s.body
    if isinstance(s, For):
        head = tuple(x for x in (s.init, s.update) if x is not None)
        return head + s.body
    if isinstance(s, TraceScope):
        return s.body
    return ()


def walk_stmts(stmts):
    for s in stmts:
        yield s
        yield from walk_stmts(child_stmts(s))


def walk_stmt_exprs(stmts):
    for s in walk_stmts(stmts):
        for e in stmt_exprs(s):
            yield from walk_expr(e)


def builtin_namespace(e: Expr) -> Optional[str]:
    """``math``/``sys``/``trace`` when ``e`` is a call into a builtin namespace."""
    if isinstance(e, Call) and isinstance(e.target, Name) and e.target.ident in BUILTIN_NAMESPACES:
        return e.target.ident
    return None


def is_builtin_call(e: Expr) -> bool:
    if not isinstance(e, Call):
        return False
    if e.target is None:
        return e.name in BUILTIN_FUNCTIONS
    return builtin_namespace(e) is not None
