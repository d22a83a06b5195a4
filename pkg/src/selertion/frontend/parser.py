"""Recursive-descent parser for MiniJ."""

from __future__ import annotations

from selertion.errors import MiniJSyntaxError
from selertion.frontend import ast as A
from selertion.frontend.lexer import Token, tokenize

_BINARY_LEVELS = (
    ("||",),
    ("&&",),
    ("==", "!="),
    ("<", "<=", ">", ">="),
    ("+", "-"),
    ("*", "/", "%"),
)
ASSIGN_OPS = ("=", "+=", "-=", "*=", "/=")
RESERVED_NAMES = A.BUILTIN_NAMESPACES | A.BUILTIN_FUNCTIONS | A.ASSERT_NAMES


class Parser:
    def __init__(self, text: str, path: str = ""):
        self.path = path
        self.toks = tokenize(text, path)
        self.i = 0

    # ------------------------------------------------------------ token utils

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def advance(self) -> Token:
        t = self.toks[self.i]
        if t.kind != "EOF":
            self.i += 1
        return t

    def error(self, expected: str, tok: Token | None = None) -> MiniJSyntaxError:
        tok = tok or self.tok
        found = tok.text if tok.kind != "EOF" else "end of file"
        return MiniJSyntaxError(f"expected {expected}, found {found!r}", self.path, tok.line, tok.col)

    def expect_op(self, text: str) -> Token:
        if not self.tok.is_op(text):
            raise self.error(repr(text))
        return self.advance()

    def expect_kw(self, text: str) -> Token:
        if not self.tok.is_kw(text):
            raise self.error(repr(text))
        return self.advance()

    def expect_ident(self, what: str = "identifier") -> Token:
        if self.tok.kind != "IDENT":
            raise self.error(what)
        return self.advance()

    def pos(self, tok: Token | None = None) -> A.Pos:
        tok = tok or self.tok
        return A.Pos(tok.line, tok.col)

    # ------------------------------------------------------------------ file

    def parse_file(self) -> A.FileAST:
        classes = []
        while self.tok.kind != "EOF":
            classes.append(self.parse_class())
        return A.FileAST(tuple(classes))

    def parse_annotations(self) -> tuple[A.Annotation, ...]:
        out = []
        while self.tok.is_op("@"):
            at = self.advance()
            name = self.expect_ident("annotation name").text
            args = []
            if self.tok.is_op("("):
                self.advance()
                while True:
                    key = self.expect_ident("annotation key").text
                    self.expect_op("=")
                    args.append((key, self.parse_annotation_value()))
                    if self.tok.is_op(","):
                        self.advance()
                        continue
                    break
                self.expect_op(")")
            out.append(A.Annotation(name, tuple(args), self.pos(at)))
        return tuple(out)

    def parse_annotation_value(self):
        t = self.tok
        if t.kind in ("IDENT", "STRING", "INT", "FLOAT"):
            self.advance()
            return t.text if t.kind == "IDENT" else t.value
        if t.is_kw("true") or t.is_kw("false"):
            self.advance()
            return t.text == "true"
        raise self.error("annotation value")

    def parse_class(self, annotations=None) -> A.ClassDecl:
        start = self.tok
        if annotations is None:
            annotations = self.parse_annotations()
        if self.tok.is_kw("class") or self.tok.is_kw("enum"):
            kind = self.advance().text
        else:
            raise self.error("'class' or 'enum'")
        name = self.expect_ident("class name").text
        superclass = None
        if self.tok.is_kw("extends"):
            self.advance()
            superclass = self.expect_ident("superclass name").text
        self.expect_op("{")
        members = []
        if kind == "enum" and self.tok.kind == "IDENT" and (self.peek().is_op(",") or self.peek().is_op(";")):
            members.append(self.parse_enum_consts())
        while not self.tok.is_op("}"):
            if self.tok.kind == "EOF":
                raise self.error("'}'")
            members.append(self.parse_member(name))
        self.expect_op("}")
        return A.ClassDecl(annotations, kind, name, superclass, tuple(members), self.pos(start))

    def parse_enum_consts(self) -> A.EnumConsts:
        start = self.tok
        names = [self.expect_ident().text]
        while self.tok.is_op(","):
            self.advance()
            names.append(self.expect_ident("enum constant").text)
        self.expect_op(";")
        return A.EnumConsts(tuple(names), self.pos(start))

    def parse_member(self, class_name: str):
        start = self.tok
        if start.kind == "IDENT" and start.text == "trace" and self.peek().is_op("."):
            return self.parse_trace_marker()
        annotations = self.parse_annotations()
        if self.tok.is_kw("class") or self.tok.is_kw("enum"):
            return self.parse_class(annotations)
        static = False
        if self.tok.is_kw("static"):
            self.advance()
            static = True
        # constructor: ClassName "("
        if self.tok.kind == "IDENT" and self.tok.text == class_name and self.peek().is_op("("):
            name_tok = self.advance()
            if static:
                raise MiniJSyntaxError("constructors cannot be static", self.path, name_tok.line, name_tok.col)
            params = self.parse_params()
            body = self.parse_block()
            return A.MethodDecl(annotations, False, None, name_tok.text, params, body, self.pos(start))
        if self.tok.is_kw("void"):
            self.advance()
            type_name = "void"
        else:
            type_name = self.expect_ident("type").text
        name_tok = self.expect_ident("member name")
        if self.tok.is_op("("):
            params = self.parse_params()
            body = self.parse_block()
            return A.MethodDecl(annotations, static, type_name, name_tok.text, params, body, self.pos(start))
        if annotations:
            raise MiniJSyntaxError("annotations are only allowed on classes and methods",
                                   self.path, start.line, start.col)
        if type_name == "void":
            raise self.error("'('")
        init = None
        if self.tok.is_op("="):
            self.advance()
            init = self.parse_expr()
        self.expect_op(";")
        return A.FieldDecl(static, type_name, name_tok.text, init, self.pos(start))

    def parse_trace_marker(self) -> A.TraceMarker:
        start = self.advance()
        self.expect_op(".")
        kind = self.expect_ident("'begin' or 'end'").text
        if kind not in ("begin", "end"):
            raise self.error("'begin' or 'end'")
        self.expect_op("(")
        if self.tok.kind != "STRING":
            raise self.error("entity string")
        entity = self.advance().value
        self.expect_op(")")
        self.expect_op(";")
        return A.TraceMarker(kind, entity, self.pos(start))

    def parse_params(self) -> tuple[A.Param, ...]:
        self.expect_op("(")
        params = []
        if not self.tok.is_op(")"):
            while True:
                ptype = self.expect_ident("parameter type").text
                pname = self.expect_ident("parameter name").text
                params.append(A.Param(ptype, pname))
                if self.tok.is_op(","):
                    self.advance()
                    continue
                break
        self.expect_op(")")
        return tuple(params)

    # ------------------------------------------------------------ statements

    def parse_block(self) -> tuple[A.Stmt, ...]:
        self.expect_op("{")
        out = []
        while not self.tok.is_op("}"):
            if self.tok.kind == "EOF":
                raise self.error("'}'")
            out.append(self.parse_stmt())
        self.expect_op("}")
        return tuple(out)

    def parse_stmt(self) -> A.Stmt:
        t = self.tok
        p = self.pos(t)
        if t.is_kw("return"):
            self.advance()
            value = None if self.tok.is_op(";") else self.parse_expr()
            self.expect_op(";")
            return A.Return(value, p)
        if t.is_kw("if"):
            return self.parse_if()
        if t.is_kw("while"):
            self.advance()
            self.expect_op("(")
            cond = self.parse_expr()
            self.expect_op(")")
            return A.While(cond, self.parse_block(), p)
        if t.is_kw("for"):
            return self.parse_for()
        if t.kind == "IDENT" and t.text in A.ASSERT_NAMES and self.peek().is_op("("):
            self.advance()
            args = self.parse_args()
            self.expect_op(";")
            return A.AssertStmt(t.text, args, p)
        if (t.kind == "IDENT" and t.text == "trace" and self.peek().is_op(".")
                and self.peek(2).kind == "IDENT" and self.peek(2).text == "scope"):
            self.advance()
            self.advance()
            self.advance()
            self.expect_op("(")
            if self.tok.kind != "STRING":
                raise self.error("entity string")
            entity = self.advance().value
            self.expect_op(")")
            return A.TraceScope(entity, self.parse_block(), p)
        stmt = self.parse_simple_stmt()
        self.expect_op(";")
        return stmt

    def parse_simple_stmt(self) -> A.Stmt:
        """varDecl, assignment or expression statement, without the ';'."""
        t = self.tok
        p = self.pos(t)
        if t.kind == "IDENT" and self.peek().kind == "IDENT":
            self.advance()
            name_tok = self.advance()
            if name_tok.text in RESERVED_NAMES:
                raise MiniJSyntaxError(f"{name_tok.text!r} is reserved", self.path, name_tok.line, name_tok.col)
            init = None
            if self.tok.is_op("="):
                self.advance()
                init = self.parse_expr()
            return A.VarDecl(t.text, name_tok.text, init, p)
        expr = self.parse_expr()
        if self.tok.kind == "OP" and self.tok.text in ASSIGN_OPS:
            op_tok = self.advance()
            if not isinstance(expr, (A.Name, A.FieldAccess)):
                raise MiniJSyntaxError("invalid assignment target", self.path, op_tok.line, op_tok.col)
            value = self.parse_expr()
            return A.Assign(expr, op_tok.text, value, p)
        if not isinstance(expr, (A.Call, A.New)):
            raise MiniJSyntaxError("expression statement must be a call", self.path, t.line, t.col)
        return A.ExprStmt(expr, p)

    def parse_if(self) -> A.If:
        p = self.pos()
        self.expect_kw("if")
        self.expect_op("(")
        cond = self.parse_expr()
        self.expect_op(")")
        then = self.parse_block()
        orelse = None
        if self.tok.is_kw("else"):
            self.advance()
            if self.tok.is_kw("if"):
                orelse = (self.parse_if(),)
            else:
                orelse = self.parse_block()
        return A.If(cond, then, orelse, p)

    def parse_for(self) -> A.For:
        p = self.pos()
        self.expect_kw("for")
        self.expect_op("(")
        init = None if self.tok.is_op(";") else self.parse_simple_stmt()
        self.expect_op(";")
        cond = None if self.tok.is_op(";") else self.parse_expr()
        self.expect_op(";")
        update = None if self.tok.is_op(")") else self.parse_simple_stmt()
        self.expect_op(")")
        return A.For(init, cond, update, self.parse_block(), p)

    # ----------------------------------------------------------- expressions

    def parse_expr(self, level: int = 0) -> A.Expr:
        if level == len(_BINARY_LEVELS):
            return self.parse_unary()
        left = self.parse_expr(level + 1)
        ops = _BINARY_LEVELS[level]
        while self.tok.kind == "OP" and self.tok.text in ops:
            op_tok = self.advance()
            right = self.parse_expr(level + 1)
            left = A.Binary(op_tok.text, left, right, self.pos(op_tok))
        return left

    def parse_unary(self) -> A.Expr:
        if self.tok.is_op("-") or self.tok.is_op("!"):
            op_tok = self.advance()
            return A.Unary(op_tok.text, self.parse_unary(), self.pos(op_tok))
        return self.parse_postfix()

    def parse_postfix(self) -> A.Expr:
        expr = self.parse_primary()
        while self.tok.is_op("."):
            self.advance()
            name_tok = self.expect_ident("member name")
            if self.tok.is_op("("):
                expr = A.Call(expr, name_tok.text, self.parse_args(), self.pos(name_tok))
            else:
                expr = A.FieldAccess(expr, name_tok.text, self.pos(name_tok))
        return expr

    def parse_args(self) -> tuple[A.Expr, ...]:
        self.expect_op("(")
        args = []
        if not self.tok.is_op(")"):
            while True:
                args.append(self.parse_expr())
                if self.tok.is_op(","):
                    self.advance()
                    continue
                break
        self.expect_op(")")
        return tuple(args)

    def parse_primary(self) -> A.Expr:
        t = self.tok
        p = self.pos(t)
        if t.kind == "INT":
            self.advance()
            return A.IntLit(t.value, p)
        if t.kind == "FLOAT":
            self.advance()
            return A.FloatLit(t.value, p)
        if t.kind == "STRING":
            self.advance()
            return A.StrLit(t.value, p)
        if t.is_kw("true") or t.is_kw("false"):
            self.advance()
            return A.BoolLit(t.text == "true", p)
        if t.is_kw("null"):
            self.advance()
            return A.NullLit(p)
        if t.is_kw("this"):
            self.advance()
            return A.This(p)
        if t.is_kw("new"):
            self.advance()
            cls = self.expect_ident("class name").text
            return A.New(cls, self.parse_args(), p)
        if t.kind == "IDENT":
            self.advance()
            if self.tok.is_op("("):
                return A.Call(None, t.text, self.parse_args(), p)
            return A.Name(t.text, p)
        if t.is_op("("):
            self.advance()
            first = self.parse_expr()
            if self.tok.is_op(","):
                items = [first]
                while self.tok.is_op(","):
                    self.advance()
                    items.append(self.parse_expr())
                self.expect_op(")")
                return A.TupleLit(tuple(items), p)
            self.expect_op(")")
            return first
        if t.is_op("["):
            self.advance()
            items = []
            if not self.tok.is_op("]"):
                while True:
                    items.append(self.parse_expr())
                    if self.tok.is_op(","):
                        self.advance()
                        continue
                    break
            self.expect_op("]")
            return A.ListLit(tuple(items), p)
        raise self.error("expression")


def parse_text(text: str, path: str = "") -> A.FileAST:
    return Parser(text, path).parse_file()
