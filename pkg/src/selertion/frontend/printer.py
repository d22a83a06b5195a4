"""Canonical pretty printer.

The output is a pure function of the tree: comments are gone, indentation is
four spaces, every member and statement sits on its own line. Checksums,
instrumented copies and rewritten tests are all produced through here, so the
format must stay stable.
"""

from __future__ import annotations

from selertion.frontend import ast as A

INDENT = "    "

_PREC = {
    "||": 1, "&&": 2, "==": 3, "!=": 3,
    "<": 4, "<=": 4, ">": 4, ">=": 4,
    "+": 5, "-": 5, "*": 6, "/": 6, "%": 6,
}
_UNARY_PREC = 7


def _quote(s: str) -> str:
    out = s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t")
    return f'"{out}"'


def format_float(v: float) -> str:
    text = repr(float(v))
    if text in ("inf", "-inf", "nan"):
        raise ValueError(f"non-finite float literal {text}")
    return text


def expr_to_str(e: A.Expr, parent_prec: int = 0) -> str:
    if isinstance(e, A.IntLit):
        return str(e.value)
    if isinstance(e, A.FloatLit):
        return format_float(e.value)
    if isinstance(e, A.StrLit):
        return _quote(e.value)
    if isinstance(e, A.BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, A.NullLit):
        return "null"
    if isinstance(e, A.Name):
        return e.ident
    if isinstance(e, A.This):
        return "this"
    if isinstance(e, A.New):
        return f"new {e.cls}({_args(e.args)})"
    if isinstance(e, A.Call):
        if e.target is None:
            return f"{e.name}({_args(e.args)})"
        return f"{_postfix_target(e.target)}.{e.name}({_args(e.args)})"
    if isinstance(e, A.FieldAccess):
        return f"{_postfix_target(e.target)}.{e.name}"
    if isinstance(e, A.ListLit):
        return f"[{_args(e.items)}]"
    if isinstance(e, A.TupleLit):
        return f"({_args(e.items)})"
    if isinstance(e, A.Unary):
        inner = expr_to_str(e.operand, _UNARY_PREC)
        if isinstance(e.operand, A.Unary) or (isinstance(e.operand, (A.IntLit, A.FloatLit)) and inner.startswith("-")):
            inner = f"({inner})"
        text = f"{e.op}{inner}"
        return f"({text})" if parent_prec > _UNARY_PREC else text
    if isinstance(e, A.Binary):
        prec = _PREC[e.op]
        left = expr_to_str(e.left, prec)
        # left-associative: an equal-precedence right operand needs parentheses
        right = expr_to_str(e.right, prec + 1)
        text = f"{left} {e.op} {right}"
        return f"({text})" if prec < parent_prec else text
    raise TypeError(f"cannot print {type(e).__name__}")


def _postfix_target(e: A.Expr) -> str:
    text = expr_to_str(e, _UNARY_PREC + 1)
    if isinstance(e, (A.IntLit, A.FloatLit)) and not text.startswith("("):
        return f"({text})"
    return text


def _args(args) -> str:
    return ", ".join(expr_to_str(a) for a in args)


def simple_stmt_to_str(s: A.Stmt) -> str:
    if isinstance(s, A.VarDecl):
        if s.init is None:
            return f"{s.type} {s.name}"
        return f"{s.type} {s.name} = {expr_to_str(s.init)}"
    if isinstance(s, A.Assign):
        return f"{expr_to_str(s.target)} {s.op} {expr_to_str(s.value)}"
    if isinstance(s, A.ExprStmt):
        return expr_to_str(s.expr)
    raise TypeError(f"not a simple statement: {type(s).__name__}")


def stmt_lines(s: A.Stmt, depth: int = 0) -> list[str]:
    pad = INDENT * depth
    if isinstance(s, (A.VarDecl, A.Assign, A.ExprStmt)):
        return [f"{pad}{simple_stmt_to_str(s)};"]
    if isinstance(s, A.AssertStmt):
        return [f"{pad}{s.kind}({_args(s.args)});"]
    if isinstance(s, A.Return):
        if s.value is None:
            return [f"{pad}return;"]
        return [f"{pad}return {expr_to_str(s.value)};"]
    if isinstance(s, A.If):
        lines = [f"{pad}if ({expr_to_str(s.cond)}) {{"]
        lines += block_lines(s.then, depth + 1)
        orelse = s.orelse
        while orelse is not None:
            if len(orelse) == 1 and isinstance(orelse[0], A.If):
                nested = orelse[0]
                lines.append(f"{pad}}} else if ({expr_to_str(nested.cond)}) {{")
                lines += block_lines(nested.then, depth + 1)
                orelse = nested.orelse
            else:
                lines.append(f"{pad}}} else {{")
                lines += block_lines(orelse, depth + 1)
                orelse = None
        lines.append(f"{pad}}}")
        return lines
    if isinstance(s, A.While):
        return ([f"{pad}while ({expr_to_str(s.cond)}) {{"]
                + block_lines(s.body, depth + 1) + [f"{pad}}}"])
    if isinstance(s, A.For):
        init = simple_stmt_to_str(s.init) if s.init is not None else ""
        cond = expr_to_str(s.cond) if s.cond is not None else ""
        update = simple_stmt_to_str(s.update) if s.update is not None else ""
        return ([f"{pad}for ({init}; {cond}; {update}) {{"]
                + block_lines(s.body, depth + 1) + [f"{pad}}}"])
    if isinstance(s, A.TraceScope):
        return ([f"{pad}trace.scope({_quote(s.entity)}) {{"]
                + block_lines(s.body, depth + 1) + [f"{pad}}}"])
    raise TypeError(f"cannot print {type(s).__name__}")


def block_lines(stmts, depth: int) -> list[str]:
    out: list[str] = []
    for s in stmts:
        out += stmt_lines(s, depth)
    return out


def stmt_to_str(s: A.Stmt) -> str:
    return "\n".join(stmt_lines(s))


def annotation_to_str(a: A.Annotation) -> str:
    if not a.args:
        return f"@{a.name}"
    parts = []
    for key, value in a.args:
        if isinstance(value, bool):
            text = "true" if value else "false"
        elif isinstance(value, str):
            text = value if value.isidentifier() else _quote(value)
        elif isinstance(value, float):
            text = format_float(value)
        else:
            text = str(value)
        parts.append(f"{key}={text}")
    return f"@{a.name}({', '.join(parts)})"


def field_to_str(f: A.FieldDecl) -> str:
    head = "static " if f.static else ""
    if f.init is None:
        return f"{head}{f.type} {f.name};"
    return f"{head}{f.type} {f.name} = {expr_to_str(f.init)};"


def method_lines(m: A.MethodDecl, depth: int = 0) -> list[str]:
    pad = INDENT * depth
    lines = [pad + annotation_to_str(a) for a in m.annotations]
    params = ", ".join(f"{p.type} {p.name}" for p in m.params)
    head = "static " if m.static else ""
    if m.ret_type is None:
        lines.append(f"{pad}{m.name}({params}) {{")
    else:
        lines.append(f"{pad}{head}{m.ret_type} {m.name}({params}) {{")
    lines += block_lines(m.body, depth + 1)
    lines.append(f"{pad}}}")
    return lines


def method_to_str(m: A.MethodDecl) -> str:
    return "\n".join(method_lines(m))


def class_head_to_str(c: A.ClassDecl) -> str:
    parts = [annotation_to_str(a) for a in c.annotations]
    head = f"{c.kind} {c.name}"
    if c.superclass:
        head += f" extends {c.superclass}"
    parts.append(head)
    return "\n".join(parts)


def member_lines(m, depth: int) -> list[str]:
    pad = INDENT * depth
    if isinstance(m, A.FieldDecl):
        return [pad + field_to_str(m)]
    if isinstance(m, A.MethodDecl):
        return method_lines(m, depth)
    if isinstance(m, A.ClassDecl):
        return class_lines(m, depth)
    if isinstance(m, A.EnumConsts):
        return [f"{pad}{', '.join(m.names)};"]
    if isinstance(m, A.TraceMarker):
        return [f"{pad}trace.{m.kind}({_quote(m.entity)});"]
    raise TypeError(f"cannot print member {type(m).__name__}")


def class_lines(c: A.ClassDecl, depth: int = 0) -> list[str]:
    pad = INDENT * depth
    lines = [pad + a for a in map(annotation_to_str, c.annotations)]
    head = f"{pad}{c.kind} {c.name}"
    if c.superclass:
        head += f" extends {c.superclass}"
    lines.append(head + " {")
    for m in c.members:
        lines += member_lines(m, depth + 1)
    lines.append(f"{pad}}}")
    return lines


def file_to_str(f: A.FileAST) -> str:
    if not f.classes:
        return ""
    chunks = ["\n".join(class_lines(c)) for c in f.classes]
    return "\n\n".join(chunks) + "\n"
