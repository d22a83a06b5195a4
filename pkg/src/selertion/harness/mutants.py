"""Seeded first-order mutants of production code.

Sites are enumerated in a fixed pre-order over every production method.
A seed picks one site through a seed-dependent permutation, so consecutive
seeds walk through distinct sites before any repeats.
"""

from __future__ import annotations

import dataclasses
import random
from dataclasses import dataclass
from typing import Optional

from selertion.errors import MutationError
from selertion.fingerprint import revision_id, smart_checksum
from selertion.frontend import ast as A
from selertion.frontend.model import StatementId, parse_source
from selertion.frontend.printer import file_to_str
from selertion.frontend.project import Project

ARITHMETIC = "arithmeticOpReplace"
RELATIONAL = "relationalOpReplace"
CONSTANT = "constantReplace"
DELETE = "statementDelete"
OPERATORS = (ARITHMETIC, RELATIONAL, CONSTANT, DELETE)

_ARITH_SWAP = {"+": "-", "-": "+", "*": "/", "/": "*", "%": "*"}
_REL_SWAP = {"<": "<=", "<=": "<", ">": ">=", ">=": ">", "==": "!=", "!=": "=="}


@dataclass(frozen=True)
class Site:
    path: str
    class_fq: str
    method_index: int  # position among the class's members
    method_sig: str  # full signature
    ordinal: int  # top-level statement holding the site
    node: int  # pre-order index inside the method
    op: str

    @property
    def location(self) -> StatementId:
        return StatementId(self.class_fq, self.method_sig[len(self.class_fq) + 1:], self.ordinal)


@dataclass(frozen=True)
class MutatedRevision:
    base_revision: str
    op: str
    location: StatementId
    site: Site
    seed: int
    tree: dict  # path -> source text of the mutant
    description: str

    @property
    def key(self) -> tuple:
        return (self.op, self.site.method_sig, self.site.node)


def _is_node(v) -> bool:
    return isinstance(v, (A.Expr, A.Stmt))


def _site_ops(node, in_block: bool) -> list[str]:
    ops = []
    if isinstance(node, A.Binary) and node.op in _ARITH_SWAP:
        ops.append(ARITHMETIC)
    if isinstance(node, A.Unary) and node.op == "-":
        ops.append(ARITHMETIC)
    if isinstance(node, A.Binary) and node.op in _REL_SWAP:
        ops.append(RELATIONAL)
    if isinstance(node, (A.IntLit, A.FloatLit, A.BoolLit)):
        ops.append(CONSTANT)
    if in_block and isinstance(node, (A.Assign, A.ExprStmt)):
        ops.append(DELETE)
    return ops


def _mutate_node(node, op: str):
    if op == ARITHMETIC:
        if isinstance(node, A.Unary):
            return node.operand
        return dataclasses.replace(node, op=_ARITH_SWAP[node.op])
    if op == RELATIONAL:
        return dataclasses.replace(node, op=_REL_SWAP[node.op])
    if op == CONSTANT:
        if isinstance(node, A.BoolLit):
            return A.BoolLit(not node.value)
        if isinstance(node, A.IntLit):
            return A.IntLit(node.value + 1)
        return A.FloatLit(node.value + 1.0)
    raise MutationError(f"cannot apply {op} to {type(node).__name__}")


class _Walker:
    """Pre-order walk over a method body that numbers every node.

    With a target it also rebuilds the body with that one node mutated (or
    removed, for statement deletion); the numbering is the same either way.
    """

    def __init__(self, target: Optional[int] = None, op: Optional[str] = None):
        self.target = target
        self.op = op
        self.counter = 0
        self.applied = False
        self.found: list[tuple[int, int, list[str]]] = []  # (node, ordinal, ops)
        self.ordinal = 0

    def body(self, stmts) -> tuple:
        out = []
        for i, s in enumerate(stmts):
            self.ordinal = i
            out += self.block_item(s)
        return tuple(out)

    def block(self, stmts) -> tuple:
        out = []
        for s in stmts:
            out += self.block_item(s)
        return tuple(out)

    def block_item(self, stmt) -> list:
        here = self.counter
        new = self.visit(stmt, in_block=True)
        if here == self.target and self.op == DELETE:
            self.applied = True
            return []
        return [new]

    def visit(self, node, in_block: bool = False):
        here = self.counter
        self.counter += 1
        self.found.append((here, self.ordinal, _site_ops(node, in_block)))
        changes = {}
        for f in dataclasses.fields(node):
            v = getattr(node, f.name)
            if _is_node(v):
                changes[f.name] = self.visit(v)
            elif isinstance(v, tuple) and v and _is_node(v[0]):
                changes[f.name] = self.block(v) if isinstance(v[0], A.Stmt) else tuple(self.visit(x) for x in v)
        new = dataclasses.replace(node, **changes) if changes else node
        if here == self.target and self.op != DELETE:
            self.applied = True
            return _mutate_node(new, self.op)
        return new


def enumerate_sites(project: Project) -> list[Site]:
    sites = []
    for f in project.files:
        if f.is_test:
            continue
        for c in f.all_classes():
            for idx, member in enumerate(c.decl.members):
                if not isinstance(member, A.MethodDecl):
                    continue
                sig = f"{c.fq_name}.{member.name}({','.join(p.type for p in member.params)})"
                walker = _Walker()
                walker.body(member.body)
                for n, ordinal, ops in walker.found:
                    sites += [Site(f.path, c.fq_name, idx, sig, ordinal, n, op) for op in ops]
    return sites


def apply_site(project: Project, site: Site) -> dict[str, str]:
    """Source tree of ``project`` with the mutation at ``site`` applied."""
    tree = {f.path: f.text for f in project.files}
    src = next(f for f in project.files if f.path == site.path)

    def rebuild(decl: A.ClassDecl, fq: str) -> A.ClassDecl:
        members = list(decl.members)
        if fq == site.class_fq:
            m = members[site.method_index]
            rw = _Walker(site.node, site.op)
            body = rw.body(m.body)
            if not rw.applied:
                raise MutationError(f"site {site} not found")
            members[site.method_index] = dataclasses.replace(m, body=body)
        for i, mem in enumerate(members):
            if isinstance(mem, A.ClassDecl):
                members[i] = rebuild(mem, f"{fq}.{mem.name}")
        return dataclasses.replace(decl, members=tuple(members))

    new_ast = A.FileAST(tuple(rebuild(c, c.name) for c in src.ast.classes))
    text = file_to_str(new_ast)
    parse_source(text, site.path)  # a mutant must still parse
    tree[site.path] = text
    return tree


def site_groups(sites: list[Site]) -> dict[tuple[str, StatementId], list[Site]]:
    """Sites grouped by (operator, statement), in enumeration order."""
    groups: dict[tuple[str, StatementId], list[Site]] = {}
    for s in sites:
        groups.setdefault((s.op, s.location), []).append(s)
    return groups


def _pick(n: int, seed: int) -> tuple[int, int]:
    """Index into ``n`` choices and the round number for ``seed``.

    Each round of ``n`` consecutive seeds is a fresh permutation, so the
    seeds of one round never repeat a choice.
    """
    order = list(range(n))
    random.Random(seed // n).shuffle(order)
    return order[seed % n], seed // n


def pick_site(sites: list[Site], seed: int) -> Site:
    groups = list(site_groups(sites).values())
    idx, rnd = _pick(len(groups), seed)
    group = groups[idx]
    return group[rnd % len(group)]


def _mutant(project: Project, site: Site, seed: int) -> MutatedRevision:
    tree = apply_site(project, site)
    base = revision_id({f.path: smart_checksum(f) for f in project.files})
    desc = f"{site.op} at {site.method_sig} statement {site.ordinal} node {site.node}"
    return MutatedRevision(base, site.op, site.location, site, seed, tree, desc)


def generate_mutant(project: Project, seed: int) -> MutatedRevision:
    """Deterministic mutant for ``seed``; distinct (operator, statement)
    pairs come up before any pair repeats."""
    sites = enumerate_sites(project)
    if not sites:
        raise MutationError("no mutable site in production code")
    return _mutant(project, pick_site(sites, seed), seed)


def corpus_mutant(projects: dict[str, Project], seed: int) -> tuple[str, MutatedRevision]:
    """Mutant of one of several projects, drawn from their pooled
    (operator, statement) pairs so that seeds spread over all of them."""
    pool = []
    for name in sorted(projects):
        for group in site_groups(enumerate_sites(projects[name])).values():
            pool.append((name, group))
    if not pool:
        raise MutationError("no mutable site in production code")
    idx, rnd = _pick(len(pool), seed)
    name, group = pool[idx]
    return name, _mutant(projects[name], group[rnd % len(group)], seed)


def find_site(project: Project, method_sig: str, op: str, nth: int = 0) -> Optional[Site]:
    hits = [s for s in enumerate_sites(project) if s.method_sig == method_sig and s.op == op]
    return hits[nth] if nth < len(hits) else None
