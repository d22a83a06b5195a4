"""Assertion slicing of test methods.

Each eligible test method gets a data-dependence graph over its top-level
statements. Any call is assumed to change its receiver and its arguments,
and objects that were ever linked (passed together to a call, or assigned
from one another) are treated as aliases from then on. Calls inside an
assertion count only when the callee may mutate (see ``mutating_names``),
so getters in one assertion do not pull it into the slices of later ones.
A slice is the backward closure of one assertion over that graph.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

from selertion.errors import SelectionError, StoreError
from selertion.frontend import ast as A
from selertion.frontend.model import ClassModel, MethodModel, Statement
from selertion.frontend.project import Project, TestInventory

ASSERTION_LEVEL = "assertion"
METHOD_LEVEL = "method"
CLASS_LEVEL = "class"

_RANK = {ASSERTION_LEVEL: 0, METHOD_LEVEL: 1, CLASS_LEVEL: 2}


@dataclass(frozen=True)
class SelectionLevel:
    level: str
    reason: str

    def __str__(self) -> str:
        return f"{self.level}Level({self.reason})"

    @property
    def rank(self) -> int:
        return _RANK[self.level]


def classify_selectability(inventory: TestInventory, class_fq: str,
                           method_sig: Optional[str] = None) -> SelectionLevel:
    """Granularity at which dependencies of a test class or method are traced.

    Without ``method_sig`` the coarsest level over the class's test methods
    is returned.
    """
    info = inventory.cls(class_fq)
    if info is None:
        raise SelectionError(f"unknown test class {class_fq}")
    feats = info.features
    if feats.parameterized:
        return SelectionLevel(CLASS_LEVEL, "parameterized")
    if feats.uses_inheritance:
        return SelectionLevel(CLASS_LEVEL, "inheritance")
    if feats.calls_other_tests:
        return SelectionLevel(CLASS_LEVEL, "callsOtherTests")
    if method_sig is None:
        levels = [classify_selectability(inventory, class_fq, m.short_sig) for m in info.test_methods]
        return max(levels, key=lambda lv: lv.rank, default=SelectionLevel(ASSERTION_LEVEL, "sliceable"))
    m = inventory.method(class_fq, method_sig)
    if m is None:
        raise SelectionError(f"unknown test method {class_fq}.{method_sig}")
    if m.expects_exception:
        return SelectionLevel(METHOD_LEVEL, "expectedException")
    if m.has_conditionals:
        return SelectionLevel(METHOD_LEVEL, "conditionals")
    if m.out_of_scope:
        return SelectionLevel(METHOD_LEVEL, "outOfScopeCall")
    if m.assertion_count == 0:
        return SelectionLevel(METHOD_LEVEL, "noAssertions")
    return SelectionLevel(ASSERTION_LEVEL, "sliceable")


def class_levels(inventory: TestInventory) -> dict[str, SelectionLevel]:
    """Levels of every test class and declared test method.

    Keys are entity-style: ``C=<class>`` for the class as a whole and
    ``M=<class>#<sig>`` for each declared test method.
    """
    out: dict[str, SelectionLevel] = {}
    for c in inventory.test_classes:
        out[f"C={c.class_fq}"] = classify_selectability(inventory, c.class_fq)
        for m in c.test_methods:
            out[f"M={c.class_fq}#{m.short_sig}"] = classify_selectability(inventory, c.class_fq, m.short_sig)
    return out


# ------------------------------------------------------------------ purity

# list builtins that change the receiver; "=" marks a field store
_MUTATING_BUILTINS = frozenset({"add", "set", "="})
_READING_BUILTINS = frozenset({"size", "get", "length", "equals"})


def _method_locals(decl: A.MethodDecl) -> set[str]:
    names = {p.name for p in decl.params}
    names |= {s.name for s in A.walk_stmts(decl.body) if isinstance(s, A.VarDecl)}
    return names


def _may_mutate(cls: ClassModel, m: MethodModel, known: set[str], mutating: set[str]) -> bool:
    local = _method_locals(m.decl)
    for s in A.walk_stmts(m.decl.body):
        if isinstance(s, A.Assign):
            tgt = s.target
            if isinstance(tgt, A.Name) and tgt.ident in local:
                continue
            own_field = isinstance(tgt, A.Name) or (isinstance(tgt, A.FieldAccess) and isinstance(tgt.target, A.This))
            if not (m.is_constructor and own_field):
                return True
    for e in A.walk_stmt_exprs(m.decl.body):
        if isinstance(e, A.Call):
            if A.is_builtin_call(e):
                continue
            if e.target is None and e.name == "super":
                if f"new {cls.decl.superclass}" in mutating:
                    return True
            elif e.name in mutating or e.name in _MUTATING_BUILTINS:
                return True
            elif e.name not in known and e.name not in _READING_BUILTINS:
                return True
        elif isinstance(e, A.New) and f"new {e.cls}" in mutating:
            return True
    return False


def mutating_names(project: Project) -> frozenset[str]:
    """Callee names that may change an object that existed before the call.

    Names are resolved without types, so a name counts as mutating when any
    method of that name does. Constructors appear as ``new <Class>``; they
    may set their own fields freely. Unknown callees count as mutating.
    """
    methods = [(c, m) for c in project.all_classes() for m in c.methods]
    known = {m.decl.name for _, m in methods}
    mutating: set[str] = set(_MUTATING_BUILTINS)
    changed = True
    while changed:
        changed = False
        for c, m in methods:
            keys = {f"new {c.decl.name}", f"new {c.fq_name}"} if m.is_constructor else {m.decl.name}
            if keys <= mutating:
                continue
            if _may_mutate(c, m, known, mutating):
                mutating |= keys
                changed = True
    return frozenset(mutating)


# ----------------------------------------------------------------------- PDG

def related(a: str, b: str) -> bool:
    """Paths that may denote overlapping state (equal or one a prefix of the other)."""
    return a == b or a.startswith(b + ".") or b.startswith(a + ".")


class _Aliases:
    def __init__(self):
        self.parent: dict[str, str] = {}

    def find(self, x: str) -> str:
        self.parent.setdefault(x, x)
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, group: Iterable[str]) -> None:
        group = list(group)
        for other in group[1:]:
            ra, rb = self.find(group[0]), self.find(other)
            if ra != rb:
                self.parent[rb] = ra

    def members(self, x: str) -> set[str]:
        root = self.find(x)
        return {p for p in list(self.parent) if self.find(p) == root}


@dataclass(frozen=True)
class PDG:
    method: str  # full signature
    nodes: tuple[int, ...]
    edges: frozenset[tuple[int, int]]  # (defining ordinal, using ordinal)

    def deps(self, ordinal: int) -> set[int]:
        return {u for u, v in self.edges if v == ordinal}


def _assertion_effects(st: Statement, mutators: Optional[frozenset[str]]):
    """Variables an assertion may change, and the alias groups it links."""
    mutated: set[str] = set()
    groups = []
    for inv in st.invocations:
        if mutators is None or inv.name in mutators:
            mutated |= inv.participants
            if len(inv.participants) > 1:
                groups.append(inv.participants)
    return mutated, groups


def build_pdg(method: MethodModel, mutators: Optional[frozenset[str]] = None) -> PDG:
    """Data dependences of a straight-line test method.

    ``mutators`` (from ``mutating_names``) decides which calls inside
    assertions may change their operands; without it every call may.
    Re-assigning a local also depends on its declaration, so a slice never
    assigns a variable it does not declare.
    """
    writers: dict[str, set[int]] = {}
    declared: dict[str, int] = {}
    aliases = _Aliases()
    edges: set[tuple[int, int]] = set()
    for st in method.body:
        for use in st.uses:
            for path, ords in writers.items():
                if related(use, path):
                    edges.update((o, st.ordinal) for o in ords)
        mutated, groups = set(st.mutated), list(st.alias_groups)
        if st.is_assertion:
            mutated, groups = _assertion_effects(st, mutators)
        for group in groups:
            aliases.union(group)
        for target in st.strong_defs:
            if st.kind == "varDecl":
                declared[target] = st.ordinal
            elif target in declared:
                edges.add((declared[target], st.ordinal))
            writers[target] = {st.ordinal}
        for var in mutated:
            for alias in aliases.members(var) | {var}:
                writers.setdefault(alias, set()).add(st.ordinal)
    return PDG(method.signature, tuple(s.ordinal for s in method.body), frozenset(edges))


# -------------------------------------------------------------------- slices

@dataclass(frozen=True)
class AssertionSlice:
    class_fq: str
    method_sig: str  # short form
    assertion: int  # ordinal of the criterion
    statements: tuple[int, ...]  # ascending, last one is the criterion
    criterion_vars: frozenset[str] = frozenset()
    index: int = 0  # 1-based position among the method's assertions

    @property
    def entity(self) -> str:
        return f"S={self.class_fq}#{self.method_sig}@{self.assertion}"

    @property
    def method_entity(self) -> str:
        return f"M={self.class_fq}#{self.method_sig}"

    @property
    def generated_name(self) -> str:
        return f"{self.method_sig.split('(')[0]}__slice{self.index}"


def backward_closure(pdg: PDG, start: int) -> set[int]:
    seen = {start}
    todo = [start]
    while todo:
        cur = todo.pop()
        for d in pdg.deps(cur):
            if d not in seen:
                seen.add(d)
                todo.append(d)
    return seen


def slice_assertions(method: MethodModel, pdg: Optional[PDG] = None,
                     mutators: Optional[frozenset[str]] = None) -> list[AssertionSlice]:
    pdg = pdg or build_pdg(method, mutators)
    out = []
    asserts: list[Statement] = [s for s in method.body if s.is_assertion]
    for k, st in enumerate(asserts, 1):
        stmts = tuple(sorted(backward_closure(pdg, st.ordinal)))
        out.append(AssertionSlice(method.class_fq, method.short_sig, st.ordinal, stmts, st.uses, k))
    return out


@dataclass
class SliceStore:
    slices: dict[str, list[AssertionSlice]]  # class fq -> slices in method/assertion order

    def for_method(self, class_fq: str, method_sig: str) -> list[AssertionSlice]:
        return [s for s in self.slices.get(class_fq, []) if s.method_sig == method_sig]

    def has_method(self, class_fq: str, method_sig: str) -> bool:
        return bool(self.for_method(class_fq, method_sig))

    def containing(self, class_fq: str, method_sig: str, ordinal: int) -> list[AssertionSlice]:
        return [s for s in self.for_method(class_fq, method_sig) if ordinal in s.statements]

    def all(self) -> list[AssertionSlice]:
        return [s for fq in sorted(self.slices) for s in self.slices[fq]]

    def __len__(self) -> int:
        return sum(len(v) for v in self.slices.values())

    def save(self, directory: Path) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        for old in directory.glob("*.slices"):
            if old.stem not in self.slices:
                old.unlink()
        for fq, items in self.slices.items():
            lines = [f"{s.method_sig}\t{s.assertion}\t{','.join(map(str, s.statements))}\n" for s in items]
            tmp = directory / f"{fq}.slices.tmp"
            tmp.write_text("".join(lines), encoding="utf-8", newline="\n")
            tmp.replace(directory / f"{fq}.slices")

    @classmethod
    def load(cls, directory: Path, project: Optional[Project] = None) -> "SliceStore":
        """Read slice files; criterion variables are restored when ``project`` is given."""
        directory = Path(directory)
        out: dict[str, list[AssertionSlice]] = {}
        if not directory.is_dir():
            return cls(out)
        for path in sorted(directory.glob("*.slices")):
            fq = path.stem
            counters: dict[str, int] = {}
            items = []
            for n, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
                parts = line.split("\t")
                if len(parts) != 3:
                    raise StoreError(f"{path}:{n}: malformed slice row")
                sig, asrt, stmts = parts
                counters[sig] = counters.get(sig, 0) + 1
                crit: frozenset[str] = frozenset()
                cls_model = project.by_fq(fq) if project is not None else None
                mm = cls_model.method(sig) if cls_model is not None else None
                if mm is not None and int(asrt) < len(mm.body):
                    crit = mm.body[int(asrt)].uses
                items.append(AssertionSlice(fq, sig, int(asrt), tuple(int(x) for x in stmts.split(",")),
                                            crit, counters[sig]))
            out[fq] = items
        return cls(out)


def slice_class(project: Project, inventory: TestInventory, class_fq: str,
                mutators: Optional[frozenset[str]] = None) -> list[AssertionSlice]:
    cls = project.by_fq(class_fq)
    out: list[AssertionSlice] = []
    if cls is None or inventory.cls(class_fq) is None:
        return out
    if mutators is None:
        mutators = mutating_names(project)
    for m in cls.methods:
        if not m.is_test:
            continue
        if classify_selectability(inventory, class_fq, m.short_sig).level == ASSERTION_LEVEL:
            out += slice_assertions(m, mutators=mutators)
    return out


def compute_slices(project: Project, inventory: TestInventory) -> SliceStore:
    store = {}
    mutators = mutating_names(project)
    for info in inventory.test_classes:
        items = slice_class(project, inventory, info.class_fq, mutators)
        if items:
            store[info.class_fq] = items
    return SliceStore(store)


def update_slices(store: SliceStore, project: Project, inventory: TestInventory,
                  test_owners: Iterable[str]) -> set[str]:
    """Re-slice classes touched by test changes, in place.

    A production edit can also move slice boundaries: it may change a test
    class's level (e.g. a new subclass) or make a callee used in an
    assertion mutating. Classes whose slices would come out different are
    therefore refreshed as well. Returns the classes whose slices were
    regenerated or dropped.
    """
    touched = set(test_owners)
    live = {c.class_fq for c in inventory.test_classes}
    touched |= {fq for fq in store.slices if fq not in live}
    mutators = mutating_names(project)
    fresh = {fq: slice_class(project, inventory, fq, mutators) for fq in live}
    touched |= {fq for fq, items in fresh.items() if items != store.slices.get(fq, [])}
    for fq in touched:
        items = fresh.get(fq, [])
        if items:
            store.slices[fq] = items
        else:
            store.slices.pop(fq, None)
    return touched
