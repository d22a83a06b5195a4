"""Whole-project view: loading source trees, linking classes, test inventory."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from selertion.errors import LinkError, ModelError, SelertionError
from selertion.frontend import ast as A
from selertion.frontend.model import ClassModel, MethodModel, SourceFile, parse_source

SOURCE_ROOTS = ("src", "tests")
SUFFIX = ".mj"


def iter_source_paths(root: Path) -> list[str]:
    out = []
    for sub in SOURCE_ROOTS:
        base = root / sub
        if not base.is_dir():
            continue
        for p in base.rglob(f"*{SUFFIX}"):
            if p.is_file():
                out.append(p.relative_to(root).as_posix())
    return sorted(out)


def read_source_tree(root: Path) -> dict[str, str]:
    tree = {}
    for rel in iter_source_paths(Path(root)):
        try:
            tree[rel] = (Path(root) / rel).read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            raise SelertionError(f"cannot read {rel}: {exc}") from exc
    return tree


@dataclass
class Project:
    files: tuple[SourceFile, ...]
    classes: dict[str, ClassModel] = field(default_factory=dict)  # by simple name
    class_file: dict[str, str] = field(default_factory=dict)  # fq -> path

    @classmethod
    def from_files(cls, files: Iterable[SourceFile]) -> "Project":
        files = tuple(sorted(files, key=lambda f: f.path))
        proj = cls(files)
        for f in files:
            for c in f.all_classes():
                if c.name in proj.classes:
                    raise ModelError(f"duplicate class {c.name} ({proj.class_file[proj.classes[c.name].fq_name]}, {f.path})")
                proj.classes[c.name] = c
                proj.class_file[c.fq_name] = f.path
        return proj

    @classmethod
    def from_tree(cls, tree: dict[str, str]) -> "Project":
        return cls.from_files(parse_source(text, path) for path, text in sorted(tree.items()))

    @classmethod
    def load(cls, root) -> "Project":
        return cls.from_tree(read_source_tree(Path(root)))

    # ----------------------------------------------------------- lookups

    def by_fq(self, fq: str) -> Optional[ClassModel]:
        return self.classes.get(fq.rsplit(".", 1)[-1])

    def all_classes(self) -> list[ClassModel]:
        return sorted(self.classes.values(), key=lambda c: c.fq_name)

    def file_of(self, fq: str) -> Optional[SourceFile]:
        path = self.class_file.get(fq)
        for f in self.files:
            if f.path == path:
                return f
        return None

    def is_test_path(self, fq: str) -> bool:
        return self.class_file.get(fq, "").startswith("tests/")

    def superclass_of(self, c: ClassModel) -> Optional[ClassModel]:
        if c.superclass is None:
            return None
        sup = self.classes.get(c.superclass)
        if sup is None:
            raise LinkError(f"class {c.fq_name} extends unknown class {c.superclass}")
        return sup

    def ancestors(self, c: ClassModel) -> list[ClassModel]:
        """Superclass chain, nearest first."""
        out = []
        seen = {c.fq_name}
        cur = self.superclass_of(c)
        while cur is not None:
            if cur.fq_name in seen:
                raise LinkError(f"inheritance cycle through {cur.fq_name}")
            seen.add(cur.fq_name)
            out.append(cur)
            cur = self.superclass_of(cur)
        return out

    def subclasses(self, fq: str) -> set[str]:
        """Transitive subclasses of ``fq`` (fq names)."""
        simple = fq.rsplit(".", 1)[-1]
        out: set[str] = set()
        frontier = {simple}
        while frontier:
            nxt = set()
            for c in self.classes.values():
                if c.superclass in frontier and c.fq_name not in out:
                    out.add(c.fq_name)
                    nxt.add(c.name)
            frontier = nxt
        return out

    def link(self) -> None:
        """Check every class reference resolves."""
        for c in self.classes.values():
            self.ancestors(c)
            for m in c.methods:
                for e in A.walk_stmt_exprs(m.decl.body):
                    if isinstance(e, A.New) and e.cls not in self.classes:
                        raise LinkError(f"{m.signature}: new of unknown class {e.cls}")
        for c in self.classes.values():
            for o in c.fields:
                if o.init is not None:
                    for e in A.walk_expr(o.init):
                        if isinstance(e, A.New) and e.cls not in self.classes:
                            raise LinkError(f"{c.fq_name}.{o.name}: new of unknown class {e.cls}")

    # ------------------------------------------------------------- tests

    def is_test_class(self, c: ClassModel) -> bool:
        """Declares or inherits at least one @Test method."""
        return bool(self.runnable_tests(c))

    def runnable_tests(self, c: ClassModel) -> list[MethodModel]:
        """Test methods executed for ``c``: inherited ones first, overrides win."""
        chain = list(reversed(self.ancestors(c))) + [c]
        order: list[str] = []
        by_sig: dict[str, MethodModel] = {}
        for k in chain:
            for m in k.methods:
                if m.short_sig not in by_sig:
                    order.append(m.short_sig)
                by_sig[m.short_sig] = m
        return [by_sig[s] for s in order if by_sig[s].is_test]

    def test_classes(self) -> list[ClassModel]:
        return [c for c in self.all_classes() if self.is_test_class(c)]


# ------------------------------------------------------------------ inventory

@dataclass(frozen=True)
class TestFeatures:
    parameterized: bool = False
    uses_inheritance: bool = False
    calls_other_tests: bool = False


@dataclass(frozen=True)
class TestMethodInfo:
    signature: str  # fully qualified
    short_sig: str
    expects_exception: Optional[str]
    has_conditionals: bool
    assertion_count: int
    out_of_scope: bool  # sys.sleep, global side effects, throw, early return


@dataclass(frozen=True)
class TestClassInfo:
    class_fq: str
    features: TestFeatures
    test_methods: tuple[TestMethodInfo, ...]


@dataclass(frozen=True)
class TestInventory:
    test_classes: tuple[TestClassInfo, ...]

    def cls(self, fq: str) -> Optional[TestClassInfo]:
        for c in self.test_classes:
            if c.class_fq == fq:
                return c
        return None

    def method(self, fq: str, short_sig: str) -> Optional[TestMethodInfo]:
        c = self.cls(fq)
        if c is None:
            return None
        for m in c.test_methods:
            if m.short_sig == short_sig:
                return m
        return None

    @property
    def total_tests(self) -> int:
        return sum(len(c.test_methods) for c in self.test_classes)

    @property
    def total_assertions(self) -> int:
        return sum(m.assertion_count for c in self.test_classes for m in c.test_methods)


def _calls_other_tests(c: ClassModel, test_names: set[str]) -> bool:
    for m in c.methods:
        if not m.is_test:
            continue
        for e in A.walk_stmt_exprs(m.decl.body):
            if isinstance(e, A.Call) and e.name in test_names and (e.target is None or isinstance(e.target, A.This)):
                return True
    return False


def _out_of_scope(m: MethodModel) -> bool:
    if any(s.calls_sleep or s.writes_global or s.throws for s in m.body):
        return True
    # an early return hides later statements from slices
    return any(isinstance(s, A.Return) for s in m.decl.body[:-1])


def enumerate_tests(project: Project) -> TestInventory:
    """Static test inventory with the class/method features that drive downgrades."""
    project.link()
    test_classes = project.test_classes()
    test_fqs = {c.fq_name for c in test_classes}
    in_hierarchy: set[str] = set()
    for c in test_classes:
        sup = project.superclass_of(c)
        if sup is not None:
            in_hierarchy.add(c.fq_name)
            for a in project.ancestors(c):
                if a.fq_name in test_fqs or any(m.is_test for m in a.methods):
                    in_hierarchy.add(a.fq_name)
    infos = []
    for c in test_classes:
        declared_tests = [m for m in c.methods if m.is_test]
        runnable_names = {m.name for m in project.runnable_tests(c)}
        features = TestFeatures(
            parameterized=c.decl.annotation("Parameterized") is not None,
            uses_inheritance=c.fq_name in in_hierarchy,
            calls_other_tests=_calls_other_tests(c, runnable_names),
        )
        methods = tuple(
            TestMethodInfo(
                signature=m.signature,
                short_sig=m.short_sig,
                expects_exception=m.expected_exception,
                has_conditionals=m.has_conditionals(),
                assertion_count=m.assertion_count(),
                out_of_scope=_out_of_scope(m),
            )
            for m in declared_tests
        )
        infos.append(TestClassInfo(c.fq_name, features, methods))
    return TestInventory(tuple(infos))
