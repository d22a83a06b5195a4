"""Change computation between two revisions from smart checksums.

A class is fingerprinted as three parts: its head (annotations, kind, name,
superclass), its other declarations (fields and enum constants) and one
checksum per method or constructor. A change to the head or the other
declarations turns into a class-level change; otherwise the class contributes
method-level changes, plus lookup changes for overrides that appeared or
disappeared.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from selertion.errors import StoreError
from selertion.frontend import ast as A
from selertion.frontend.model import ClassModel, MethodModel, SourceFile
from selertion.frontend.printer import class_head_to_str, file_to_str, member_lines, method_to_str
from selertion.frontend.project import Project
from selertion.hashing import HASH_ALGORITHM, digest, short_digest

FORMAT_VERSION = "1"


# ------------------------------------------------------------ smart checksums

def smart_checksum(node) -> str:
    """Checksum of the canonical printed form of a syntax fragment.

    Accepts a file, a class (its head only), a method, a single field, or a
    sequence of field/enum-constant members (the OT block). Printing drops
    comments and fixes whitespace, so neither affects the result.
    """
    if isinstance(node, SourceFile):
        node = node.ast
    if isinstance(node, A.FileAST):
        return digest(file_to_str(node))
    if isinstance(node, ClassModel):
        node = node.decl
    if isinstance(node, A.ClassDecl):
        return digest(class_head_to_str(node))
    if isinstance(node, MethodModel):
        node = node.decl
    if isinstance(node, A.MethodDecl):
        return digest(method_to_str(node))
    if isinstance(node, (A.FieldDecl, A.EnumConsts)):
        node = (node,)
    lines: list[str] = []
    for member in node:
        lines += member_lines(member, 0)
    return digest("\n".join(lines))


def declaring_class(signature: str) -> str:
    """Declaring class of a fully qualified method signature."""
    return signature[: signature.index("(")].rsplit(".", 1)[0]


# --------------------------------------------------------------------- store

@dataclass
class ChecksumStore:
    file_sums: dict[str, str] = field(default_factory=dict)
    class_sums: dict[str, tuple[str, str]] = field(default_factory=dict)  # fq -> (ch, ot)
    method_sums: dict[str, str] = field(default_factory=dict)  # full signature -> sum
    class_paths: dict[str, str] = field(default_factory=dict)  # fq -> file path
    revision_id: str = ""

    @classmethod
    def from_project(cls, project: Project) -> "ChecksumStore":
        store = cls()
        for f in project.files:
            store.file_sums[f.path] = smart_checksum(f)
            for c in f.all_classes():
                store.class_sums[c.fq_name] = (smart_checksum(c), smart_checksum(c.others))
                store.class_paths[c.fq_name] = f.path
                for m in c.methods:
                    store.method_sums[m.signature] = smart_checksum(m)
        store.revision_id = revision_id(store.file_sums)
        return store

    def methods_of(self, fq: str) -> dict[str, str]:
        return {s: v for s, v in self.method_sums.items() if declaring_class(s) == fq}

    def classes_in(self, paths: Iterable[str]) -> set[str]:
        paths = set(paths)
        return {fq for fq, p in self.class_paths.items() if p in paths}

    # TSV persistence ------------------------------------------------------

    def save(self, directory: Path) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        _write_tsv(directory / "files.tsv", ([p, s] for p, s in self.file_sums.items()))
        _write_tsv(directory / "classes.tsv", ([fq, ch, ot] for fq, (ch, ot) in self.class_sums.items()))
        _write_tsv(directory / "methods.tsv",
                   ([declaring_class(sig), sig, s] for sig, s in self.method_sums.items()))
        _write_tsv(directory / "classpaths.tsv", ([fq, p] for fq, p in self.class_paths.items()))
        _write_tsv(directory / "meta.tsv", [
            ["algorithm", HASH_ALGORITHM],
            ["format", FORMAT_VERSION],
            ["revisionId", self.revision_id],
        ])

    @classmethod
    def load(cls, directory: Path) -> "ChecksumStore":
        directory = Path(directory)
        if not (directory / "meta.tsv").is_file():
            raise StoreError(f"no checksum store at {directory}")
        meta = dict(_read_tsv(directory / "meta.tsv", 2))
        if meta.get("algorithm") != HASH_ALGORITHM or meta.get("format") != FORMAT_VERSION:
            raise StoreError(
                f"checksum store version mismatch: {meta.get('algorithm')}/{meta.get('format')}, "
                f"expected {HASH_ALGORITHM}/{FORMAT_VERSION}"
            )
        store = cls(revision_id=meta.get("revisionId", ""))
        store.file_sums = dict(_read_tsv(directory / "files.tsv", 2))
        store.class_sums = {fq: (ch, ot) for fq, ch, ot in _read_tsv(directory / "classes.tsv", 3)}
        store.method_sums = {sig: s for _, sig, s in _read_tsv(directory / "methods.tsv", 3)}
        store.class_paths = dict(_read_tsv(directory / "classpaths.tsv", 2))
        return store


def revision_id(file_sums: dict[str, str]) -> str:
    return short_digest("".join(f"{p}\t{s}\n" for p, s in sorted(file_sums.items())))


def _write_tsv(path: Path, rows) -> None:
    lines = sorted("\t".join(r) for r in rows)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text("".join(line + "\n" for line in lines), encoding="utf-8", newline="\n")
    tmp.replace(path)


def _read_tsv(path: Path, width: int) -> list[list[str]]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise StoreError(f"cannot read {path}: {exc}") from exc
    rows = []
    for n, line in enumerate(text.splitlines(), 1):
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != width:
            raise StoreError(f"{path}:{n}: expected {width} columns, got {len(parts)}")
        rows.append(parts)
    return rows


# ----------------------------------------------------------------- changes

@dataclass(frozen=True, order=True)
class Change:
    level: str  # "class" | "method"
    name: str  # class fq name or full method signature
    reason: str  # added deleted headChanged otherChanged | added deleted changed lookup
    test: bool = False  # True for the test partition

    @property
    def owner(self) -> str:
        return self.name if self.level == "class" else declaring_class(self.name)


@dataclass(frozen=True)
class ChangeSet:
    class_changes: tuple[Change, ...] = ()
    method_changes: tuple[Change, ...] = ()
    added_files: tuple[str, ...] = ()
    deleted_files: tuple[str, ...] = ()
    changed_files: tuple[str, ...] = ()

    @property
    def entries(self) -> tuple[Change, ...]:
        return self.class_changes + self.method_changes

    @property
    def production(self) -> tuple[Change, ...]:
        return tuple(c for c in self.entries if not c.test)

    @property
    def tests(self) -> tuple[Change, ...]:
        return tuple(c for c in self.entries if c.test)

    @property
    def changed_paths(self) -> tuple[str, ...]:
        return tuple(sorted(set(self.added_files) | set(self.changed_files)))

    def is_empty(self) -> bool:
        return not self.entries and not (self.added_files or self.deleted_files or self.changed_files)

    def merge(self, other: "ChangeSet") -> "ChangeSet":
        """Union of two change sets; a class-level entry absorbs method entries of its class."""
        classes = {(c.name, c.test): c for c in self.class_changes + other.class_changes}
        cls_names = {c.name for c in classes.values()}
        methods = {c for c in self.method_changes + other.method_changes if c.owner not in cls_names}
        return ChangeSet(
            tuple(sorted(classes.values())),
            tuple(sorted(methods)),
            tuple(sorted(set(self.added_files) | set(other.added_files))),
            tuple(sorted(set(self.deleted_files) | set(other.deleted_files))),
            tuple(sorted(set(self.changed_files) | set(other.changed_files))),
        )


def _is_test_path(path: str) -> bool:
    return path.startswith("tests/")


def compute_lookup_changes(added: Iterable[str], deleted: Iterable[str], project: Project,
                           old: Optional[ChecksumStore] = None) -> set[str]:
    """Inherited signatures whose dispatch target moved because of an added
    or deleted override."""
    known = set(old.method_sums) if old is not None else set()
    for c in project.all_classes():
        known |= {m.signature for m in c.methods}
    out: set[str] = set()
    for sig in list(added) + list(deleted):
        owner = declaring_class(sig)
        short = sig[len(owner) + 1:]
        cls = project.by_fq(owner)
        if cls is None:
            continue
        for anc in project.ancestors(cls):
            cand = f"{anc.fq_name}.{short}"
            if cand in known:
                out.add(cand)
                break
    return out


def compute_changes(old: Optional[ChecksumStore], project: Project) -> ChangeSet:
    new = ChecksumStore.from_project(project)
    if old is None:
        # initial run: every class counts as added
        classes = tuple(sorted(
            Change("class", fq, "added", _is_test_path(p)) for fq, p in new.class_paths.items()
        ))
        return ChangeSet(classes, (), tuple(sorted(new.file_sums)))

    added_files = sorted(set(new.file_sums) - set(old.file_sums))
    deleted_files = sorted(set(old.file_sums) - set(new.file_sums))
    changed_files = sorted(p for p in set(new.file_sums) & set(old.file_sums)
                           if new.file_sums[p] != old.file_sums[p])
    touched_old = old.classes_in(deleted_files + changed_files)
    touched_new = new.classes_in(added_files + changed_files)

    def tag(fq: str) -> bool:
        return _is_test_path(new.class_paths.get(fq) or old.class_paths.get(fq, ""))

    class_changes: list[Change] = []
    method_changes: list[Change] = []
    added_methods: list[str] = []
    deleted_methods: list[str] = []
    # a class may move between two touched files; compare it by name
    for fq in sorted(touched_new - set(old.class_sums)):
        class_changes.append(Change("class", fq, "added", tag(fq)))
    for fq in sorted(touched_old - set(new.class_sums)):
        class_changes.append(Change("class", fq, "deleted", tag(fq)))
    for fq in sorted((touched_old | touched_new) & set(old.class_sums) & set(new.class_sums)):
        old_ch, old_ot = old.class_sums[fq]
        new_ch, new_ot = new.class_sums[fq]
        if old_ch != new_ch:
            class_changes.append(Change("class", fq, "headChanged", tag(fq)))
            continue
        if old_ot != new_ot:
            class_changes.append(Change("class", fq, "otherChanged", tag(fq)))
            continue
        before, after = old.methods_of(fq), new.methods_of(fq)
        for sig in sorted(set(after) - set(before)):
            method_changes.append(Change("method", sig, "added", tag(fq)))
            added_methods.append(sig)
        for sig in sorted(set(before) - set(after)):
            method_changes.append(Change("method", sig, "deleted", tag(fq)))
            deleted_methods.append(sig)
        for sig in sorted(set(before) & set(after)):
            if before[sig] != after[sig]:
                method_changes.append(Change("method", sig, "changed", tag(fq)))

    class_level = {c.name for c in class_changes}
    present = {c.name for c in method_changes}
    for sig in sorted(compute_lookup_changes(added_methods, deleted_methods, project, old)):
        owner = declaring_class(sig)
        if owner in class_level or sig in present:
            continue
        method_changes.append(Change("method", sig, "lookup", tag(owner)))

    return ChangeSet(
        tuple(sorted(class_changes)),
        tuple(sorted(method_changes)),
        tuple(added_files),
        tuple(deleted_files),
        tuple(changed_files),
    )
