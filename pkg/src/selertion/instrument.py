"""Source-to-source instrumentation and the instrumented copy of a project.

Production classes, test helpers, setup methods and constructors log their
signature on entry with ``trace.enter``. Test code is wrapped in dependency
scopes according to its level: one ``trace.scope`` per top-level statement
for sliceable methods, one around the whole body for method-level tests, and
a ``trace.begin``/``trace.end`` pair in the class body for class-level test
classes (the runner opens it around the whole class run).
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

from selertion.errors import StoreError
from selertion.fingerprint import ChangeSet, smart_checksum
from selertion.frontend import ast as A
from selertion.frontend.model import SourceFile
from selertion.frontend.printer import file_to_str
from selertion.frontend.project import Project
from selertion.hashing import short_digest
from selertion.slicer import ASSERTION_LEVEL, CLASS_LEVEL, METHOD_LEVEL, SelectionLevel

MANIFEST = "manifest.tsv"


def trace_enter(signature: str) -> A.ExprStmt:
    return A.ExprStmt(A.Call(A.Name("trace"), "enter", (A.StrLit(signature),)))


def _short_sig(m: A.MethodDecl) -> str:
    return f"{m.name}({','.join(p.type for p in m.params)})"


def _wrap_statements(fq: str, short: str, body) -> tuple[A.Stmt, ...]:
    return tuple(A.TraceScope(f"S={fq}#{short}@{i}", (s,)) for i, s in enumerate(body))


def _instrument_test(fq: str, m: A.MethodDecl, level: Optional[SelectionLevel], debug: bool) -> A.MethodDecl:
    short = _short_sig(m)
    kind = level.level if level is not None else METHOD_LEVEL
    if kind == ASSERTION_LEVEL and not debug:
        body = _wrap_statements(fq, short, m.body)
    elif debug:
        body = (A.TraceScope(f"M={fq}#{short}", _wrap_statements(fq, short, m.body)),)
    else:
        body = (A.TraceScope(f"M={fq}#{short}", m.body),)
    return A.MethodDecl(m.annotations, m.static, m.ret_type, m.name, m.params, body)


def _instrument_class(decl: A.ClassDecl, levels: dict[str, SelectionLevel], debug: bool,
                      outer: Optional[str] = None) -> A.ClassDecl:
    fq = f"{outer}.{decl.name}" if outer else decl.name
    cls_level = levels.get(f"C={fq}")
    class_scoped = cls_level is not None and cls_level.level == CLASS_LEVEL
    members: list = []
    if class_scoped:
        members.append(A.TraceMarker("begin", f"C={fq}"))
    for m in decl.members:
        if isinstance(m, A.ClassDecl):
            members.append(_instrument_class(m, levels, debug, fq))
        elif isinstance(m, A.MethodDecl):
            is_test = m.annotation("Test") is not None and cls_level is not None
            if is_test and class_scoped:
                members.append(m)
            elif is_test:
                members.append(_instrument_test(fq, m, levels.get(f"M={fq}#{_short_sig(m)}"), debug))
            else:
                sig = f"{fq}.{_short_sig(m)}"
                members.append(A.MethodDecl(m.annotations, m.static, m.ret_type, m.name, m.params,
                                            (trace_enter(sig),) + m.body))
        else:
            members.append(m)
    has_ctor = any(isinstance(m, A.MethodDecl) and m.is_constructor for m in decl.members)
    if decl.kind != "enum" and not has_ctor and cls_level is None:
        # makes instantiation of a constructor-less production class visible
        members.append(A.MethodDecl((), False, None, decl.name, (), (trace_enter(f"{fq}.{decl.name}()"),)))
    if class_scoped:
        members.append(A.TraceMarker("end", f"C={fq}"))
    return A.ClassDecl(decl.annotations, decl.kind, decl.name, decl.superclass, tuple(members))


def instrument_file(file: SourceFile, levels: dict[str, SelectionLevel], debug: bool = False) -> str:
    """Instrumented source text of ``file``.

    ``levels`` maps ``C=<class>`` and ``M=<class>#<sig>`` keys to selection
    levels (see ``slicer.class_levels``); classes without a ``C=`` key are
    treated as production code. ``debug`` traces sliceable and method-level
    tests at both statement and method granularity.
    """
    if not file.ast.classes:
        return file.text
    tree = A.FileAST(tuple(_instrument_class(c, levels, debug) for c in file.ast.classes))
    return file_to_str(tree)


# ------------------------------------------------------------ instrumented copy

@dataclass(frozen=True)
class ManifestEntry:
    source_sum: str
    levels_sum: str


def _levels_digest(file: SourceFile, levels: dict[str, SelectionLevel]) -> str:
    names = {c.fq_name for c in file.all_classes()}
    rows = sorted(f"{k}\t{v}" for k, v in levels.items() if k[2:].split("#", 1)[0] in names)
    return short_digest("\n".join(rows))


def _write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8", newline="\n")
    os.replace(tmp, path)


def load_manifest(copy_dir: Path) -> dict[str, ManifestEntry]:
    path = Path(copy_dir) / MANIFEST
    if not path.is_file():
        raise StoreError(f"instrumented copy missing at {copy_dir}; run init first")
    out = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        parts = line.split("\t")
        if len(parts) != 3:
            raise StoreError(f"{path}: malformed row {line!r}")
        out[parts[0]] = ManifestEntry(parts[1], parts[2])
    return out


def save_manifest(copy_dir: Path, manifest: dict[str, ManifestEntry]) -> None:
    rows = sorted(f"{p}\t{e.source_sum}\t{e.levels_sum}\n" for p, e in manifest.items())
    _write_atomic(Path(copy_dir) / MANIFEST, "".join(rows))


def _instrument_into(copy_dir: Path, file: SourceFile, levels, manifest, debug: bool) -> None:
    _write_atomic(copy_dir / file.path, instrument_file(file, levels, debug))
    manifest[file.path] = ManifestEntry(smart_checksum(file), _levels_digest(file, levels))


def instrument_project(project: Project, levels: dict[str, SelectionLevel], copy_dir: Path,
                       debug: bool = False) -> list[str]:
    """Instrument every file into a fresh copy; returns the written paths."""
    copy_dir = Path(copy_dir)
    manifest: dict[str, ManifestEntry] = {}
    for sub in ("src", "tests"):
        _clear(copy_dir / sub)
    copy_dir.mkdir(parents=True, exist_ok=True)
    for f in project.files:
        _instrument_into(copy_dir, f, levels, manifest, debug)
    save_manifest(copy_dir, manifest)
    return [f.path for f in project.files]


def _clear(directory: Path) -> None:
    if not directory.exists():
        return
    for p in sorted(directory.rglob("*"), reverse=True):
        if p.is_dir():
            p.rmdir()
        else:
            p.unlink()
    directory.rmdir()


def sync_instrumented_copy(changes: ChangeSet, project: Project, levels: dict[str, SelectionLevel],
                           copy_dir: Path, debug: bool = False) -> list[str]:
    """Re-instrument files touched by ``changes`` (and files whose test levels
    shifted), drop deleted files; returns the re-instrumented paths."""
    copy_dir = Path(copy_dir)
    manifest = load_manifest(copy_dir)
    live = {f.path: f for f in project.files}
    for path in sorted(set(changes.deleted_files) | (set(manifest) - set(live))):
        target = copy_dir / path
        if target.exists():
            target.unlink()
        manifest.pop(path, None)
    candidates: set[str] = set(changes.changed_paths)
    for path, f in live.items():
        entry = manifest.get(path)
        if entry is None or entry.levels_sum != _levels_digest(f, levels):
            candidates.add(path)
    done = []
    for path in sorted(candidates):
        f = live.get(path)
        if f is None:
            continue
        entry = manifest.get(path)
        current = ManifestEntry(smart_checksum(f), _levels_digest(f, levels))
        if entry == current and (copy_dir / path).is_file():
            continue
        _instrument_into(copy_dir, f, levels, manifest, debug)
        done.append(path)
    save_manifest(copy_dir, manifest)
    return done


def copy_digest(copy_dir: Path, paths: Optional[Iterable[str]] = None) -> dict[str, str]:
    """Path -> content digest of the instrumented files (manifest included)."""
    copy_dir = Path(copy_dir)
    out = {}
    for p in sorted(copy_dir.rglob("*")):
        if p.is_file():
            rel = p.relative_to(copy_dir).as_posix()
            if paths is None or rel in paths:
                out[rel] = short_digest(p.read_text(encoding="utf-8"))
    return out
