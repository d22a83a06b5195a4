"""Evaluation harness: bundled corpus, mutants, oracle and metrics."""

from __future__ import annotations

import shutil
from pathlib import Path

from selertion.frontend.project import read_source_tree

CORPUS_DIR = Path(__file__).resolve().parent / "corpus"
CORPUS_NAMES = ("complexmath", "inherit", "params", "expects", "loops", "chain")


def corpus_path(name: str) -> Path:
    if name not in CORPUS_NAMES:
        raise KeyError(f"unknown corpus project {name!r}; known: {', '.join(CORPUS_NAMES)}")
    return CORPUS_DIR / name


def load_corpus_tree(name: str) -> dict[str, str]:
    return read_source_tree(corpus_path(name))


def materialize(name: str, dest: Path) -> Path:
    """Copy a corpus project into ``dest`` (created) and return it."""
    dest = Path(dest)
    shutil.copytree(corpus_path(name), dest, dirs_exist_ok=True)
    return dest
