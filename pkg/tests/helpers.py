"""Small helpers shared by the test modules."""

import functools
from collections import Counter
from pathlib import Path

from selertion.errors import MiniJSyntaxError
from selertion.frontend.lexer import tokenize
from selertion.frontend.parser import parse_text
from selertion.frontend.project import Project, enumerate_tests
from selertion.harness.oracle import slice_statuses
from selertion.harness import load_corpus_tree
from selertion.runtime.runner import execute_tests
from selertion.slicer import compute_slices

NEGATE_OLD = "return new Complex(-re, -im);"


def edit(tree: dict, path: str, old: str, new: str) -> dict:
    assert old in tree[path], (path, old)
    out = dict(tree)
    out[path] = tree[path].replace(old, new, 1)
    return out


def negate_tree(new: str = "return new Complex(re, -im);") -> dict:
    return edit(load_corpus_tree("complexmath"), "src/Complex.mj", NEGATE_OLD, new)


def negate_mutant(new: str = "return new Complex(re, -im);") -> Project:
    return Project.from_tree(negate_tree(new))


def edit_file(root: Path, rel: str, old: str, new: str) -> None:
    path = Path(root) / rel
    text = path.read_text(encoding="utf-8")
    assert old in text, (rel, old)
    path.write_text(text.replace(old, new, 1), encoding="utf-8")


_SEPARATORS = (" ", "  ", "\n", "\n\n    ", "\t", " /* note */ ", " // trailing remark\n", " /** doc\n * more */ ")


def perturb_layout(text: str, rng) -> str:
    """Re-join the tokens of ``text`` with random whitespace and comments."""
    toks = [t for t in tokenize(text) if t.kind != "EOF"]
    out = [rng.choice(_SEPARATORS) if rng.random() < 0.5 else ""]
    for i, tok in enumerate(toks):
        out.append(tok.text)
        if i + 1 < len(toks):
            out.append(rng.choice(_SEPARATORS))
    out.append(rng.choice(("", "\n", "// end\n")))
    return "".join(out)


_SWAPS = {"*": "/", "/": "*", "<": "<=", "<=": "<", ">": ">=", ">=": ">", "==": "!=", "!=": "==",
          "&&": "||", "||": "&&"}


@functools.lru_cache(maxsize=None)
def token_edits(text: str) -> tuple:
    """Every single-token edit of ``text`` that keeps it parseable: literal
    values, identifier spellings and swappable operators."""
    return tuple(_token_edits(text))


def _token_edits(text: str):
    lines = text.split("\n")
    offsets = [0]
    for ln in lines:
        offsets.append(offsets[-1] + len(ln) + 1)
    for tok in tokenize(text):
        if tok.kind in ("INT", "FLOAT"):
            new = "1" + tok.text  # appending could keep the float value
        elif tok.kind == "STRING":
            new = tok.text[:-1] + "x\""
        elif tok.kind == "IDENT":
            new = tok.text + "x"
        elif tok.kind == "OP" and tok.text in _SWAPS:
            new = _SWAPS[tok.text]
        else:
            continue
        start = offsets[tok.line - 1] + tok.col - 1
        edited = text[:start] + new + text[start + len(tok.text):]
        try:
            parse_text(edited)
        except MiniJSyntaxError:
            continue  # e.g. a constructor no longer named after its class
        yield tok, edited


def per_assertion_outcomes(project: Project) -> tuple[Counter, Counter]:
    """Assertion outcomes of the original methods (run without stopping at
    the first failure) and of the standalone slices."""
    store = compute_slices(project, enumerate_tests(project))
    sliced = {(s.class_fq, s.method_sig) for s in store.all()}
    original = Counter()
    for o in execute_tests(project, soft=True).outcomes:
        fq, sig = o.method_entity[2:].split("#")
        if (fq, sig) in sliced:
            original.update((fq, sig, ordinal, "pass" if ok else "fail") for ordinal, ok in o.asserts)
    slices = Counter()
    for ent, status in slice_statuses(project).items():
        head, ordinal = ent[2:].rsplit("@", 1)
        fq, sig = head.split("#")
        slices[(fq, sig, int(ordinal), status)] += 1
    return original, slices
