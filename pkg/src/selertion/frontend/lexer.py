"""Tokenizer for MiniJ source text."""

from __future__ import annotations

from dataclasses import dataclass

from selertion.errors import MiniJSyntaxError

KEYWORDS = frozenset({
    "class", "enum", "extends", "static", "void", "new", "return",
    "if", "else", "while", "for", "true", "false", "null", "this",
})

# longest first so that "<=" wins over "<"
OPERATORS = (
    "&&", "||", "==", "!=", "<=", ">=", "+=", "-=", "*=", "/=",
    "+", "-", "*", "/", "%", "<", ">", "=", "!",
    "(", ")", "{", "}", "[", "]", ",", ";", ".", "@",
)


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT KEYWORD INT FLOAT STRING OP EOF
    text: str
    line: int
    col: int
    value: object = None

    def is_op(self, text: str) -> bool:
        return self.kind == "OP" and self.text == text

    def is_kw(self, text: str) -> bool:
        return self.kind == "KEYWORD" and self.text == text


_ESCAPES = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}


def tokenize(text: str, path: str = "") -> list[Token]:
    tokens: list[Token] = []
    i = 0
    line, col = 1, 1
    n = len(text)

    def fail(msg: str) -> MiniJSyntaxError:
        return MiniJSyntaxError(msg, path, line, col)

    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r\f":
            i += 1
            col += 1
            continue
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        if text.startswith("/*", i):
            end = text.find("*/", i + 2)
            if end < 0:
                raise fail("unterminated block comment")
            chunk = text[i:end + 2]
            newlines = chunk.count("\n")
            if newlines:
                line += newlines
                col = len(chunk) - chunk.rfind("\n")
            else:
                col += len(chunk)
            i = end + 2
            continue

        start_line, start_col = line, col
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            kind = "KEYWORD" if word in KEYWORDS else "IDENT"
            tokens.append(Token(kind, word, start_line, start_col))
            col += j - i
            i = j
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            is_float = False
            if j < n and text[j] == "." and j + 1 < n and text[j + 1].isdigit():
                is_float = True
                j += 1
                while j < n and text[j].isdigit():
                    j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    is_float = True
                    j = k
                    while j < n and text[j].isdigit():
                        j += 1
            lexeme = text[i:j]
            if is_float:
                tokens.append(Token("FLOAT", lexeme, start_line, start_col, float(lexeme)))
            else:
                tokens.append(Token("INT", lexeme, start_line, start_col, int(lexeme)))
            col += j - i
            i = j
            continue
        if ch == '"':
            j = i + 1
            out = []
            while True:
                if j >= n or text[j] == "\n":
                    raise fail("unterminated string literal")
                c = text[j]
                if c == '"':
                    break
                if c == "\\":
                    if j + 1 >= n or text[j + 1] not in _ESCAPES:
                        raise fail("bad escape in string literal")
                    out.append(_ESCAPES[text[j + 1]])
                    j += 2
                    continue
                out.append(c)
                j += 1
            tokens.append(Token("STRING", text[i:j + 1], start_line, start_col, "".join(out)))
            col += j + 1 - i
            i = j + 1
            continue
        for op in OPERATORS:
            if text.startswith(op, i):
                tokens.append(Token("OP", op, start_line, start_col))
                i += len(op)
                col += len(op)
                break
        else:
            raise fail(f"unexpected character {ch!r}")

    tokens.append(Token("EOF", "", line, col))
    return tokens
