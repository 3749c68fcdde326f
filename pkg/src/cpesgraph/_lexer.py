"""Tokenizer shared by the Turtle and query parsers."""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import ParseError

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<iri><[^<>"{}|^`\\\s]*>)
  | (?P<long_string>"{3}(?:[^"\\]|\\.|"(?!""))*"{3})
  | (?P<bad_string>"{3}|')
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<unterminated>")
  | (?P<dtype>\^\^)
  | (?P<directive>@[A-Za-z]+(?:-[A-Za-z0-9]+)*)
  | (?P<bnode>_:[A-Za-z0-9_]+(?:[A-Za-z0-9_\-.]*[A-Za-z0-9_\-])?)
  | (?P<var>[?$][A-Za-z0-9_]+)
  | (?P<number>[+-]?(?:\d+\.\d*[eE][+-]?\d+|\.?\d+[eE][+-]?\d+|\d*\.\d+|\d+))
  | (?P<pname>(?:[A-Za-z][A-Za-z0-9_\-]*)?:(?:[A-Za-z0-9_\-]|\.(?=[A-Za-z0-9_\-]))*)
  | (?P<name>[A-Za-z][A-Za-z0-9_]*)
  | (?P<op>!=|<=|>=|&&|\|\||[=<>!])
  | (?P<punct>[.;,\[\]\(\)\{\}*])
    """,
    re.VERBOSE,
)

_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", '"': '"', "'": "'", "\\": "\\", "b": "\b", "f": "\f"}


@dataclass(frozen=True, slots=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    line, line_start = 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise ParseError(line, col, f"unexpected character {text[pos]!r}")
        kind = m.lastgroup
        chunk = m.group()
        if kind == "bad_string":
            raise ParseError(line, col, "unterminated long string or single-quoted string")
        if kind == "unterminated":
            raise ParseError(line, col, "unterminated string literal")
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, chunk, line, col))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


def unescape(tok: Token) -> str:
    body = tok.text[3:-3] if tok.kind == "long_string" else tok.text[1:-1]
    out = []
    i = 0
    while i < len(body):
        c = body[i]
        if c == "\\":
            nxt = body[i + 1]
            if nxt in _ESCAPES:
                out.append(_ESCAPES[nxt])
                i += 2
                continue
            if nxt in "uU":
                width = 4 if nxt == "u" else 8
                digits = body[i + 2:i + 2 + width]
                if len(digits) != width:
                    raise ParseError(tok.line, tok.column, "bad unicode escape")
                out.append(chr(int(digits, 16)))
                i += 2 + width
                continue
            raise ParseError(tok.line, tok.column, f"bad escape \\{nxt}")
        out.append(c)
        i += 1
    return "".join(out)


class TokenStream:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    @property
    def peek(self) -> Token:
        return self.tokens[self.i]

    def next(self) -> Token:
        tok = self.tokens[self.i]
        if tok.kind != "eof":
            self.i += 1
        return tok

    def at(self, kind: str, text: str | None = None) -> bool:
        tok = self.peek
        return tok.kind == kind and (text is None or tok.text == text)

    def accept(self, kind: str, text: str | None = None) -> Token | None:
        if self.at(kind, text):
            return self.next()
        return None

    def expect(self, kind: str, text: str | None = None, what: str | None = None) -> Token:
        tok = self.peek
        if not self.at(kind, text):
            wanted = what or repr(text or kind)
            self.fail(tok, f"expected {wanted}, found {describe(tok)}")
        return self.next()

    @staticmethod
    def fail(tok: Token, message: str):
        raise ParseError(tok.line, tok.column, message)


def describe(tok: Token) -> str:
    return "end of input" if tok.kind == "eof" else repr(tok.text)
