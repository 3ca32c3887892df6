"""S-expression reader shared by the bytecode frontend and the predicate parser.

Syntax: parenthesized lists (square brackets are interchangeable with
parens), double-quoted string literals, integer atoms, symbols, and `;`
comments running to end of line. Every node keeps its source position.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Pos:
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


UNKNOWN_POS = Pos(0, 0)


class SexpError(Exception):
    """Malformed surface syntax; carries the offending position."""

    def __init__(self, message: str, pos: Pos):
        super().__init__(f"{message} at {pos}")
        self.message = message
        self.pos = pos


@dataclass(frozen=True)
class Sym:
    name: str
    pos: Pos = field(default=UNKNOWN_POS, compare=False)


@dataclass(frozen=True)
class Str:
    value: str
    pos: Pos = field(default=UNKNOWN_POS, compare=False)


@dataclass(frozen=True)
class Int:
    value: int
    pos: Pos = field(default=UNKNOWN_POS, compare=False)


@dataclass(frozen=True)
class SList:
    items: tuple
    pos: Pos = field(default=UNKNOWN_POS, compare=False)

    def __len__(self) -> int:
        return len(self.items)

    def __getitem__(self, i):
        return self.items[i]

    def __iter__(self):
        return iter(self.items)


Node = Sym | Str | Int | SList

_OPEN = {"(": ")", "[": "]"}
_CLOSE = {")", "]"}
_DELIMS = set("()[]\";") | set(" \t\r\n")


def parse_all(text: str) -> list[Node]:
    """Parse every top-level form in *text*."""
    return _Reader(text).read_all()


def parse_one(text: str) -> Node:
    forms = parse_all(text)
    if len(forms) != 1:
        raise SexpError(f"expected exactly one form, found {len(forms)}", UNKNOWN_POS)
    return forms[0]


class _Reader:
    def __init__(self, text: str):
        self.text = text
        self.i = 0
        self.line = 1
        self.col = 1

    def _pos(self) -> Pos:
        return Pos(self.line, self.col)

    def _peek(self) -> str | None:
        return self.text[self.i] if self.i < len(self.text) else None

    def _advance(self) -> str:
        ch = self.text[self.i]
        self.i += 1
        if ch == "\n":
            self.line += 1
            self.col = 1
        else:
            self.col += 1
        return ch

    def _skip_blank(self) -> None:
        while True:
            ch = self._peek()
            if ch is None:
                return
            if ch in " \t\r\n":
                self._advance()
            elif ch == ";":
                while self._peek() not in (None, "\n"):
                    self._advance()
            else:
                return

    def read_all(self) -> list[Node]:
        forms = []
        while True:
            self._skip_blank()
            if self._peek() is None:
                return forms
            forms.append(self._read())

    def _read(self) -> Node:
        self._skip_blank()
        pos = self._pos()
        ch = self._peek()
        if ch is None:
            raise SexpError("unexpected end of input", pos)
        if ch in _OPEN:
            return self._read_list(pos, _OPEN[self._advance()])
        if ch in _CLOSE:
            raise SexpError(f"unbalanced '{ch}'", pos)
        if ch == '"':
            return self._read_string(pos)
        return self._read_atom(pos)

    def _read_list(self, pos: Pos, closer: str) -> SList:
        items = []
        while True:
            self._skip_blank()
            ch = self._peek()
            if ch is None:
                raise SexpError("unterminated list", pos)
            if ch in _CLOSE:
                self._advance()
                # Bracket kinds are interchangeable, so any closer is accepted.
                return SList(tuple(items), pos)
            items.append(self._read())

    def _read_string(self, pos: Pos) -> Str:
        self._advance()  # opening quote
        out = []
        while True:
            ch = self._peek()
            if ch is None:
                raise SexpError("unterminated string literal", pos)
            self._advance()
            if ch == '"':
                return Str("".join(out), pos)
            if ch == "\\":
                nxt = self._peek()
                if nxt is None:
                    raise SexpError("unterminated escape", pos)
                self._advance()
                out.append({"n": "\n", "t": "\t"}.get(nxt, nxt))
            else:
                out.append(ch)

    def _read_atom(self, pos: Pos) -> Node:
        start = self.i
        while self._peek() is not None and self._peek() not in _DELIMS:
            self._advance()
        token = self.text[start : self.i]
        if token in ("#f", "#t"):
            return Sym(token, pos)
        try:
            return Int(int(token), pos)
        except ValueError:
            return Sym(token, pos)


def to_text(node: Node) -> str:
    """Render a node back to surface syntax (inverse of the reader)."""
    if isinstance(node, Sym):
        return node.name
    if isinstance(node, Int):
        return str(node.value)
    if isinstance(node, Str):
        escaped = node.value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    return "(" + " ".join(to_text(item) for item in node.items) + ")"
