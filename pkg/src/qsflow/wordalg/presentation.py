"""Text presentations of universal algebras and balance analysis.

Grammar (``#`` starts a comment that runs to the end of the line)::

    source     := statement*
    statement  := "gen" NAME [ "unitary" | "isometry" ] ";"
                | "rel" poly ";"
    poly       := [sign] term (sign term)*
    term       := coeff [ "*" ] factor*  |  factor+
    factor     := NAME [ "*" ]
    coeff      := NUMBER [ "i" ] | "i"

A star directly after a name is the adjoint; products are written by
juxtaposition. A bare coefficient is that multiple of the empty word, so
``1`` is the identity.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .words import EMPTY, FreeElement, Word, n_count

KEYWORDS = {"gen", "rel", "unitary", "isometry", "i"}
FLAGS = ("unitary", "isometry")


class PresentationError(ValueError):
    pass


class ParseError(PresentationError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"line {line}, column {col}: {message}")
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<nl>\n)|(?P<comment>#[^\n]*)"
    r"|(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?i?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[;*+\-])"
)


def tokenize(text: str) -> list[Token]:
    out = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            out.append(Token(kind, m.group(), line, col))
        pos = m.end()
    out.append(Token("eof", "", line, pos - line_start + 1))
    return out


@dataclass
class Presentation:
    """Generators with optional unitary/isometry flags and explicit relations.

    ``relations`` lists the relations implied by the flags first
    (``X X* - 1`` then ``X* X - 1`` for unitaries, ``X* X - 1`` for isometries),
    then the explicit ones in source order.
    """

    names: list[str]
    flags: list[str | None]
    explicit: list[FreeElement] = field(default_factory=list)

    def __post_init__(self):
        if len(set(self.names)) != len(self.names):
            raise PresentationError("duplicate generator names")
        for rel in self.explicit:
            for w in rel.words():
                for g, _ in w:
                    if not 0 <= g < len(self.names):
                        raise PresentationError(f"relation refers to undeclared generator {g}")

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise PresentationError(f"unknown generator {name!r}") from None

    @property
    def relations(self) -> list[FreeElement]:
        one = FreeElement.scalar(1.0)
        implied = []
        for j, flag in enumerate(self.flags):
            x = FreeElement.generator(j)
            xs = FreeElement.generator(j, True)
            if flag == "unitary":
                implied += [x * xs - one, xs * x - one]
            elif flag == "isometry":
                implied.append(xs * x - one)
        return implied + list(self.explicit)

    def to_source(self) -> str:
        lines = []
        for name, flag in zip(self.names, self.flags):
            lines.append(f"gen {name}{' ' + flag if flag else ''};")
        for rel in self.explicit:
            lines.append(f"rel {rel.format(self.names)};")
        return "\n".join(lines) + "\n"


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.pos = 0
        self.names: list[str] = []
        self.flags: list[str | None] = []
        self.rels: list[FreeElement] = []

    @property
    def tok(self) -> Token:
        return self.toks[self.pos]

    def error(self, msg, tok=None):
        tok = tok or self.tok
        return ParseError(msg, tok.line, tok.col)

    def take(self) -> Token:
        t = self.tok
        self.pos += 1
        return t

    def expect(self, kind, text=None) -> Token:
        t = self.tok
        if t.kind != kind or (text is not None and t.text != text):
            want = repr(text) if text else kind
            got = repr(t.text) if t.text else "end of input"
            raise self.error(f"expected {want}, found {got}")
        return self.take()

    def parse(self) -> Presentation:
        while self.tok.kind != "eof":
            t = self.tok
            if t.kind == "name" and t.text == "gen":
                self.take()
                self.gen()
            elif t.kind == "name" and t.text == "rel":
                self.take()
                self.rels.append(self.poly())
                self.expect("op", ";")
            else:
                raise self.error(f"expected 'gen' or 'rel', found {t.text!r}")
        return Presentation(self.names, self.flags, self.rels)

    def gen(self):
        t = self.tok
        if t.kind != "name" or t.text in KEYWORDS:
            raise self.error("expected a generator name")
        self.take()
        if t.text in self.names:
            raise self.error(f"generator {t.text!r} declared twice", t)
        flag = None
        if self.tok.kind == "name" and self.tok.text in FLAGS:
            flag = self.take().text
        self.expect("op", ";")
        self.names.append(t.text)
        self.flags.append(flag)

    def poly(self) -> FreeElement:
        total = FreeElement()
        sign = 1.0
        if self.tok.kind == "op" and self.tok.text in "+-":
            sign = -1.0 if self.take().text == "-" else 1.0
        total = total + self.term() * sign
        while self.tok.kind == "op" and self.tok.text in "+-":
            sign = -1.0 if self.take().text == "-" else 1.0
            total = total + self.term() * sign
        return total

    def coeff(self):
        t = self.tok
        if t.kind == "num":
            self.take()
            if t.text.endswith("i"):
                return complex(0, float(t.text[:-1]))
            return complex(float(t.text))
        if t.kind == "name" and t.text == "i":
            self.take()
            return 1j
        return None

    def term(self) -> FreeElement:
        start = self.tok
        c = self.coeff()
        if c is not None and self.tok.kind == "op" and self.tok.text == "*":
            self.take()
            if not self.at_factor():
                raise self.error("expected a generator after '*'")
        word: Word = EMPTY
        while self.at_factor():
            word = word + (self.factor(),)
        if c is None and not word:
            raise self.error("expected a term", start)
        return FreeElement.word(word, 1.0 if c is None else c)

    def at_factor(self) -> bool:
        t = self.tok
        return t.kind == "name" and t.text not in KEYWORDS

    def factor(self):
        t = self.take()
        if t.text not in self.names:
            raise self.error(f"undeclared generator {t.text!r}", t)
        starred = False
        if self.tok.kind == "op" and self.tok.text == "*":
            self.take()
            starred = True
        return (self.names.index(t.text), starred)


def parse_presentation(text: str) -> Presentation:
    return _Parser(text).parse()


@dataclass(frozen=True)
class BalanceResult:
    balanced: bool
    witness: tuple[int, Word, Word] | None = None  # (relation index, word, word)

    def describe(self, pres: Presentation) -> str:
        if self.balanced:
            return "balanced"
        k, w1, w2 = self.witness
        fmt = lambda w: FreeElement.word(w).format(pres.names)  # noqa: E731
        return f"not balanced: relation {k + 1} has monomials {fmt(w1)} and {fmt(w2)}"


def balance_check(pres: Presentation, j) -> BalanceResult:
    """Whether ``n_j`` is constant over the monomials of every relation."""
    j = pres.index(j) if isinstance(j, str) else int(j)
    if not 0 <= j < len(pres.names):
        raise PresentationError(f"generator index {j} out of range")
    for k, rel in enumerate(pres.relations):
        words = rel.words()
        if not words:
            continue
        first = words[0]
        n0 = n_count(first, j)
        for w in words[1:]:
            if n_count(w, j) != n0:
                return BalanceResult(False, (k, first, w))
    return BalanceResult(True)


def balanced_generators(pres: Presentation) -> dict[str, bool]:
    return {name: balance_check(pres, i).balanced for i, name in enumerate(pres.names)}
