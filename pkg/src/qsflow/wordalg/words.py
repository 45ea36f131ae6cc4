"""Words in generators and their adjoints, and finitely supported linear
combinations of them (elements of the free *-algebra)."""

from __future__ import annotations

from collections.abc import Iterable, Mapping

Letter = tuple[int, bool]  # (generator index, starred)
Word = tuple[Letter, ...]

EMPTY: Word = ()


def word_adjoint(w: Word) -> Word:
    return tuple((g, not s) for g, s in reversed(w))


def n_count(b: Word, j: int) -> int:
    """Copies of ``a_j`` minus copies of ``a_j*`` in ``b``."""
    return sum((1 if not s else -1) for g, s in b if g == j)


class FreeElement:
    """Finitely supported map ``Word -> complex`` with zero terms dropped."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[Word, complex] | Iterable[tuple[Word, complex]] = ()):
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[Word, complex] = {}
        for w, c in items:
            w = tuple((int(g), bool(s)) for g, s in w)
            acc[w] = acc.get(w, 0) + complex(c)
        self._terms = {w: c for w, c in acc.items() if c != 0}

    @classmethod
    def word(cls, w: Word, coeff: complex = 1.0) -> "FreeElement":
        return cls({w: coeff})

    @classmethod
    def scalar(cls, c: complex) -> "FreeElement":
        return cls({EMPTY: c})

    @classmethod
    def generator(cls, j: int, starred: bool = False) -> "FreeElement":
        return cls({((j, starred),): 1.0})

    @property
    def terms(self) -> dict[Word, complex]:
        return dict(self._terms)

    def words(self) -> list[Word]:
        return sorted(self._terms)

    def coeff(self, w: Word) -> complex:
        return self._terms.get(w, 0j)

    def __len__(self):
        return len(self._terms)

    def __bool__(self):
        return bool(self._terms)

    def __eq__(self, other):
        if not isinstance(other, FreeElement):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def __add__(self, other: "FreeElement") -> "FreeElement":
        out = dict(self._terms)
        for w, c in other._terms.items():
            out[w] = out.get(w, 0) + c
        return FreeElement(out)

    def __neg__(self):
        return FreeElement({w: -c for w, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, FreeElement):
            acc: dict[Word, complex] = {}
            for w1, c1 in self._terms.items():
                for w2, c2 in other._terms.items():
                    w = w1 + w2
                    acc[w] = acc.get(w, 0) + c1 * c2
            return FreeElement(acc)
        return FreeElement({w: c * complex(other) for w, c in self._terms.items()})

    def __rmul__(self, other):
        return FreeElement({w: complex(other) * c for w, c in self._terms.items()})

    def adjoint(self) -> "FreeElement":
        return FreeElement({word_adjoint(w): c.conjugate() for w, c in self._terms.items()})

    def max_abs_diff(self, other: "FreeElement") -> float:
        return max((abs(c) for c in (self - other)._terms.values()), default=0.0)

    def __repr__(self):
        return f"FreeElement({self._terms!r})"

    def format(self, names) -> str:
        if not self._terms:
            return "0"
        parts = []
        for w in self.words():
            c = self._terms[w]
            body = " ".join(names[g] + ("*" if s else "") for g, s in w)
            parts.append(_format_term(c, body))
        text = " ".join(parts)
        return text[2:] if text.startswith("+ ") else text


def _format_coeff(c: complex) -> str:
    if c.imag == 0:
        return f"{c.real:g}"
    if c.real == 0:
        return f"{c.imag:g}i"
    raise ValueError("only purely real or purely imaginary coefficients have a source form")


def _format_term(c: complex, body: str) -> str:
    neg = (c.imag == 0 and c.real < 0) or (c.real == 0 and c.imag < 0)
    mag = -c if neg else c
    sign = "-" if neg else "+"
    if not body:
        return f"{sign} {_format_coeff(mag)}"
    if mag == 1:
        return f"{sign} {body}"
    return f"{sign} {_format_coeff(mag)} * {body}"


def apply_derivation(x: FreeElement, j: int) -> FreeElement:
    """``d_j`` extended linearly from ``d_j(b) = n_j(b) b``."""
    return FreeElement({w: n_count(w, j) * c for w, c in x.terms.items()})
