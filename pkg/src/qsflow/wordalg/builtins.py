"""Built-in presentations.

Each entry has a text generator taking the size parameter ``N`` (ignored by
fixed presentations); the shipped ``.qsp`` files are its output at the
default size.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from importlib import resources

from .presentation import Presentation, parse_presentation


def _zs(N):
    return [f"z{i}" for i in range(1, N + 1)]


def _header(title: str) -> str:
    return f"# {title}\n"


def rotation_algebra_source(N=None) -> str:
    return (
        _header("universal rotation algebra: UV = ZVU with Z central")
        + "gen U unitary;\ngen V unitary;\ngen Z unitary;\n"
        + "rel U V - Z V U;\nrel U Z - Z U;\nrel V Z - Z V;\n"
    )


def cuntz_source(N: int = 2) -> str:
    if N < 1:
        raise ValueError("Cuntz algebras need N >= 1")
    names = [f"s{i}" for i in range(1, N + 1)]
    lines = [_header(f"Cuntz algebra O_{N}")]
    lines += [f"gen {s} isometry;\n" for s in names]
    lines.append("rel " + " + ".join(f"{s} {s}*" for s in names) + " - 1;\n")
    return "".join(lines)


def _sphere_core(N: int, title: str) -> list[str]:
    zs = _zs(N)
    lines = [_header(title)]
    lines += [f"gen {z};\n" for z in zs]
    lines.append("rel " + " + ".join(f"{z} {z}*" for z in zs) + " - 1;\n")
    lines.append("rel " + " + ".join(f"{z}* {z}" for z in zs) + " - 1;\n")
    return lines


def _letters(N):
    """``(generator index, letter text)`` for every ``z_i`` and ``z_i*``."""
    return [(i, z + star) for i, z in enumerate(_zs(N)) for star in ("", "*")]


def free_sphere_source(N: int = 3) -> str:
    return "".join(_sphere_core(N, f"free complex sphere, N = {N}"))


def twisted_sphere_source(N: int = 3) -> str:
    lines = _sphere_core(N, f"twisted complex sphere, N = {N}")
    letters = _letters(N)
    for (i, a), (j, b) in itertools.combinations(letters, 2):
        # alpha beta = -beta alpha for distinct generators, commute otherwise
        sign = "+" if i != j else "-"
        lines.append(f"rel {a} {b} {sign} {b} {a};\n")
    return "".join(lines)


def _triples(N):
    letters = _letters(N)
    seen = set()
    for a, b, c in itertools.product(letters, repeat=3):
        if a == c:
            continue
        key = frozenset([(a, b, c), (c, b, a)])
        if key in seen:
            continue
        seen.add(key)
        yield a, b, c


def halflib_sphere_source(N: int = 3) -> str:
    lines = _sphere_core(N, f"half-liberated complex sphere, N = {N}")
    for (_, a), (_, b), (_, c) in _triples(N):
        lines.append(f"rel {a} {b} {c} - {c} {b} {a};\n")
    return "".join(lines)


def twisted_halflib_sphere_source(N: int = 3) -> str:
    lines = _sphere_core(N, f"twisted half-liberated complex sphere, N = {N}")
    for (i, a), (j, b), (k, c) in _triples(N):
        sign = "+" if len({i, j, k}) == 3 else "-"
        lines.append(f"rel {a} {b} {c} {sign} {c} {b} {a};\n")
    return "".join(lines)


def real_sphere_source(N: int = 3) -> str:
    xs = [f"x{i}" for i in range(1, N + 1)]
    lines = [_header(f"free real sphere, N = {N}")]
    lines += [f"gen {x};\n" for x in xs]
    lines += [f"rel {x} - {x}*;\n" for x in xs]
    lines.append("rel " + " + ".join(f"{x} {x}" for x in xs) + " - 1;\n")
    return "".join(lines)


@dataclass(frozen=True)
class Builtin:
    name: str
    source: object
    default_n: int | None
    description: str

    @property
    def filename(self) -> str:
        suffix = "" if self.default_n is None else f"-{self.default_n}"
        return self.name.replace("-N", "") + suffix + ".qsp"

    @property
    def parametric(self) -> bool:
        return self.default_n is not None


BUILTINS = {
    b.name: b
    for b in [
        Builtin("rotation-algebra", rotation_algebra_source, None, "unitaries U, V, Z with UV = ZVU, Z central"),
        Builtin("cuntz-N", cuntz_source, 2, "isometries s_1..s_N with sum s_i s_i* = 1"),
        Builtin("free-sphere", free_sphere_source, 3, "sum z_i z_i* = sum z_i* z_i = 1"),
        Builtin("twisted-sphere", twisted_sphere_source, 3, "free sphere with twisted commutation"),
        Builtin("halflib-sphere", halflib_sphere_source, 3, "free sphere with abc = cba"),
        Builtin("twisted-halflib-sphere", twisted_halflib_sphere_source, 3, "twisted half-liberation"),
        Builtin("real-sphere", real_sphere_source, 3, "self-adjoint x_i with sum x_i^2 = 1"),
    ]
}


def list_builtins() -> list[Builtin]:
    return [BUILTINS[k] for k in sorted(BUILTINS)]


def builtin_source(name: str, N: int | None = None) -> str:
    """Source text of a built-in; ``cuntz-3`` style names select the size."""
    if name not in BUILTINS:
        base, _, tail = name.rpartition("-")
        for key, b in BUILTINS.items():
            if b.parametric and tail.isdigit() and key.replace("-N", "") == base:
                return b.source(int(tail))
            if b.parametric and tail.isdigit() and key == base:
                return b.source(int(tail))
        raise KeyError(f"unknown built-in presentation {name!r}")
    b = BUILTINS[name]
    if not b.parametric:
        return b.source()
    return b.source(b.default_n if N is None else N)


def shipped_source(name: str) -> str:
    """Contents of the data file for a built-in at its default size."""
    b = BUILTINS[name]
    return resources.files("qsflow").joinpath("data", "presentations", b.filename).read_text(encoding="utf-8")


def load_builtin(name: str, N: int | None = None) -> Presentation:
    return parse_presentation(builtin_source(name, N))
