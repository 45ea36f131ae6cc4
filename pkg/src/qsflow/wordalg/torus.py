"""Symbolic noncommutative torus ``UV = lambda VU`` on the monomial basis ``U^m V^n``.

``lambda = exp(2 pi i theta)`` with ``theta`` in turns, kept as a
``Fraction`` whenever it is given exactly so that products never drift.
"""

from __future__ import annotations

import cmath
import math
from fractions import Fraction
from numbers import Rational

import numpy as np

from ..cocycle import StepFunction, common_segments
from ..opcore import as_matrix, as_vector
from ..stdgen import chi
from .constants import ADJOINT_SIGN, PHASE_SIGN

Key = tuple[int, int]


def _norm_theta(theta):
    if isinstance(theta, Rational):
        return Fraction(theta) % 1
    return float(theta) % 1.0


def theta_from_lambda(lam: complex, max_den: int = 10 ** 6):
    """Angle in turns; snaps to a ``Fraction`` when ``lam`` is a root of unity to 1e-14."""
    lam = complex(lam)
    if abs(abs(lam) - 1.0) > 1e-14:
        raise ValueError("lambda must lie on the unit circle")
    turns = (cmath.phase(lam) / (2 * math.pi)) % 1.0
    frac = Fraction(turns).limit_denominator(max_den)
    if abs(cmath.exp(2j * math.pi * float(frac)) - lam) <= 1e-14:
        return frac % 1
    return turns


def lam_power(theta, k: int) -> complex:
    """``lambda^k`` computed from the reduced angle ``k theta mod 1``."""
    if k == 0:
        return 1.0 + 0j
    a = (theta * k) % 1
    if isinstance(a, Fraction):
        # exact values at the quarter turns
        quarter = {Fraction(0): 1, Fraction(1, 4): 1j, Fraction(1, 2): -1, Fraction(3, 4): -1j}
        if a in quarter:
            return complex(quarter[a])
    return cmath.exp(2j * math.pi * float(a))


class TorusElement:
    """Finite linear combination of monomials ``U^m V^n``."""

    __slots__ = ("theta", "_c")

    def __init__(self, theta, coeffs=None):
        self.theta = _norm_theta(theta)
        acc: dict[Key, complex] = {}
        for (m, n), c in (coeffs or {}).items():
            key = (int(m), int(n))
            acc[key] = acc.get(key, 0) + complex(c)
        self._c = {k: v for k, v in acc.items() if v != 0}

    @classmethod
    def from_lambda(cls, lam, coeffs=None):
        return cls(theta_from_lambda(lam), coeffs)

    @classmethod
    def monomial(cls, theta, m: int, n: int, c: complex = 1.0):
        return cls(theta, {(m, n): c})

    @classmethod
    def one(cls, theta):
        return cls(theta, {(0, 0): 1.0})

    @classmethod
    def U(cls, theta):
        return cls(theta, {(1, 0): 1.0})

    @classmethod
    def V(cls, theta):
        return cls(theta, {(0, 1): 1.0})

    @property
    def lam(self) -> complex:
        return lam_power(self.theta, 1)

    @property
    def coeffs(self) -> dict[Key, complex]:
        return dict(self._c)

    def coeff(self, m, n) -> complex:
        return self._c.get((m, n), 0j)

    def support(self) -> list[Key]:
        return sorted(self._c)

    def _same(self, other: "TorusElement"):
        if self.theta != other.theta:
            raise ValueError(f"lambda mismatch: {self.theta} vs {other.theta} turns")

    def __add__(self, other):
        self._same(other)
        out = dict(self._c)
        for k, v in other._c.items():
            out[k] = out.get(k, 0) + v
        return TorusElement(self.theta, out)

    def __neg__(self):
        return TorusElement(self.theta, {k: -v for k, v in self._c.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, TorusElement):
            return torus_mul(self, other)
        return TorusElement(self.theta, {k: v * complex(other) for k, v in self._c.items()})

    def __rmul__(self, other):
        return TorusElement(self.theta, {k: complex(other) * v for k, v in self._c.items()})

    def __eq__(self, other):
        if not isinstance(other, TorusElement):
            return NotImplemented
        return self.theta == other.theta and self._c == other._c

    def __hash__(self):
        return hash((self.theta, frozenset(self._c.items())))

    def adjoint(self) -> "TorusElement":
        return torus_adjoint(self)

    def derivation(self, j: int) -> "TorusElement":
        """``d_1(U^m V^n) = m U^m V^n``, ``d_2(U^m V^n) = n U^m V^n``."""
        if j not in (1, 2):
            raise ValueError("the torus has derivations d_1 and d_2 only")
        return TorusElement(self.theta, {k: k[j - 1] * v for k, v in self._c.items()})

    def max_abs_diff(self, other) -> float:
        return max((abs(v) for v in (self - other)._c.values()), default=0.0)

    def is_self_adjoint(self, tol: float = 1e-12) -> bool:
        return self.max_abs_diff(self.adjoint()) <= tol

    def __repr__(self):
        return f"TorusElement(theta={self.theta!r}, {self._c!r})"


def torus_mul(a: TorusElement, b: TorusElement) -> TorusElement:
    """Bilinear extension of ``(U^m V^n)(U^p V^q) = lambda^(s n p) U^(m+p) V^(n+q)``."""
    a._same(b)
    out: dict[Key, complex] = {}
    for (m, n), x in a._c.items():
        for (p, q), y in b._c.items():
            key = (m + p, n + q)
            out[key] = out.get(key, 0) + x * y * lam_power(a.theta, PHASE_SIGN * n * p)
    return TorusElement(a.theta, out)


def torus_adjoint(a: TorusElement) -> TorusElement:
    return TorusElement(a.theta, {
        (-m, -n): c.conjugate() * lam_power(a.theta, ADJOINT_SIGN * m * n) for (m, n), c in a._c.items()
    })


# -- l2(Z^2) representation on finitely supported sequences --------------------


def _apply_U(theta, u: dict, power: int) -> dict:
    # (U u)_{m,n} = u_{m+1,n}: the entry at (m, n) moves to (m - 1, n)
    return {(m - power, n): c for (m, n), c in u.items()}


def _apply_V(theta, u: dict, power: int) -> dict:
    # (V u)_{m,n} = lambda^m u_{m,n+1}; V^k picks up lambda^{k m}
    return {(m, n - power): c * lam_power(theta, power * m) for (m, n), c in u.items()}


def lattice_apply(a: TorusElement, u: dict) -> dict:
    """Act with ``a`` on a finitely supported ``u: Z^2 -> C`` (``V^n`` first, then ``U^m``)."""
    out: dict[Key, complex] = {}
    for (m, n), c in a._c.items():
        v = _apply_U(a.theta, _apply_V(a.theta, u, n), m)
        for k, val in v.items():
            out[k] = out.get(k, 0) + c * val
    return {k: v for k, v in out.items() if v != 0}


def lattice_adjoint_apply(a: TorusElement, u: dict) -> dict:
    """Act with the Hilbert-space adjoint of ``a``, from the matrix entries ``<e_p, a e_q>``."""
    out: dict[Key, complex] = {}
    for (m, n), c in a._c.items():
        for (p, q), val in u.items():
            # a e_{p',q'} has the single entry c lambda^{n m'} at (m'-m, q'-n)
            src = (p + m, q + n)
            phase = lam_power(a.theta, n * src[0])
            out[src] = out.get(src, 0) + np.conj(c * phase) * val
    return {k: v for k, v in out.items() if v != 0}


def lattice_residual(lhs: TorusElement, rhs_apply, window: int = 2) -> float:
    """``max |lhs e_k - rhs_apply(e_k)|`` over basis vectors ``e_k`` in ``[-window, window]^2``."""
    worst = 0.0
    for p in range(-window, window + 1):
        for q in range(-window, window + 1):
            e = {(p, q): 1.0 + 0j}
            a = lattice_apply(lhs, e)
            b = rhs_apply(e)
            for k in set(a) | set(b):
                worst = max(worst, abs(a.get(k, 0) - b.get(k, 0)))
    return worst


def oracle_phase_signs(theta=Fraction(1, 7)) -> tuple[int, int]:
    """Re-derive ``(PHASE_SIGN, ADJOINT_SIGN)`` from the lattice representation."""
    lam = lam_power(theta, 1)
    e = {(0, 0): 1.0 + 0j}
    U = TorusElement.U(theta)
    V = TorusElement.V(theta)
    # V U e versus U V e
    vu = lattice_apply(V, lattice_apply(U, e))
    uv = lattice_apply(U, lattice_apply(V, e))
    k = next(iter(uv))
    ratio = vu[k] / uv[k]  # V U = ratio * U V
    phase_sign = 1 if abs(ratio - lam) < 1e-12 else -1 if abs(ratio - 1 / lam) < 1e-12 else 0
    # (U V)* e from the lattice adjoint, compared with U^{-1} V^{-1} e
    uv_mono = TorusElement.monomial(theta, 1, 1)
    adj = lattice_adjoint_apply(uv_mono, e)
    plain = lattice_apply(TorusElement.monomial(theta, -1, -1), e)
    k = next(iter(plain))
    ratio = adj[k] / plain[k]
    adjoint_sign = 1 if abs(ratio - lam) < 1e-12 else -1 if abs(ratio - 1 / lam) < 1e-12 else 0
    return phase_sign, adjoint_sign


# -- generators from balanced derivations ---------------------------------------


def torus_compressed_scalar(c1, c2, z, w, m: int, n: int) -> complex:
    """``s`` with ``E^zhat phi(U^m V^n) E_what = s U^m V^n`` for
    ``delta = sum c_j d_j (x) e_j``, ``tau = -1/2 sum |c_j|^2 d_j^2``.

    ``s = -1/2 (|c1|^2 m^2 + |c2|^2 n^2) + (conj(z1) c1 - w1 conj(c1)) m + (conj(z2) c2 - w2 conj(c2)) n``.
    """
    z = as_vector(z, 2)
    w = as_vector(w, 2)
    c = np.array([c1, c2], dtype=complex)
    k = np.array([m, n], dtype=float)
    return complex(-0.5 * np.sum(np.abs(c) ** 2 * k ** 2) + np.sum((np.conj(z) * c - w * np.conj(c)) * k))


def symbolic_generator_blocks(c1, c2, x: TorusElement):
    """``(tau(x), [delta_j(x)], [delta_dag_j(x)])`` evaluated in the symbolic algebra."""
    cs = [complex(c1), complex(c2)]
    tau = TorusElement(x.theta)
    deltas, daggers = [], []
    for j, c in zip((1, 2), cs):
        dj = x.derivation(j)
        tau = tau + (-0.5 * abs(c) ** 2) * dj.derivation(j)
        deltas.append(c * dj)
        daggers.append((c * x.adjoint().derivation(j)).adjoint())
    return tau, deltas, daggers


def compressed_generator_symbolic(c1, c2, z, w, x: TorusElement) -> TorusElement:
    """``E^zhat phi(x) E_what`` expanded term by term in the symbolic algebra."""
    z = as_vector(z, 2)
    w = as_vector(w, 2)
    tau, deltas, daggers = symbolic_generator_blocks(c1, c2, x)
    out = tau
    for j in range(2):
        out = out + np.conj(z[j]) * deltas[j] + w[j] * daggers[j]
    return out


def torus_cocycle_element(c1, c2, f: StepFunction, g: StepFunction, t, m: int, n: int) -> complex:
    """Scalar ``k_t[f, g](U^m V^n) / U^m V^n``: the product of ``exp(dur (s - chi))`` over segments."""
    out = 1.0 + 0j
    for dur, z, w in common_segments(f, g, t):
        z = z if z.shape[0] == 2 else np.zeros(2, dtype=complex)
        w = w if w.shape[0] == 2 else np.zeros(2, dtype=complex)
        out *= np.exp(float(dur) * (torus_compressed_scalar(c1, c2, z, w, m, n) - chi(z, w)))
    return complex(out)


def weyl_shift_scalar_residual(c1, c2, h: float, c, U, z, w, m: int, n: int, theta=Fraction(1, 5)) -> float:
    """Compress the Weyl-perturbed torus generator at ``(z, w)`` symbolically and compare with
    the unperturbed scalar at ``(c + Uz, c + Uw)``."""
    from ..perturb import weyl_coefficient

    C = weyl_coefficient(h, c, U, d=1).matrix
    x = TorusElement.monomial(theta, m, n)
    tau, deltas, daggers = symbolic_generator_blocks(c1, c2, x)
    zero = TorusElement(theta)
    phi = [[tau, daggers[0], daggers[1]], [deltas[0], zero, zero], [deltas[1], zero, zero]]
    Delta = np.diag([0.0, 1.0, 1.0])
    left = (np.eye(3) + Delta @ C).conj().T
    right = np.eye(3) + Delta @ C
    extra = C.conj().T + C.conj().T @ Delta @ C + C
    zh = np.concatenate([[1.0], as_vector(z, 2)])
    wh = np.concatenate([[1.0], as_vector(w, 2)])
    lhs = TorusElement(theta)
    for a in range(3):
        for b in range(3):
            coef = np.conj(zh) @ left[:, a] * (right[b, :] @ wh)
            if coef != 0:
                lhs = lhs + coef * phi[a][b]
    lhs = lhs + complex(np.conj(zh) @ extra @ wh) * x
    cv = as_vector(c, 2)
    U = as_matrix(U)
    s = torus_compressed_scalar(c1, c2, cv + U @ zh[1:], cv + U @ wh[1:], m, n)
    return lhs.max_abs_diff(s * x)


def _comm_r(x: TorusElement, r: TorusElement) -> TorusElement:
    """``d_r(x) = x r - r x``."""
    return x * r - r * x


def gauge_perturb_check(betas, n_elems, degree_bound: int = 3, tol: float = 1e-12, theta=None,
                        drop_dn_term: bool = False) -> float:
    """Max coefficient residual of ``tau' = -1/2 sum (beta_j d_j + d_{n_j})^2`` on monomials
    with ``|m|, |n| <= degree_bound``.

    ``tau'`` is the vacuum block of the perturbed generator with ``c_j = i beta_j``,
    ``l_j = i n_j`` and ``k = -1/2 sum (beta_j d_j(n_j) + n_j^2)``; with
    ``drop_dn_term`` the ``d_j(n_j)`` part of ``k`` is omitted.
    """
    betas = [float(b) for b in betas]
    if len(betas) != 2:
        raise ValueError("the torus has two balanced generators; give two betas")
    n_elems = list(n_elems)
    if theta is None:
        theta = n_elems[0].theta if n_elems else Fraction(1, 5)
    while len(n_elems) < 2:
        n_elems.append(TorusElement(theta))
    for r in n_elems:
        if not r.is_self_adjoint(tol):
            raise ValueError("every n_j must be self-adjoint")
    cs = [1j * b for b in betas]
    ls = [1j * r for r in n_elems]
    k = TorusElement(theta)
    for j, (b, r) in enumerate(zip(betas, n_elems), start=1):
        term = r * r if drop_dn_term else b * r.derivation(j) + r * r
        k = k + (-0.5) * term
    worst = 0.0
    for m in range(-degree_bound, degree_bound + 1):
        for n in range(-degree_bound, degree_bound + 1):
            x = TorusElement.monomial(theta, m, n)
            tau, deltas, daggers = symbolic_generator_blocks(cs[0], cs[1], x)
            lhs = tau + k.adjoint() * x + x * k
            for j in range(2):
                l_adj = ls[j].adjoint()
                lhs = lhs + l_adj * deltas[j] + l_adj * x * ls[j] + daggers[j] * ls[j]
            rhs = TorusElement(theta)
            for j, (b, r) in enumerate(zip(betas, n_elems), start=1):
                def D(y, b=b, r=r, j=j):
                    return b * y.derivation(j) + _comm_r(y, r)
                rhs = rhs + (-0.5) * D(D(x))
            worst = max(worst, lhs.max_abs_diff(rhs))
    return worst


def random_self_adjoint(theta, rng: np.random.Generator, terms: int = 3, degree: int = 2) -> TorusElement:
    out = TorusElement(theta)
    for _ in range(terms):
        m, n = (int(v) for v in rng.integers(-degree, degree + 1, size=2))
        c = complex(rng.normal(), rng.normal())
        out = out + TorusElement.monomial(theta, m, n, c)
    return 0.5 * (out + out.adjoint())
