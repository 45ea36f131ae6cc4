"""Cocycle matrix elements by semigroup factorisation.

For step functions ``f, g`` with common breakpoints ``0 = t0 < t1 < ... < tn < t``
and values ``(z_i, w_i)`` on ``[t_i, t_{i+1})``::

    k_t[f, g] = P^{z0,w0}_{t1-t0} o P^{z1,w1}_{t2-t1} o ... o P^{zn,wn}_{t-tn}

with ``P^{z,w}_s = exp(s (phi^zhat_what - chi(z, w) id))``. As superoperator
matrices the composition is the left-to-right product, so the earliest
interval acts last on ``x``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

import numpy as np
from scipy.integrate import solve_ivp

from .opcore import apply_superop, as_matrix, as_vector, expm, matrix_units, psd_check
from .stdgen import GeneratorMap, semigroup_generator

MERGE_TOL = 1e-12


def _is_exact(x) -> bool:
    return isinstance(x, Rational)


@dataclass(frozen=True)
class StepFunction:
    """Right-continuous step function on ``[0, total_time)``, zero afterwards.

    ``segments`` is a sequence of ``(duration, value)`` pairs. Durations given
    as ``int`` or ``Fraction`` are kept exact.
    """

    segments: tuple

    def __post_init__(self):
        segs = []
        n = None
        for dur, val in self.segments:
            if not _is_exact(dur):
                dur = float(dur)
            if not dur > 0:
                raise ValueError(f"segment durations must be positive, got {dur}")
            val = as_vector(val)
            if n is None:
                n = val.shape[0]
            elif val.shape[0] != n:
                raise ValueError("all segment values must have the same length")
            val.setflags(write=False)
            segs.append((dur, val))
        object.__setattr__(self, "segments", tuple(segs))

    @classmethod
    def constant(cls, value, duration) -> "StepFunction":
        return cls(((duration, value),))

    @property
    def n(self) -> int | None:
        return self.segments[0][1].shape[0] if self.segments else None

    @property
    def exact(self) -> bool:
        return all(_is_exact(d) for d, _ in self.segments)

    @property
    def total_time(self):
        return sum((d for d, _ in self.segments), Fraction(0) if self.exact else 0.0)

    def breakpoints(self) -> list:
        out = [Fraction(0) if self.exact else 0.0]
        for d, _ in self.segments:
            out.append(out[-1] + d)
        return out

    def __call__(self, s: float) -> np.ndarray:
        acc = 0
        for d, v in self.segments:
            acc += d
            if s < acc:
                return v
        return np.zeros(self.n or 0, dtype=complex)

    def l2_norm_sq(self, t=None) -> float:
        t = self.total_time if t is None else t
        out, acc = 0.0, 0
        for d, v in self.segments:
            seg = min(d, t - acc)
            if seg <= 0:
                break
            out += float(seg) * float(np.vdot(v, v).real)
            acc += d
        return out


def shift_step(f: StepFunction, s) -> StepFunction:
    """``f(. + s)``; shifting past the end leaves the zero function."""
    if s < 0:
        raise ValueError("shift must be non-negative")
    out = []
    acc = 0
    for d, v in f.segments:
        start, end = acc, acc + d
        acc = end
        if end <= s or (not _is_exact(end - s) and end - s <= MERGE_TOL):
            continue
        out.append((end - max(start, s), v))
    return StepFunction(tuple(out))


def _merge_points(points, exact: bool):
    points = sorted(points)
    merged = [points[0]]
    for p in points[1:]:
        if (p > merged[-1]) if exact else (p - merged[-1] > MERGE_TOL):
            merged.append(p)
    return merged


def common_segments(f: StepFunction, g: StepFunction, t):
    """``(duration, z, w)`` on the common refinement of ``f`` and ``g`` over ``[0, t]``."""
    if t < 0:
        raise ValueError("t must be non-negative")
    horizon = max(f.total_time, g.total_time)
    if t > horizon and not (not _is_exact(t) and t - horizon <= MERGE_TOL):
        raise ValueError(f"t = {t} exceeds the step-function horizon {horizon}")
    exact = f.exact and g.exact and _is_exact(t)
    pts = [p for p in f.breakpoints() + g.breakpoints() if p < t] + [t]
    pts = _merge_points([Fraction(0) if exact else 0.0] + pts, exact)
    if not exact and len(pts) > 1 and t - pts[-2] <= MERGE_TOL:
        pts = pts[:-2] + [t]
    n = f.n if f.n is not None else g.n
    zero = np.zeros(n or 0, dtype=complex)
    out = []
    for a, b in zip(pts[:-1], pts[1:]):
        mid = float(a) + 0.5 * float(b - a)
        z = f(mid) if f.segments else zero
        w = g(mid) if g.segments else zero
        out.append((b - a, z, w))
    return out


@dataclass(frozen=True, eq=False)
class CocycleElement:
    """``k_t[f, g]`` as a ``d^2 x d^2`` superoperator."""

    superop: np.ndarray
    f: StepFunction
    g: StepFunction
    t: float

    def __call__(self, x) -> np.ndarray:
        d = int(round(np.sqrt(self.superop.shape[0])))
        return apply_superop(self.superop, as_matrix(x), (d, d))


def _pad(v, n):
    return v if v.shape[0] == n else np.zeros(n, dtype=complex)


def eval_cocycle_element(phi: GeneratorMap, f: StepFunction, g: StepFunction, t) -> CocycleElement:
    """Exact ``k_t[f, g]`` by composing associated semigroups over the common refinement."""
    d, n = phi.dims.d, phi.dims.n
    for s in (f, g):
        if s.segments and s.n != n:
            raise ValueError(f"step function values must lie in C^{n}")
    out = np.eye(d * d, dtype=complex)
    for dur, z, w in common_segments(f, g, t):
        out = out @ expm(float(dur) * semigroup_generator(phi, _pad(z, n), _pad(w, n)))
    return CocycleElement(out, f, g, t)


def associated_semigroup(phi: GeneratorMap, z, w, t) -> np.ndarray:
    if t < 0:
        raise ValueError("t must be non-negative")
    return expm(float(t) * semigroup_generator(phi, z, w))


def check_cocycle_identity(phi: GeneratorMap, f: StepFunction, g: StepFunction, s, t) -> float:
    """``|k_{s+t}[f,g] - k_s[f,g] o k_t[f(.+s), g(.+s)]|_max``."""
    if s < 0 or t < 0:
        raise ValueError("s and t must be non-negative")
    whole = eval_cocycle_element(phi, f, g, s + t).superop
    head = eval_cocycle_element(phi, f, g, s).superop
    tail = eval_cocycle_element(phi, shift_step(f, s), shift_step(g, s), t).superop
    return float(np.max(np.abs(whole - head @ tail)))


def integrate_cocycle(phi: GeneratorMap, f: StepFunction, g: StepFunction, t,
                      rtol: float = 1e-11, atol: float = 1e-13) -> np.ndarray:
    """Reference solution of ``M' = M L(s)``, ``M(0) = I``, with an adaptive
    Runge-Kutta 4(5) integrator restarted at every breakpoint.

    Uses no matrix exponentials, so it checks the factorisation independently.
    """
    d, n = phi.dims.d, phi.dims.n
    D = d * d
    M = np.eye(D, dtype=complex)
    for dur, z, w in common_segments(f, g, t):
        L = semigroup_generator(phi, _pad(z, n), _pad(w, n))

        def rhs(_s, y, L=L):
            return (y.reshape(D, D) @ L).ravel()

        sol = solve_ivp(rhs, (0.0, float(dur)), M.ravel(), method="RK45", rtol=rtol, atol=atol)
        if not sol.success:
            raise RuntimeError(f"integrator failed: {sol.message}")
        M = sol.y[:, -1].reshape(D, D)
    return M


def choi_matrix(superop, d: int) -> np.ndarray:
    """``sum_ij E_ij (x) S(E_ij)``."""
    out = np.zeros((d * d, d * d), dtype=complex)
    for e in matrix_units(d):
        out += np.kron(e, apply_superop(superop, e, (d, d)))
    return out


def is_completely_positive(superop, d: int, tol: float = 1e-9) -> bool:
    C = choi_matrix(superop, d)
    C = 0.5 * (C + C.conj().T)
    return psd_check(C, tol)[0]


def superop_norm(superop, d: int) -> float:
    """``|S(1)|``, which is the operator norm of ``S`` when ``S`` is completely positive."""
    return float(np.linalg.norm(apply_superop(superop, np.eye(d), (d, d)), 2))


__all__ = [
    "StepFunction",
    "CocycleElement",
    "shift_step",
    "common_segments",
    "eval_cocycle_element",
    "associated_semigroup",
    "check_cocycle_identity",
    "integrate_cocycle",
    "choi_matrix",
    "is_completely_positive",
    "superop_norm",
]
