"""Multiplier coefficients, the ``q(F)`` calculus and the perturbed generator.

A multiplier coefficient on ``h (x) k^`` is written in blocks as::

    F = [ k   m     ]
        [ l   w - I ]

and drives ``dX = j(F) X dLambda``. ``q(F) = F + F* + F* Delta F`` is
negative semidefinite exactly when ``X`` is contractive and vanishes exactly
when ``X`` is isometric.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .opcore import (
    DEFAULT_TOL,
    DimensionError,
    NotHermitianError,
    SpaceDims,
    ampliate,
    as_matrix,
    as_vector,
    dag,
    delta_op,
    is_hermitian,
    psd_check,
    psd_sqrt,
    matrix_units,
)
from .stdgen import (
    GeneratorMap,
    StandardFormError,
    compress_generator,
    validate_standard_form,
)


class ContractivityInconsistency(RuntimeError):
    """The direct PSD route and the block characterisation disagree."""


class NotIsometricError(ValueError):
    pass


@dataclass(frozen=True)
class BlockCoefficient:
    """Multiplier coefficient ``F`` held by its blocks ``k, m, l, w``.

    The bottom-right block of the assembled matrix is ``w - I``.
    """

    dims: SpaceDims
    k: np.ndarray
    m: np.ndarray
    l: np.ndarray  # noqa: E741
    w: np.ndarray
    # the assembled block w - I, kept when known so assembly round-trips exactly
    w_shift: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        d, n = self.dims.d, self.dims.n
        want = {"k": (d, d), "m": (d, d * n), "l": (d * n, d), "w": (d * n, d * n)}
        if self.w_shift is not None:
            want["w_shift"] = (d * n, d * n)
        for name, shape in want.items():
            arr = np.array(getattr(self, name), dtype=complex).reshape(shape)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_matrix(cls, F, dims: SpaceDims) -> "BlockCoefficient":
        F = as_matrix(F)
        if F.shape != (dims.big, dims.big):
            raise DimensionError(f"F must be {dims.big}-square, got {F.shape}")
        d = dims.d
        return cls(dims, F[:d, :d], F[:d, d:], F[d:, :d], F[d:, d:] + np.eye(d * dims.n), F[d:, d:])

    @classmethod
    def zero(cls, dims: SpaceDims) -> "BlockCoefficient":
        return cls.from_matrix(np.zeros((dims.big, dims.big)), dims)

    @property
    def matrix(self) -> np.ndarray:
        d, n = self.dims.d, self.dims.n
        shift = self.w - np.eye(d * n) if self.w_shift is None else self.w_shift
        return np.block([[self.k, self.m], [self.l, shift]])

    def adjoint(self) -> "BlockCoefficient":
        return BlockCoefficient.from_matrix(dag(self.matrix), self.dims)


@dataclass(frozen=True)
class ContractivityReport:
    q_matrix: np.ndarray
    is_contractive: bool
    block_contractive: bool
    is_isometric_coefficient: bool
    d_witness: np.ndarray
    v_witness: np.ndarray | None
    v_unique: bool
    m_residual: float
    min_eigenvalue: float


def qF(F: BlockCoefficient) -> np.ndarray:
    """``F + F* + F* Delta F``, symmetrised so the result is exactly Hermitian."""
    M = F.matrix
    q = M + dag(M) + dag(M) @ delta_op(F.dims) @ M
    return 0.5 * (q + dag(q))


def classify_contractive(F: BlockCoefficient, tol: float = DEFAULT_TOL) -> ContractivityReport:
    """Decide ``q(F) <= 0`` twice: directly, and through the block factorisation
    ``m = -l* w - d^{1/2} v (I - w* w)^{1/2}`` with ``d = -(k + k* + l* l)``.

    The witness ``v`` is rebuilt with pseudo-inverses; when ``I - w* w`` or ``d``
    is singular it is one of many and ``v_unique`` is False.
    """
    q = qF(F)
    direct, lo = psd_check(-q, tol)
    qnorm = max(1.0, float(np.linalg.norm(q, 2)))

    k, m, l, w = F.k, F.m, F.l, F.w
    dn = w.shape[0]
    dw = -(k + dag(k) + dag(l) @ l)
    dw = 0.5 * (dw + dag(dw))
    defect = np.eye(dn) - dag(w) @ w
    defect = 0.5 * (defect + dag(defect))
    w_ok, _ = psd_check(defect, tol)
    d_ok, _ = psd_check(dw, tol)
    d_half, d_half_inv = psd_sqrt(dw)
    c_half, c_half_inv = psd_sqrt(defect)
    target = -m - dag(l) @ w
    v = d_half_inv @ target @ c_half_inv
    m_residual = float(np.max(np.abs(d_half @ v @ c_half - target), initial=0.0))
    v_norm = float(np.linalg.norm(v, 2)) if v.size else 0.0
    unique = bool(
        np.linalg.matrix_rank(d_half, tol=1e-10) == d_half.shape[0]
        and (dn == 0 or np.linalg.matrix_rank(c_half, tol=1e-10) == dn)
    )
    slack = np.sqrt(tol) * qnorm
    block = bool(w_ok and d_ok and v_norm <= 1.0 + slack and m_residual <= slack)

    if block != direct and abs(lo) > 1e3 * slack:
        raise ContractivityInconsistency(
            f"PSD route says {direct}, block route says {block} (min eigenvalue {lo:.3e})"
        )
    isometric = bool(np.max(np.abs(q), initial=0.0) <= tol * qnorm)
    return ContractivityReport(
        q_matrix=q,
        is_contractive=direct,
        block_contractive=block,
        is_isometric_coefficient=isometric and direct,
        d_witness=dw,
        v_witness=v if direct else None,
        v_unique=unique,
        m_residual=m_residual,
        min_eigenvalue=-float(np.linalg.eigvalsh(q)[-1]),
    )


def make_isometric_coefficient(h, l, w, tol: float = DEFAULT_TOL) -> BlockCoefficient:
    """``F`` with ``k = ih - 1/2 l* l`` and ``m = -l* w`` for an isometry ``w``."""
    h = as_matrix(h)
    l = as_matrix(l)  # noqa: E741
    w = as_matrix(w)
    if not is_hermitian(h, tol):
        raise NotHermitianError("h must be Hermitian")
    d = h.shape[0]
    if l.shape[1] != d or l.shape[0] % d:
        raise DimensionError("l must have shape (d*n, d)")
    n = l.shape[0] // d
    if w.shape != (d * n, d * n):
        raise DimensionError("w must act on h (x) k")
    if np.max(np.abs(dag(w) @ w - np.eye(d * n)), initial=0.0) > tol:
        raise NotIsometricError("w is not an isometry")
    return BlockCoefficient(SpaceDims(d, n), 1j * h - 0.5 * dag(l) @ l, -dag(l) @ w, l, w)


def weyl_coefficient(h: float, c, U, d: int = 1, tol: float = DEFAULT_TOL) -> BlockCoefficient:
    """``I_d (x) C`` with ``C = [[ih - |c|^2/2, -<U*c|], [|c>, U - I]]``."""
    c = as_vector(c)
    U = as_matrix(U)
    n = c.shape[0]
    if U.shape != (n, n):
        raise DimensionError("U must be n x n")
    if np.max(np.abs(dag(U) @ U - np.eye(n)), initial=0.0) > tol:
        raise NotIsometricError("U is not unitary")
    C = np.zeros((n + 1, n + 1), dtype=complex)
    C[0, 0] = 1j * float(np.real(h)) - 0.5 * np.vdot(c, c).real
    C[0, 1:] = -np.conj(dag(U) @ c)
    C[1:, 0] = c
    C[1:, 1:] = U - np.eye(n)
    return BlockCoefficient.from_matrix(np.kron(C, np.eye(d)), SpaceDims(d, n))


def _check_dims(phi: GeneratorMap, *coeffs: BlockCoefficient):
    for F in coeffs:
        if F.dims != phi.dims:
            raise DimensionError(f"coefficient dims {F.dims} do not match generator dims {phi.dims}")


def perturbed_generator(phi: GeneratorMap, F: BlockCoefficient, G: BlockCoefficient) -> GeneratorMap:
    """Generator of ``x -> X* j(x) Y``::

        psi(x) = (I + Delta F)* phi(x) (I + Delta G) + F*(x(x)I) + F* Delta (x(x)I) Delta G + (x(x)I) G

    computed at superoperator level.
    """
    _check_dims(phi, F, G)
    dims = phi.dims
    D, d = dims.big, dims.d
    Delta = delta_op(dims)
    Fm, Gm = F.matrix, G.matrix
    eye = np.eye(D)
    left = dag(eye + Delta @ Fm)
    right = eye + Delta @ Gm
    units = np.stack(matrix_units(d))
    amp = np.einsum("ab,kij->kaibj", np.eye(dims.nhat), units).reshape(d * d, D, D)
    out = (
        left @ phi.apply_many(units) @ right
        + dag(Fm) @ amp
        + (dag(Fm) @ Delta) @ amp @ (Delta @ Gm)
        + amp @ Gm
    )
    action = GeneratorMap.from_unit_images(dims, out).action
    return phi.with_action(action)


def perturbed_generator_blocks(phi: GeneratorMap, F: BlockCoefficient, G: BlockCoefficient,
                               check: bool = True, tol: float = 1e-9) -> GeneratorMap:
    """The same generator assembled entry by entry from the four blocks of ``phi``.

    Requires ``phi`` in standard form (validated unless ``check`` is False).
    """
    _check_dims(phi, F, G)
    if check:
        report = validate_standard_form(phi, tol)
        if not report.passed:
            raise StandardFormError(f"phi is not in standard form: {report}")
    dims = phi.dims
    d, n = dims.d, dims.n
    lF, wF, kF, mF = F.l, F.w, F.k, F.m
    lG, wG, kG, mG = G.l, G.w, G.k, G.m

    def fn(x):
        px = phi(x)
        tau, dd, de = px[:d, :d], px[:d, d:], px[d:, :d]
        pi = px[d:, d:] + ampliate(x, n)
        out = np.empty((dims.big, dims.big), dtype=complex)
        out[:d, :d] = tau + dag(lF) @ de + dag(lF) @ pi @ lG + dd @ lG + dag(kF) @ x + x @ kG
        out[:d, d:] = dd @ wG + dag(lF) @ pi @ wG + x @ mG
        out[d:, :d] = dag(wF) @ de + dag(wF) @ pi @ lG + dag(mF) @ x
        out[d:, d:] = dag(wF) @ pi @ wG - ampliate(x, n)
        return out

    return GeneratorMap.from_callable(dims, fn, phi.domain_basis)


def weyl_shift_check(phi: GeneratorMap, h: float, c, U, z, w, tol: float = DEFAULT_TOL) -> float:
    """Residual of ``psi^zhat_what = phi^(c+Uz)^_(c+Uw)^`` for the Weyl perturbation ``F = G = I (x) C``.

    Only meaningful for gauge-free ``phi``; anything else is rejected.
    """
    if not phi.is_gauge_free(tol):
        raise StandardFormError("the Weyl shift identity is stated for gauge-free generators")
    c = as_vector(c, phi.dims.n)
    U = as_matrix(U)
    z = as_vector(z, phi.dims.n)
    w = as_vector(w, phi.dims.n)
    F = weyl_coefficient(h, c, U, d=phi.dims.d, tol=tol)
    psi = perturbed_generator(phi, F, F)
    lhs = compress_generator(psi, z, w)
    rhs = compress_generator(phi, c + U @ z, c + U @ w)
    return float(np.max(np.abs(lhs - rhs)))


def gauge_free_check(w, basis, n: int | None = None) -> float:
    """Max over ``x`` in ``basis`` of ``|w*(x(x)I)w - x(x)I|``."""
    w = as_matrix(w)
    basis = [as_matrix(x) for x in basis]
    d = basis[0].shape[0]
    if n is None:
        n = w.shape[0] // d
    if w.shape != (d * n, d * n):
        raise DimensionError("w must act on h (x) k")
    worst = 0.0
    for x in basis:
        X = ampliate(x, n)
        worst = max(worst, float(np.max(np.abs(dag(w) @ X @ w - X))))
    return worst


def random_contractive_coefficient(dims: SpaceDims, rng: np.random.Generator,
                                   margin: float = 0.1) -> BlockCoefficient:
    """A strictly contractive coefficient built from the block characterisation."""
    from .opcore import random_complex, random_hermitian, random_unitary

    d, n = dims.d, dims.n
    dn = d * n
    l = random_complex((dn, d), rng)  # noqa: E741
    # strict contraction w = U diag(s) V
    s = rng.uniform(0.0, 1.0 - margin, size=dn)
    w = random_unitary(dn, rng) @ np.diag(s) @ random_unitary(dn, rng) if dn else np.zeros((0, 0))
    a = random_complex((d, d), rng)
    dpos = a @ dag(a) + margin * np.eye(d)
    h = random_hermitian(d, rng)
    k = 1j * h - 0.5 * (dpos + dag(l) @ l)
    v = random_complex((d, dn), rng)
    if dn:
        v *= (1.0 - margin) * rng.uniform() / max(np.linalg.norm(v, 2), 1e-300)
    d_half, _ = psd_sqrt(dpos)
    c_half, _ = psd_sqrt(np.eye(dn) - dag(w) @ w) if dn else (np.zeros((0, 0)), None)
    m = -dag(l) @ w - d_half @ v @ c_half
    return BlockCoefficient(dims, k, m, l, w)


__all__ = [
    "BlockCoefficient",
    "ContractivityReport",
    "ContractivityInconsistency",
    "NotIsometricError",
    "qF",
    "classify_contractive",
    "make_isometric_coefficient",
    "weyl_coefficient",
    "perturbed_generator",
    "perturbed_generator_blocks",
    "weyl_shift_check",
    "gauge_free_check",
    "random_contractive_coefficient",
]
