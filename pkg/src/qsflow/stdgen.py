"""Stochastic generators in standard form.

A generator ``phi`` maps ``B(h)`` into ``B(h (x) k^)`` and is stored
extensionally as a superoperator matrix. Its four blocks are::

    phi(x) = [ tau(x)    delta_dag(x) ]
             [ delta(x)  pi(x) - x(x)I ]

with the vacuum block first (see :mod:`qsflow.opcore`).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .opcore import (
    DEFAULT_TOL,
    DimensionError,
    NotHermitianError,
    SpaceDims,
    ampliate,
    apply_superop,
    as_matrix,
    as_vector,
    dag,
    embed_ehat,
    is_hermitian,
    matrix_units,
    sandwich,
    superop_from_callable,
    vec,
)

SPAN_TOL = 1e-9


class DomainError(ValueError):
    """The declared domain basis is not a unital *-algebra."""


class StandardFormError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GeneratorMap:
    """A linear map ``B(h) -> B(h (x) k^)`` stored as a superoperator.

    ``action`` has shape ``(d*nhat)**2 x d**2``. ``domain_basis`` spans the
    domain *-algebra; ``None`` means all of ``B(h)``.
    """

    dims: SpaceDims
    action: np.ndarray
    domain_basis: tuple[np.ndarray, ...] | None = None

    def __post_init__(self):
        D = self.dims.big
        shape = (D * D, self.dims.d ** 2)
        action = np.asarray(self.action, dtype=complex)
        if action.shape != shape:
            raise DimensionError(f"action must have shape {shape}, got {action.shape}")
        action.setflags(write=False)
        object.__setattr__(self, "action", action)
        if self.domain_basis is not None:
            basis = tuple(as_matrix(b) for b in self.domain_basis)
            for b in basis:
                if b.shape != (self.dims.d, self.dims.d):
                    raise DimensionError("domain basis elements must be d x d")
            object.__setattr__(self, "domain_basis", basis)

    @classmethod
    def from_callable(cls, dims: SpaceDims, fn, domain_basis=None) -> "GeneratorMap":
        D = dims.big
        return cls(dims, superop_from_callable(fn, dims.d, (D, D)), domain_basis)

    @classmethod
    def from_blocks(cls, dims: SpaceDims, tau, delta, delta_dag=None, pi=None, domain_basis=None):
        """Assemble from block callables; ``delta_dag`` defaults to ``x -> delta(x*)*``
        and ``pi`` to the ampliation."""
        d, n = dims.d, dims.n
        if delta_dag is None:
            def delta_dag(x):
                return dag(delta(dag(x)))

        def fn(x):
            out = np.zeros((dims.big, dims.big), dtype=complex)
            out[:d, :d] = tau(x)
            if n:
                out[:d, d:] = delta_dag(x)
                out[d:, :d] = delta(x)
                if pi is not None:
                    out[d:, d:] = pi(x) - ampliate(x, n)
            return out

        return cls.from_callable(dims, fn, domain_basis)

    @classmethod
    def from_unit_images(cls, dims: SpaceDims, images, domain_basis=None) -> "GeneratorMap":
        """Build from the stack of images of the matrix units in column-stacked order."""
        images = np.asarray(images, dtype=complex)
        D = dims.big
        action = np.swapaxes(images, 1, 2).reshape(dims.d ** 2, D * D).T
        return cls(dims, action, domain_basis)

    @classmethod
    def zero(cls, dims: SpaceDims) -> "GeneratorMap":
        D = dims.big
        return cls(dims, np.zeros((D * D, dims.d ** 2), dtype=complex))

    def __call__(self, x) -> np.ndarray:
        D = self.dims.big
        return apply_superop(self.action, as_matrix(x), (D, D))

    def apply_many(self, xs) -> np.ndarray:
        """Evaluate on a stack of ``d x d`` matrices, returning a ``(k, D, D)`` stack."""
        xs = np.asarray(xs, dtype=complex)
        k, d = xs.shape[0], self.dims.d
        D = self.dims.big
        vecs = np.swapaxes(xs, 1, 2).reshape(k, d * d)
        out = (vecs @ self.action.T).reshape(k, D, D)
        return np.swapaxes(out, 1, 2)

    # block views of phi(x)
    def tau(self, x):
        return self(x)[: self.dims.d, : self.dims.d]

    def delta(self, x):
        return self(x)[self.dims.d :, : self.dims.d]

    def delta_dag(self, x):
        return self(x)[: self.dims.d, self.dims.d :]

    def pi(self, x):
        d, n = self.dims.d, self.dims.n
        return self(x)[d:, d:] + ampliate(x, n)

    def basis(self) -> tuple[np.ndarray, ...]:
        if self.domain_basis is None:
            return tuple(matrix_units(self.dims.d))
        return self.domain_basis

    def with_action(self, action) -> "GeneratorMap":
        return GeneratorMap(self.dims, action, self.domain_basis)

    def is_gauge_free(self, tol: float = DEFAULT_TOL) -> bool:
        d, n = self.dims.d, self.dims.n
        for x in self.basis():
            if np.max(np.abs(self(x)[d:, d:]), initial=0.0) > tol:
                return False
        return True


@dataclass(frozen=True)
class ValidationReport:
    residuals: dict[str, float]
    tolerance: float

    @property
    def passed(self) -> bool:
        return all(r <= self.tolerance for r in self.residuals.values())

    def __str__(self):
        rows = ", ".join(f"{k}={v:.3e}" for k, v in self.residuals.items())
        return f"ValidationReport(pass={self.passed}, tol={self.tolerance:g}: {rows})"


def chi(z, w) -> complex:
    """``1/2 |z|^2 + 1/2 |w|^2 - <z, w>``; inner products are conjugate-linear on the left."""
    z = as_vector(z)
    w = as_vector(w)
    if z.shape != w.shape:
        raise DimensionError("chi needs vectors of equal length")
    return 0.5 * np.vdot(z, z).real + 0.5 * np.vdot(w, w).real - np.vdot(z, w)


def commutator_superop(h) -> np.ndarray:
    """Superoperator of ``x -> [h, x]``."""
    h = as_matrix(h)
    eye = np.eye(h.shape[0])
    return sandwich(h, eye) - sandwich(eye, h)


def build_inner_generator(h, t, domain_basis=None, tol: float = DEFAULT_TOL) -> GeneratorMap:
    """Gauge-free generator of a Hudson-Parthasarathy flow with bounded data.

    ``tau(x) = i[h,x] - 1/2 t*t x + t*(x(x)I)t - 1/2 x t*t`` and
    ``delta(x) = (x(x)I)t - t x``, with ``pi`` the ampliation.

    Parameters
    ----------
    h : (d, d) Hermitian array
    t : (d*n, d) array
        Column operator ``h -> h (x) k``.
    """
    h = as_matrix(h)
    t = as_matrix(t)
    d = h.shape[0]
    if not is_hermitian(h, tol):
        raise NotHermitianError("h must be Hermitian")
    if t.shape[1] != d or t.shape[0] % d:
        raise DimensionError(f"t must have shape (d*n, d) with d={d}, got {t.shape}")
    n = t.shape[0] // d
    dims = SpaceDims(d, n)
    tt = dag(t) @ t

    def tau(x):
        return 1j * (h @ x - x @ h) - 0.5 * tt @ x + dag(t) @ ampliate(x, n) @ t - 0.5 * x @ tt

    def delta(x):
        return ampliate(x, n) @ t - t @ x

    return GeneratorMap.from_blocks(dims, tau, delta, domain_basis=domain_basis)


def is_skew_derivation(D, basis, tol: float = DEFAULT_TOL) -> bool:
    """Check ``D(x*)* = -D(x)`` and the Leibniz rule on ``basis``."""
    D = np.asarray(D)
    d = basis[0].shape[0]
    app = lambda x: apply_superop(D, x, (d, d))  # noqa: E731
    for x in basis:
        if np.max(np.abs(dag(app(dag(x))) + app(x))) > tol:
            return False
        for y in basis:
            lhs = app(x @ y)
            rhs = app(x) @ y + x @ app(y)
            if np.max(np.abs(lhs - rhs)) > tol:
                return False
    return True


def build_skew_derivation_generator(derivs, coeffs, d: int | None = None, domain_basis=None,
                                    tol: float = DEFAULT_TOL) -> GeneratorMap:
    """Generator with ``delta(x) = sum_i c_i delta_i(x) (x) |e_i>`` and
    ``tau = -1/2 sum_i |c_i|^2 delta_i^2`` for skew-symmetric derivations ``delta_i``.

    ``derivs`` are ``d**2 x d**2`` superoperators. ``d`` is required only when
    ``derivs`` is empty.
    """
    derivs = [np.asarray(D, dtype=complex) for D in derivs]
    coeffs = [complex(c) for c in coeffs]
    if len(derivs) != len(coeffs):
        raise ValueError("derivs and coeffs must have the same length")
    if derivs:
        d2 = derivs[0].shape[0]
        d_found = int(round(np.sqrt(d2)))
        if d is not None and d != d_found:
            raise DimensionError("d disagrees with the derivation shapes")
        d = d_found
    if d is None:
        raise ValueError("d is required when no derivations are given")
    for D in derivs:
        if D.shape != (d * d, d * d):
            raise DimensionError("every derivation must be a d^2 x d^2 superoperator")
    n = len(derivs)
    dims = SpaceDims(d, n)
    basis = tuple(domain_basis) if domain_basis is not None else tuple(matrix_units(d))
    for i, D in enumerate(derivs):
        if not is_skew_derivation(D, basis, tol=max(tol, 1e-9)):
            raise StandardFormError(f"derivation {i} is not a skew-symmetric derivation")

    def delta(x):
        if not n:
            return np.zeros((0, d), dtype=complex)
        return np.vstack([c * apply_superop(D, x, (d, d)) for c, D in zip(coeffs, derivs)])

    tau_op = np.zeros((d * d, d * d), dtype=complex)
    for c, D in zip(coeffs, derivs):
        tau_op -= 0.5 * abs(c) ** 2 * (D @ D)

    def tau(x):
        return apply_superop(tau_op, x, (d, d))

    return GeneratorMap.from_blocks(dims, tau, delta, domain_basis=domain_basis)


def _maxabs(a) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def _span_residual(M: np.ndarray, x: np.ndarray) -> float:
    coef, *_ = np.linalg.lstsq(M, vec(x), rcond=None)
    return float(np.linalg.norm(M @ coef - vec(x)))


def check_domain(basis, tol: float = SPAN_TOL) -> np.ndarray:
    """Verify that ``span(basis)`` is a unital *-algebra; return the span matrix."""
    M = np.stack([vec(b) for b in basis], axis=1)
    d = basis[0].shape[0]
    if _span_residual(M, np.eye(d)) > tol:
        raise DomainError("domain does not contain the identity")
    for b in basis:
        if _span_residual(M, dag(b)) > tol:
            raise DomainError("domain is not closed under adjoints")
        for c in basis:
            if _span_residual(M, b @ c) > tol:
                raise DomainError("domain is not closed under products")
    return M


def validate_standard_form(phi: GeneratorMap, tol: float = DEFAULT_TOL) -> ValidationReport:
    """Maximum residual of each standard-form relation over pairs of basis elements.

    Relations: cohomology ``tau(xy) - tau(x)y - x tau(y) = delta_dag(x) delta(y)``;
    Leibniz ``delta(xy) = delta(x) y + pi(x) delta(y)``; dagger compatibility
    ``delta_dag(x) = delta(x*)*``; ``pi`` multiplicative, unital and *-preserving;
    ``phi(x*) = phi(x)*``.
    """
    basis = phi.basis()
    if phi.domain_basis is not None:
        check_domain(basis)
    d, n = phi.dims.d, phi.dims.n
    B = np.stack(basis)
    images = phi.apply_many(B)
    adj_images = phi.apply_many(dag(B))
    eye_n = np.eye(n)
    amp = lambda X: np.einsum("ab,kij->kaibj", eye_n, X).reshape(len(X), d * n, d * n)  # noqa: E731
    pi_all = images[:, d:, d:] + amp(B)
    pi_adj = adj_images[:, d:, d:] + amp(dag(B))
    res = {
        "cohomology": 0.0,
        "leibniz": 0.0,
        "dagger": _maxabs(images[:, :d, d:] - dag(adj_images[:, d:, :d])),
        "pi_homomorphism": _maxabs(pi_adj - dag(pi_all)),
        "pi_unital": _maxabs(phi(np.eye(d))[d:, d:]),
        "star_linearity": _maxabs(adj_images - dag(images)),
    }
    tau_all, dd_all, del_all = images[:, :d, :d], images[:, :d, d:], images[:, d:, :d]
    for k, x in enumerate(basis):
        XY = x @ B
        pxy = phi.apply_many(XY)
        res["cohomology"] = max(res["cohomology"], _maxabs(
            pxy[:, :d, :d] - tau_all[k] @ B - x @ tau_all - dd_all[k] @ del_all))
        res["leibniz"] = max(res["leibniz"], _maxabs(
            pxy[:, d:, :d] - del_all[k] @ B - pi_all[k] @ del_all))
        res["pi_homomorphism"] = max(res["pi_homomorphism"], _maxabs(
            pxy[:, d:, d:] + amp(XY) - pi_all[k] @ pi_all))
    return ValidationReport(res, tol)


def compress_generator(phi: GeneratorMap, z, w) -> np.ndarray:
    """Superoperator of ``x -> E^zhat phi(x) E_what`` on ``B(h)``."""
    z = as_vector(z, phi.dims.n) if phi.dims.n else as_vector(z, 0)
    w = as_vector(w, phi.dims.n) if phi.dims.n else as_vector(w, 0)
    Ez = embed_ehat(z, phi.dims)
    Ew = embed_ehat(w, phi.dims)
    return sandwich(dag(Ez), Ew) @ phi.action


def semigroup_generator(phi: GeneratorMap, z, w) -> np.ndarray:
    """Generator ``x -> E^zhat phi(x) E_what - chi(z, w) x`` of the associated semigroup."""
    d = phi.dims.d
    return compress_generator(phi, z, w) - chi(z, w) * np.eye(d * d)


def unit_image(phi: GeneratorMap) -> np.ndarray:
    return phi(np.eye(phi.dims.d))


def generator_residual(a: GeneratorMap, b: GeneratorMap) -> float:
    """Max entrywise difference of two generators over the domain basis of ``a``."""
    return max(float(np.max(np.abs(a(x) - b(x)))) for x in a.basis())


def basis_from_generators(gens, d: int, max_words: int = 4096) -> tuple[np.ndarray, ...]:
    """Orthonormal basis of the unital *-algebra generated by ``gens`` in ``M_d``."""
    pool = [np.eye(d, dtype=complex)] + [as_matrix(g) for g in gens] + [dag(as_matrix(g)) for g in gens]
    letters = pool[1:]
    basis: list[np.ndarray] = []

    def add(m):
        v = vec(m)
        for b in basis:
            v = v - np.vdot(vec(b), v) * vec(b)
        nrm = np.linalg.norm(v)
        if nrm > 1e-9:
            basis.append((v / nrm).reshape(d, d, order="F"))
            return True
        return False

    frontier = [m for m in pool if add(m)]
    while frontier and len(basis) < min(d * d, max_words):
        nxt = []
        for m in frontier:
            for g in letters:
                if add(m @ g):
                    nxt.append(basis[-1])
        frontier = nxt
    return tuple(basis)


__all__ = [
    "GeneratorMap",
    "ValidationReport",
    "DomainError",
    "StandardFormError",
    "chi",
    "commutator_superop",
    "build_inner_generator",
    "build_skew_derivation_generator",
    "validate_standard_form",
    "compress_generator",
    "semigroup_generator",
    "unit_image",
    "generator_residual",
    "basis_from_generators",
    "check_domain",
    "is_skew_derivation",
]
