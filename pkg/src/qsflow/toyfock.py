"""Repeated-interaction simulation on a discrete (toy) Fock space.

The time interval ``[0, T]`` is cut into ``N`` slices of length ``tau``; slice
``k`` carries a copy of ``C^{n+1}`` whose basis vector ``e0`` is the vacuum.
States live on ``h (x) (C^{n+1})^{(x)N}`` with slice ``N`` the outermost
factor and ``h`` the innermost, so reshaping a state vector to
``(n+1,) * N + (d,)`` puts slice ``k`` on axis ``N - k``.

Block scalings inside a slice are ``(tau, sqrt(tau), 1)`` for the
(time, creation/annihilation, gauge) blocks.

Two evaluation routes are provided:

* state vectors, matrix-free, for ``d (n+1)^N`` up to the dimension cap;
* transfer maps on ``B(h)``, for matrix elements between product vectors,
  which reach large ``N`` at cost ``O(N)``.

They share no code beyond :func:`slice_unitary` and the slice factors and are
cross-checked in the test suite.
"""

from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cocycle import StepFunction, eval_cocycle_element
from .opcore import (
    DEFAULT_TOL,
    DimensionError,
    NotHermitianError,
    SpaceDims,
    as_matrix,
    as_vector,
    dag,
    expm,
    is_hermitian,
)
from .perturb import BlockCoefficient, perturbed_generator
from .stdgen import GeneratorMap, build_inner_generator

DEFAULT_MAX_DIM = 2 ** 21


class CapExceeded(ValueError):
    """The requested toy Fock space is larger than the configured cap."""


def max_dim() -> int:
    env = os.environ.get("QSFLOW_MAX_DIM")
    return int(env) if env else DEFAULT_MAX_DIM


@dataclass(frozen=True)
class ToyConfig:
    """Discretisation of ``[0, T]`` into ``N`` slices.

    The dimension cap applies to state vectors only; transfer-map evaluations
    never form them.
    """

    N: int
    T: float
    dims: SpaceDims
    cap: int | None = None

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be at least 1")
        if not self.T > 0:
            raise ValueError("T must be positive")

    @property
    def tau(self) -> float:
        return self.T / self.N

    @property
    def full_dim(self) -> int:
        return self.dims.d * self.dims.nhat ** self.N

    def fits(self) -> bool:
        limit = self.cap if self.cap is not None else max_dim()
        # avoid forming huge integers for large N
        if self.N * np.log2(max(self.dims.nhat, 1)) + np.log2(self.dims.d) > np.log2(limit) + 1e-9:
            return False
        return self.full_dim <= limit

    def require_fit(self):
        if not self.fits():
            raise CapExceeded(
                f"state dimension d*(n+1)^N for N={self.N} exceeds the cap "
                f"{self.cap if self.cap is not None else max_dim()}"
            )

    def slice_times(self) -> np.ndarray:
        """Left endpoints ``t_k = (k-1) tau`` of the slices."""
        return np.arange(self.N) * self.tau


@dataclass(frozen=True)
class InnerFlowSpec:
    """Data ``(h, t)`` of a Hudson-Parthasarathy dilation with inner generator."""

    h: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        h = as_matrix(self.h)
        t = as_matrix(self.t)
        if not is_hermitian(h, DEFAULT_TOL):
            raise NotHermitianError("h must be Hermitian")
        d = h.shape[0]
        if t.shape[1] != d or t.shape[0] % d:
            raise DimensionError("t must have shape (d*n, d)")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "t", t)

    @classmethod
    def trivial(cls, dims: SpaceDims) -> "InnerFlowSpec":
        return cls(np.zeros((dims.d, dims.d)), np.zeros((dims.d * dims.n, dims.d)))

    @property
    def dims(self) -> SpaceDims:
        d = self.h.shape[0]
        return SpaceDims(d, self.t.shape[0] // d)

    def generator(self) -> GeneratorMap:
        return build_inner_generator(self.h, self.t)


@dataclass(eq=False)
class DiscreteFockState:
    """Coefficient vector on ``h (x) (C^{n+1})^{(x)N}``."""

    vector: np.ndarray
    config: ToyConfig

    def __post_init__(self):
        self.vector = np.asarray(self.vector, dtype=complex).ravel()
        if self.vector.shape[0] != self.config.full_dim:
            raise DimensionError("state vector has the wrong length for this config")
        if not np.all(np.isfinite(self.vector)):
            raise ValueError("state has non-finite entries")

    def tensor(self) -> np.ndarray:
        c = self.config
        return self.vector.reshape((c.dims.nhat,) * c.N + (c.dims.d,))

    def norm(self) -> float:
        return float(np.linalg.norm(self.vector))

    def inner(self, other: "DiscreteFockState") -> complex:
        return complex(np.vdot(self.vector, other.vector))

    def copy(self) -> "DiscreteFockState":
        return DiscreteFockState(self.vector.copy(), self.config)

    def __add__(self, other):
        return DiscreteFockState(self.vector + other.vector, self.config)

    def __sub__(self, other):
        return DiscreteFockState(self.vector - other.vector, self.config)


# -- slice data ----------------------------------------------------------------


def slice_generator(spec: InnerFlowSpec, tau: float) -> np.ndarray:
    """``R = [[-i h tau, -sqrt(tau) t*], [sqrt(tau) t, 0]]``, anti-Hermitian."""
    d, dn = spec.h.shape[0], spec.t.shape[0]
    R = np.zeros((d + dn, d + dn), dtype=complex)
    R[:d, :d] = -1j * tau * spec.h
    R[:d, d:] = -np.sqrt(tau) * dag(spec.t)
    R[d:, :d] = np.sqrt(tau) * spec.t
    return R


def slice_unitary(spec: InnerFlowSpec, tau: float) -> np.ndarray:
    """``u = exp(R)``, a unitary on ``h (x) C^{n+1}``."""
    if not tau > 0:
        raise ValueError("tau must be positive")
    return expm(slice_generator(spec, tau))


def slice_unitary_second_order(spec: InnerFlowSpec, tau: float) -> np.ndarray:
    """``I + R + R^2/2``; differs from :func:`slice_unitary` by ``O(tau^{3/2})``."""
    R = slice_generator(spec, tau)
    return np.eye(R.shape[0]) + R + 0.5 * R @ R


def scaled_coefficient(F: BlockCoefficient, tau: float) -> np.ndarray:
    """``F_tau = [[k tau, m sqrt(tau)], [l sqrt(tau), w - I]]``."""
    d = F.dims.d
    out = F.matrix.copy()
    out[:d, :d] *= tau
    out[:d, d:] *= np.sqrt(tau)
    out[d:, :d] *= np.sqrt(tau)
    return out


def exp_vector_factors(g: StepFunction | None, config: ToyConfig, normalized: bool = True) -> np.ndarray:
    """Slice vectors ``(1, sqrt(tau) g(t_k))``, shape ``(N, n+1)``, row ``k-1`` for slice ``k``."""
    n, N, tau = config.dims.n, config.N, config.tau
    out = np.zeros((N, n + 1), dtype=complex)
    out[:, 0] = 1.0
    if g is not None and g.segments:
        if g.n != n:
            raise DimensionError(f"step function values must lie in C^{n}")
        for k, s in enumerate(config.slice_times()):
            out[k, 1:] = np.sqrt(tau) * g(s)
    if normalized:
        out /= np.linalg.norm(out, axis=1, keepdims=True)
    return out


def discrete_exp_vector(g: StepFunction | None, u, config: ToyConfig, normalized: bool = True) -> DiscreteFockState:
    """``u (x) (x)_k (1, sqrt(tau) g(t_k))``, each factor optionally normalised."""
    config.require_fit()
    u = as_vector(u, config.dims.d)
    factors = exp_vector_factors(g, config, normalized)
    vec = u
    for k in range(config.N):
        vec = np.kron(factors[k], vec)
    return DiscreteFockState(vec, config)


def product_inner(fa: np.ndarray, fb: np.ndarray) -> complex:
    """Inner product of two product vectors given by their slice factors."""
    return complex(np.prod(np.einsum("ki,ki->k", fa.conj(), fb)))


# -- matrix-free state route ---------------------------------------------------


def apply_local(state: DiscreteFockState, A: np.ndarray, k: int) -> DiscreteFockState:
    """Apply ``A`` on ``h (x) slice k`` (1-based), identity elsewhere."""
    c = state.config
    N, d, nh = c.N, c.dims.d, c.dims.nhat
    if not 1 <= k <= N:
        raise IndexError(f"slice {k} out of range 1..{N}")
    arr = np.moveaxis(state.tensor(), N - k, -2)
    shape = arr.shape
    flat = arr.reshape(-1, nh * d) @ A.T
    arr = np.moveaxis(flat.reshape(shape), -2, N - k)
    return DiscreteFockState(np.ascontiguousarray(arr).ravel(), c)


def apply_initial(state: DiscreteFockState, x) -> DiscreteFockState:
    """``x (x) I``."""
    c = state.config
    arr = state.tensor() @ as_matrix(x).T
    return DiscreteFockState(arr.ravel(), c)


def apply_hp_cocycle(spec: InnerFlowSpec, config: ToyConfig, state: DiscreteFockState,
                     steps: int | None = None, start: int = 0, adjoint: bool = False) -> DiscreteFockState:
    """``u_{start+steps} ... u_{start+1}`` applied to ``state`` (or its adjoint).

    With ``start = 0`` and ``steps = i`` this is ``U^{(i)}``.
    """
    steps = config.N - start if steps is None else steps
    if steps < 0 or start < 0 or start + steps > config.N:
        raise IndexError("slice range out of bounds")
    u = slice_unitary(spec, config.tau)
    order = range(start + 1, start + steps + 1)
    if adjoint:
        u = dag(u)
        order = reversed(order)
    for k in order:
        state = apply_local(state, u, k)
    return state


def apply_flow(spec: InnerFlowSpec, config: ToyConfig, x, state: DiscreteFockState,
               steps: int | None = None) -> DiscreteFockState:
    """``j(x) xi = U* (x (x) I) U xi``."""
    s = apply_hp_cocycle(spec, config, state, steps)
    s = apply_initial(s, x)
    return apply_hp_cocycle(spec, config, s, steps, adjoint=True)


def apply_multiplier(spec: InnerFlowSpec, F: BlockCoefficient, config: ToyConfig,
                     state: DiscreteFockState, steps: int | None = None) -> DiscreteFockState:
    """``X^{(N)} xi`` from ``X^{(i+1)} = (I + U^{(i)*} F_tau^{(i+1)} U^{(i)}) X^{(i)}``."""
    steps = config.N if steps is None else steps
    Ft = scaled_coefficient(F, config.tau)
    for i in range(steps):
        y = apply_hp_cocycle(spec, config, state, i)
        y = apply_local(y, Ft, i + 1)
        y = apply_hp_cocycle(spec, config, y, i, adjoint=True)
        state = state + y
    return state


def perturbed_matrix_element_state(spec: InnerFlowSpec, F: BlockCoefficient, G: BlockCoefficient, x,
                                   f, g, u, v, config: ToyConfig) -> complex:
    """``<X (u (x) nu(f)), j(x) Y (v (x) nu(g))>`` on explicit state vectors."""
    config.require_fit()
    xi_f = discrete_exp_vector(f, u, config)
    xi_g = discrete_exp_vector(g, v, config)
    left = apply_multiplier(spec, F, config, xi_f)
    right = apply_flow(spec, config, x, apply_multiplier(spec, G, config, xi_g))
    return left.inner(right)


def homomorphism_defect(spec: InnerFlowSpec, config: ToyConfig, x, y, xi: DiscreteFockState,
                        F: BlockCoefficient | None = None) -> float:
    """``|k(xy) xi - k(x) k(y) xi|`` for ``k(x) = X* j(x) X`` (``X = I`` when ``F`` is None).

    For the free flow this vanishes up to rounding since the slice unitaries
    are exact; for a perturbed process it is a measured quantity.
    """
    def k_of(a, s):
        if F is None:
            return apply_flow(spec, config, a, s)
        s = apply_multiplier(spec, F, config, s)
        s = apply_flow(spec, config, a, s)
        return apply_multiplier_adjoint(spec, F, config, s)

    lhs = k_of(as_matrix(x) @ as_matrix(y), xi)
    rhs = k_of(x, k_of(y, xi))
    return (lhs - rhs).norm()


def apply_multiplier_adjoint(spec: InnerFlowSpec, F: BlockCoefficient, config: ToyConfig,
                             state: DiscreteFockState, steps: int | None = None) -> DiscreteFockState:
    """``X^{(N)*} xi``, the adjoint of :func:`apply_multiplier`."""
    steps = config.N if steps is None else steps
    Ft = dag(scaled_coefficient(F, config.tau))
    for i in reversed(range(steps)):
        y = apply_hp_cocycle(spec, config, state, i)
        y = apply_local(y, Ft, i + 1)
        y = apply_hp_cocycle(spec, config, y, i, adjoint=True)
        state = state + y
    return state


# -- transfer-map route --------------------------------------------------------


def perturbed_matrix_element_transfer(spec: InnerFlowSpec, F: BlockCoefficient, G: BlockCoefficient, x,
                                      f, g, u, v, config: ToyConfig) -> complex:
    """Same matrix element as :func:`perturbed_matrix_element_state` without state vectors.

    With ``W_F = U X_F = prod_k u_k (I + F_tau^{(k)})`` the element equals
    ``<u, Phi_1 o ... o Phi_N(x) v>`` where
    ``Phi_k(y) = E^{a_k} (I + F_tau)* u* (y (x) I) u (I + G_tau) E_{b_k}``
    and ``a_k, b_k`` are the slice factors of ``f, g``.
    """
    d, nh = config.dims.d, config.dims.nhat
    u_s = slice_unitary(spec, config.tau)
    eye = np.eye(d * nh)
    MF = u_s @ (eye + scaled_coefficient(F, config.tau))
    MG = u_s @ (eye + scaled_coefficient(G, config.tau))
    fa = exp_vector_factors(f, config)
    fb = exp_vector_factors(g, config)
    eye_d = np.eye(d)
    y = as_matrix(x)
    for k in reversed(range(config.N)):
        A = MF @ np.kron(fa[k].reshape(-1, 1), eye_d)
        B = MG @ np.kron(fb[k].reshape(-1, 1), eye_d)
        # A* (y (x) I) B, summing over the slice index
        y = np.einsum("kia,ij,kjb->ab", A.reshape(nh, d, d).conj(), y, B.reshape(nh, d, d))
    u = as_vector(u, d)
    v = as_vector(v, d)
    return complex(np.vdot(u, y @ v))


def isometry_defect(spec: InnerFlowSpec, F: BlockCoefficient, f, u, config: ToyConfig) -> float:
    """``| |X (u (x) nu(f))| - |u (x) nu(f)| |`` through the transfer route."""
    d = config.dims.d
    sq = perturbed_matrix_element_transfer(spec, F, F, np.eye(d), f, f, u, u, config)
    return abs(np.sqrt(max(sq.real, 0.0)) - np.linalg.norm(as_vector(u, d)))


# -- convergence study ---------------------------------------------------------


@dataclass
class ErrorRow:
    N: int
    tau: float
    exact: complex
    discrete: complex

    @property
    def rel_error(self) -> float:
        return abs(self.discrete - self.exact) / max(abs(self.exact), 1e-300)


@dataclass
class ErrorTable:
    rows: list[ErrorRow] = field(default_factory=list)

    COLUMNS = ("N", "tau", "exact_value_re", "exact_value_im", "discrete_value_re",
               "discrete_value_im", "rel_error", "fitted_order")

    @property
    def errors(self) -> np.ndarray:
        return np.array([r.rel_error for r in self.rows])

    @property
    def fitted_order(self) -> float:
        """Least-squares slope of ``log(error)`` against ``log(tau)``."""
        if len(self.rows) < 2:
            return float("nan")
        taus = np.array([r.tau for r in self.rows])
        errs = np.maximum(self.errors, 1e-300)
        slope, _ = np.polyfit(np.log(taus), np.log(errs), 1)
        return float(slope)

    def monotone(self, band: float = 0.1) -> bool:
        """Errors decrease with ``N`` up to a relative noise ``band``."""
        e = self.errors
        return bool(np.all(e[1:] <= e[:-1] * (1.0 + band)))

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(self.COLUMNS)
        fmt = lambda v: "%.17g" % v  # noqa: E731
        order = self.fitted_order
        for i, r in enumerate(self.rows):
            last = i == len(self.rows) - 1
            wr.writerow([
                r.N, fmt(r.tau), fmt(r.exact.real), fmt(r.exact.imag), fmt(r.discrete.real),
                fmt(r.discrete.imag), fmt(r.rel_error), fmt(order) if last else "",
            ])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def exact_matrix_element(phi: GeneratorMap, F, G, x, f, g, u, v, T) -> complex:
    psi = perturbed_generator(phi, F, G)
    k = eval_cocycle_element(psi, f or StepFunction(()), g or StepFunction(()), T)
    return complex(np.vdot(as_vector(u), k(x) @ as_vector(v)))


def cross_validate(spec: InnerFlowSpec, F: BlockCoefficient, G: BlockCoefficient, x,
                   f: StepFunction | None, g: StepFunction | None, T: float, Ns,
                   u=None, v=None, route: str = "auto", workers: int = 1) -> ErrorTable:
    """Discrete ``<X(u (x) nu(f)), j(x) Y(v (x) nu(g))>`` against the exact
    cocycle element of ``psi = perturbed_generator(phi, F, G)``.

    ``route`` is ``"state"``, ``"transfer"`` or ``"auto"`` (state vectors when
    they fit under the cap).
    """
    dims = spec.dims
    if F.dims != dims or G.dims != dims:
        raise DimensionError("coefficients do not match the flow dimensions")
    d = dims.d
    u = np.eye(d)[0] if u is None else as_vector(u, d)
    v = np.eye(d)[0] if v is None else as_vector(v, d)
    exact = exact_matrix_element(spec.generator(), F, G, x, f, g, u, v, T)

    def one(N):
        cfg = ToyConfig(N, T, dims)
        use_state = route == "state" or (route == "auto" and cfg.fits())
        if use_state:
            val = perturbed_matrix_element_state(spec, F, G, x, f, g, u, v, cfg)
        elif route in ("transfer", "auto"):
            val = perturbed_matrix_element_transfer(spec, F, G, x, f, g, u, v, cfg)
        else:
            raise ValueError(f"unknown route {route!r}")
        return ErrorRow(N, cfg.tau, exact, val)

    Ns = sorted(int(N) for N in Ns)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, Ns))
    else:
        rows = [one(N) for N in Ns]
    return ErrorTable(rows)


__all__ = [
    "ToyConfig",
    "InnerFlowSpec",
    "DiscreteFockState",
    "CapExceeded",
    "ErrorRow",
    "ErrorTable",
    "slice_generator",
    "slice_unitary",
    "slice_unitary_second_order",
    "scaled_coefficient",
    "exp_vector_factors",
    "discrete_exp_vector",
    "product_inner",
    "apply_local",
    "apply_initial",
    "apply_hp_cocycle",
    "apply_flow",
    "apply_multiplier",
    "apply_multiplier_adjoint",
    "perturbed_matrix_element_state",
    "perturbed_matrix_element_transfer",
    "isometry_defect",
    "homomorphism_defect",
    "exact_matrix_element",
    "cross_validate",
]
