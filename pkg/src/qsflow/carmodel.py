"""Quantum exclusion on finitely many sites.

Sites ``0..m-1`` carry Jordan-Wigner fermions ``b_j`` on ``C^{2^m}``. The
multiplicity space has basis ``f_{ij}`` (hop from ``i`` to ``j``) flattened to
``i*m + j``, so ``n = m^2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .opcore import DEFAULT_TOL, NotHermitianError, SpaceDims, ampliate, as_matrix, dag, is_hermitian
from .perturb import BlockCoefficient, make_isometric_coefficient, perturbed_generator
from .stdgen import GeneratorMap, commutator_superop

MAX_SITES = 6

_SIGMA_MINUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
_Z = np.diag([1.0, -1.0]).astype(complex)


@dataclass(frozen=True, eq=False)
class CarSystem:
    m: int
    b: tuple

    @property
    def d(self) -> int:
        return 2 ** self.m

    def number_operator(self) -> np.ndarray:
        return sum((dag(bj) @ bj for bj in self.b), np.zeros((self.d, self.d), dtype=complex))

    def car_residual(self) -> float:
        """Largest violation of ``{b_i, b_j} = 0`` and ``{b_i, b_j*} = delta_ij``."""
        eye = np.eye(self.d)
        worst = 0.0
        for i, bi in enumerate(self.b):
            for j, bj in enumerate(self.b):
                worst = max(worst, float(np.max(np.abs(bi @ bj + bj @ bi))))
                target = eye if i == j else 0.0
                worst = max(worst, float(np.max(np.abs(bi @ dag(bj) + dag(bj) @ bi - target))))
        return worst


def jordan_wigner(m: int) -> CarSystem:
    """``b_j = Z^{(x)j} (x) sigma_- (x) I^{(x)(m-j-1)}`` with ``sigma_- = [[0,1],[0,0]]``."""
    if not 1 <= m <= MAX_SITES:
        raise ValueError(f"site count must be between 1 and {MAX_SITES}, got {m}")
    ops = []
    for j in range(m):
        factors = [_Z] * j + [_SIGMA_MINUS] + [np.eye(2)] * (m - j - 1)
        op = factors[0]
        for a in factors[1:]:
            op = np.kron(op, a)
        ops.append(op.astype(complex))
    return CarSystem(m, tuple(ops))


@dataclass(frozen=True, eq=False)
class ExclusionSpec:
    m: int
    eta: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray | None = None

    def __post_init__(self):
        eta = np.asarray(self.eta, dtype=float).reshape(self.m)
        alpha = np.asarray(self.alpha, dtype=complex).reshape(self.m, self.m)
        beta = np.zeros((self.m, self.m), dtype=complex) if self.beta is None else \
            np.asarray(self.beta, dtype=complex).reshape(self.m, self.m)
        for name, arr in (("eta", eta), ("alpha", alpha), ("beta", beta)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} has non-finite entries")
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    @property
    def n(self) -> int:
        return self.m * self.m

    @property
    def dims(self) -> SpaceDims:
        return SpaceDims(2 ** self.m, self.n)

    def symmetric(self, amp=None, tol: float = 1e-12) -> bool:
        """Whether ``|a_ij| = |a_ji|`` holds for ``amp`` (default ``alpha + beta``)."""
        a = self.alpha + self.beta if amp is None else np.asarray(amp)
        return bool(np.max(np.abs(np.abs(a) - np.abs(a.T))) <= tol)


def hamiltonian(car: CarSystem, eta) -> np.ndarray:
    return sum((e * dag(bj) @ bj for e, bj in zip(eta, car.b)), np.zeros((car.d, car.d), dtype=complex))


def t_alpha(car: CarSystem, amp) -> np.ndarray:
    """Column operator with block ``i*m + j`` equal to ``amp_ij b_j* b_i``."""
    amp = np.asarray(amp, dtype=complex)
    return np.vstack([amp[i, j] * dag(car.b[j]) @ car.b[i] for i in range(car.m) for j in range(car.m)])


def _exclusion_blocks(car: CarSystem, H, t):
    n = car.m * car.m
    tt = dag(t) @ t

    def delta(x):
        return t @ x - ampliate(x, n) @ t

    def delta_dag(x):
        return dag(delta(dag(x)))

    def tau(x):
        return 1j * (H @ x - x @ H) - 0.5 * dag(t) @ delta(x) - 0.5 * delta_dag(x) @ t

    return tau, delta, delta_dag, tt


def exclusion_generator(spec: ExclusionSpec, car: CarSystem | None = None, amp=None) -> GeneratorMap:
    """Gauge-free generator with ``delta(x) = t x - (x (x) I) t`` and
    ``tau(x) = i[H, x] - 1/2 t* delta(x) - 1/2 delta_dag(x) t``, ``H = sum eta_i b_i* b_i``.

    ``amp`` defaults to ``spec.alpha``.
    """
    car = jordan_wigner(spec.m) if car is None else car
    amp = spec.alpha if amp is None else amp
    t = t_alpha(car, amp)
    tau, delta, _, _ = _exclusion_blocks(car, hamiltonian(car, spec.eta), t)
    return GeneratorMap.from_blocks(spec.dims, tau, delta)


def exclusion_multiplier(spec: ExclusionSpec, h, car: CarSystem | None = None,
                         tol: float = DEFAULT_TOL) -> BlockCoefficient:
    """``F = [[ih - 1/2 t_b* t_b, t_b*], [-t_b, 0]]`` with ``t_b`` built from ``beta``."""
    h = as_matrix(h)
    if not is_hermitian(h, tol):
        raise NotHermitianError("h must be Hermitian")
    car = jordan_wigner(spec.m) if car is None else car
    t_b = t_alpha(car, spec.beta)
    return make_isometric_coefficient(h, -t_b, np.eye(t_b.shape[0]), tol=tol)


@dataclass(frozen=True)
class AmplitudeReport:
    delta_residual: float
    tau_residual: float
    h_used: np.ndarray
    h_closed_form_residual: float
    symmetric: bool
    summability: str = "finite truncation: l1 and l-infinity conditions hold trivially"


def compensating_hamiltonian(spec: ExclusionSpec, car: CarSystem | None = None) -> np.ndarray:
    """Oracle for the Hermitian ``h0`` with ``tau'(h = h0) = tau_{alpha+beta}``.

    The defect ``tau'(h=0) - tau_{alpha+beta}`` is expanded over all matrix units;
    it must be a derivation ``i[h0, .]``, and ``h0`` is the traceless
    least-squares solution.
    """
    car = jordan_wigner(spec.m) if car is None else car
    d = car.d
    phi = exclusion_generator(spec, car)
    F0 = exclusion_multiplier(spec, np.zeros((d, d)), car)
    psi = perturbed_generator(phi, F0, F0)
    target = exclusion_generator(spec, car, amp=spec.alpha + spec.beta)
    D = psi.action.reshape(psi.dims.big, psi.dims.big, d, d, order="F")
    T = target.action.reshape(psi.dims.big, psi.dims.big, d, d, order="F")
    # tau block of each generator as a d^2 x d^2 superoperator
    diff = (D[:d, :d] - T[:d, :d]).reshape(d * d, d * d, order="F")
    # tau'(h) = tau'(0) - i[h, .], so solve i ad(h0) = diff over Hermitian h0
    basis = _hermitian_basis(d)
    cols = np.stack([(1j * commutator_superop(e)).ravel() for e in basis], axis=1)
    rhs = diff.ravel()
    A = np.vstack([cols.real, cols.imag])
    b = np.concatenate([rhs.real, rhs.imag])
    coef, *_ = np.linalg.lstsq(A, b, rcond=None)
    h0 = sum(c * e for c, e in zip(coef, basis))
    h0 = h0 - np.trace(h0) / d * np.eye(d)
    return 0.5 * (h0 + dag(h0))


def _hermitian_basis(d: int) -> list[np.ndarray]:
    out = []
    for i in range(d):
        for j in range(i, d):
            e = np.zeros((d, d), dtype=complex)
            if i == j:
                e[i, i] = 1.0
                out.append(e)
            else:
                e[i, j] = e[j, i] = 1.0
                out.append(e)
                s = np.zeros((d, d), dtype=complex)
                s[i, j], s[j, i] = -1j, 1j
                out.append(s)
    return out


def closed_form_h0(spec: ExclusionSpec, car: CarSystem | None = None) -> np.ndarray:
    """``(t_a* t_b - t_b* t_a) / (2i)``."""
    car = jordan_wigner(spec.m) if car is None else car
    ta, tb = t_alpha(car, spec.alpha), t_alpha(car, spec.beta)
    return (dag(ta) @ tb - dag(tb) @ ta) / 2j


def verify_amplitude_addition(spec: ExclusionSpec, tol: float = 1e-9) -> AmplitudeReport:
    """Perturb ``phi_alpha`` by ``F_beta`` and compare with ``phi_{alpha+beta}``.

    The ``delta`` block must agree for every ``h``; the ``tau`` block agrees
    once ``h`` is the compensating Hamiltonian found by the oracle.
    """
    car = jordan_wigner(spec.m)
    d = car.d
    h0 = compensating_hamiltonian(spec, car)
    phi = exclusion_generator(spec, car)
    F = exclusion_multiplier(spec, h0, car)
    psi = perturbed_generator(phi, F, F)
    target = exclusion_generator(spec, car, amp=spec.alpha + spec.beta)
    delta_res = tau_res = 0.0
    for e in psi.basis():
        a, b = psi(e), target(e)
        delta_res = max(delta_res, float(np.max(np.abs(a[d:, :d] - b[d:, :d]))),
                        float(np.max(np.abs(a[:d, d:] - b[:d, d:]))))
        tau_res = max(tau_res, float(np.max(np.abs(a[:d, :d] - b[:d, :d]))))
    hc = closed_form_h0(spec, car)
    hc = hc - np.trace(hc) / d * np.eye(d)
    return AmplitudeReport(
        delta_residual=delta_res,
        tau_residual=tau_res,
        h_used=h0,
        h_closed_form_residual=float(np.max(np.abs(h0 - hc))),
        symmetric=spec.symmetric(),
    )


def number_conservation_residual(spec: ExclusionSpec, t: float) -> float:
    """Spectral distance between ``exp(t tau)(N)`` and ``N`` for the vacuum semigroup."""
    from .cocycle import associated_semigroup

    car = jordan_wigner(spec.m)
    phi = exclusion_generator(spec, car)
    Nop = car.number_operator()
    P = associated_semigroup(phi, np.zeros(spec.n), np.zeros(spec.n), t)
    out = (P @ Nop.reshape(-1, order="F")).reshape(car.d, car.d, order="F")
    ev_out = np.sort(np.linalg.eigvalsh(0.5 * (out + dag(out))))
    ev_in = np.sort(np.linalg.eigvalsh(Nop))
    return float(np.max(np.abs(ev_out - ev_in)))


__all__ = [
    "CarSystem",
    "ExclusionSpec",
    "AmplitudeReport",
    "jordan_wigner",
    "hamiltonian",
    "t_alpha",
    "exclusion_generator",
    "exclusion_multiplier",
    "compensating_hamiltonian",
    "closed_form_h0",
    "verify_amplitude_addition",
    "number_conservation_residual",
]
