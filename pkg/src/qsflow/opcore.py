"""Dense complex linear algebra shared by every other module.

Index conventions (fixed, not configurable):

* The extended multiplicity space ``k^ = C + k`` has basis
  ``(e0, e1, ..., en)`` with the vacuum direction ``e0`` first.
* On ``h (x) k^`` the coordinate of ``u (x) zeta`` is ``kappa * d + i`` for
  ``h``-index ``i`` and ``k^``-index ``kappa``; the multiplicity index is the
  slow (outer) one. In numpy terms the operator ``x (x) B`` is
  ``np.kron(B, x)``.
* Superoperators act on column-stacked vectorisations,
  ``vec(A X B) = (B^T kron A) vec(X)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

DEFAULT_TOL = 1e-10


class DimensionError(ValueError):
    """Operand shapes do not conform."""


class NotHermitianError(ValueError):
    pass


@dataclass(frozen=True)
class SpaceDims:
    """Dimensions of the initial space ``h`` and multiplicity space ``k``."""

    d: int
    n: int

    def __post_init__(self):
        if self.d < 1 or self.n < 0:
            raise DimensionError(f"need d >= 1 and n >= 0, got d={self.d}, n={self.n}")

    @property
    def nhat(self) -> int:
        return self.n + 1

    @property
    def big(self) -> int:
        """Dimension of ``h (x) k^``."""
        return self.d * (self.n + 1)


def as_matrix(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2:
        raise DimensionError(f"expected a matrix, got shape {a.shape}")
    return a


def as_vector(z, n: int | None = None) -> np.ndarray:
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if z.ndim != 1:
        raise DimensionError(f"expected a vector, got shape {z.shape}")
    if n is not None and z.shape[0] != n:
        raise DimensionError(f"expected a vector of length {n}, got {z.shape[0]}")
    return z


def dag(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def kron(a, b) -> np.ndarray:
    """Kronecker product, ``(A kron B)[i*rB + p, j*cB + q] = A[i, j] B[p, q]``."""
    return np.kron(as_matrix(a), as_matrix(b))


def expm(a, tol: float = 1e-12) -> np.ndarray:
    """Matrix exponential by Pade scaling-and-squaring.

    ``tol`` is the relative accuracy the caller relies on; the Pade kernel
    reaches double precision for ``||A|| <= 10`` so it is only checked for
    sanity.
    """
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"expm needs a square matrix, got {a.shape}")
    if not tol > 0:
        raise ValueError("tol must be positive")
    return scipy.linalg.expm(a)


def is_hermitian(a, tol: float = DEFAULT_TOL) -> bool:
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        return False
    scale = max(1.0, float(np.max(np.abs(a), initial=0.0)))
    return float(np.max(np.abs(a - dag(a)), initial=0.0)) <= tol * scale


def hermitian_part(a) -> np.ndarray:
    a = as_matrix(a)
    return 0.5 * (a + dag(a))


def psd_check(a, tol: float = DEFAULT_TOL) -> tuple[bool, float]:
    """Return ``(is_psd, min_eigenvalue)`` for a Hermitian matrix.

    ``is_psd`` holds when the smallest eigenvalue is at least
    ``-tol * max(1, ||A||)``.
    """
    a = as_matrix(a)
    if not is_hermitian(a, tol):
        raise NotHermitianError("psd_check needs a Hermitian matrix")
    evals = np.linalg.eigvalsh(hermitian_part(a))
    lo = float(evals[0])
    scale = max(1.0, float(np.max(np.abs(evals))))
    return lo >= -tol * scale, lo


def psd_sqrt(a, cutoff: float = DEFAULT_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Square root and pseudo-inverse square root of a PSD matrix.

    Eigenvalues below ``cutoff * max(1, ||A||)`` are treated as zero.
    """
    evals, vecs = np.linalg.eigh(hermitian_part(a))
    scale = max(1.0, float(np.max(np.abs(evals), initial=0.0)))
    keep = evals > cutoff * scale
    root = np.where(keep, np.sqrt(np.clip(evals, 0.0, None)), 0.0)
    inv_root = np.zeros_like(root)
    inv_root[keep] = 1.0 / root[keep]
    return (vecs * root) @ dag(vecs), (vecs * inv_root) @ dag(vecs)


def ampliate(x, mult: int) -> np.ndarray:
    """``x (x) I_mult`` under the multiplicity-outer convention."""
    return np.kron(np.eye(mult), as_matrix(x))


def embed_ehat(z, dims: SpaceDims) -> np.ndarray:
    """The operator ``E_zhat: h -> h (x) k^``, ``u -> u (x) (1, z)``."""
    z = as_vector(z, dims.n) if dims.n else np.zeros(0, dtype=complex)
    zhat = np.concatenate([[1.0 + 0j], z])
    return np.kron(zhat.reshape(-1, 1), np.eye(dims.d))


def embed(zeta, d: int) -> np.ndarray:
    """``E_zeta`` for an arbitrary vector ``zeta`` of the multiplicity factor."""
    zeta = as_vector(zeta)
    return np.kron(zeta.reshape(-1, 1), np.eye(d))


def compress(T, z, w, dims: SpaceDims | None = None) -> np.ndarray:
    """``E^zhat T E_what``, a ``d x d`` matrix."""
    T = as_matrix(T)
    z = as_vector(z)
    w = as_vector(w)
    if z.shape != w.shape:
        raise DimensionError("z and w must have equal length")
    if dims is None:
        nhat = z.shape[0] + 1
        if T.shape[0] % nhat:
            raise DimensionError(f"T of shape {T.shape} does not fit multiplicity {nhat - 1}")
        dims = SpaceDims(T.shape[0] // nhat, z.shape[0])
    if T.shape != (dims.big, dims.big):
        raise DimensionError(f"T must be {dims.big}-square, got {T.shape}")
    return dag(embed_ehat(z, dims)) @ T @ embed_ehat(w, dims)


def delta_op(dims: SpaceDims) -> np.ndarray:
    """``Delta = I_h (x) P_k``, the projection off the vacuum block."""
    diag = np.concatenate([np.zeros(dims.d), np.ones(dims.d * dims.n)])
    return np.diag(diag).astype(complex)


# -- superoperator plumbing -------------------------------------------------


def vec(x) -> np.ndarray:
    return np.asarray(x).reshape(-1, order="F")


def unvec(v, rows: int, cols: int | None = None) -> np.ndarray:
    cols = rows if cols is None else cols
    return np.asarray(v).reshape(rows, cols, order="F")


def sandwich(a, b) -> np.ndarray:
    """Superoperator of ``X -> A X B``."""
    return np.kron(as_matrix(b).T, as_matrix(a))


def matrix_units(d: int) -> list[np.ndarray]:
    """Basis ``E_ij`` of ``M_d`` in column-stacked order (``E_ij`` at ``j*d + i``)."""
    units = []
    for col in range(d * d):
        e = np.zeros(d * d, dtype=complex)
        e[col] = 1.0
        units.append(unvec(e, d))
    return units


def superop_from_callable(fn, d: int, out_shape: tuple[int, int]) -> np.ndarray:
    """Tabulate a linear map on ``M_d`` as a superoperator matrix."""
    cols = [vec(fn(e)) for e in matrix_units(d)]
    out = np.stack(cols, axis=1) if cols else np.zeros((out_shape[0] * out_shape[1], 0))
    if out.shape[0] != out_shape[0] * out_shape[1]:
        raise DimensionError(f"map output does not have shape {out_shape}")
    return out.astype(complex)


def apply_superop(S, x, out_shape: tuple[int, int]) -> np.ndarray:
    return unvec(np.asarray(S) @ vec(x), *out_shape)


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_hermitian(n: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * 0.5 * (a + dag(a))


def random_complex(shape, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    return scale * (rng.normal(size=shape) + 1j * rng.normal(size=shape)) / np.sqrt(2)
