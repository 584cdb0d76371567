"""Dense complex linear algebra and quantum primitives.

Conventions
-----------
* Qubit 0 is the leftmost Kronecker factor (big endian).
* Vectorisation stacks columns: ``vec(A)[i + j*d] = A[i, j]``, so that
  ``vec(K A K^dag) = (conj(K) kron K) vec(A)``.
* Superoperators are ``d^2 x d^2`` matrices acting on ``vec``'d operators.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Callable, Sequence

import numpy as np

HERMITIAN_TOL = 1e-12
POSITIVITY_TOL = 1e-10
TRACE_TOL = 1e-12

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class NonlinearChannelError(ValueError):
    """Raised when a probed channel fails the superposition check."""


def kron_all(ops: Sequence[np.ndarray]) -> np.ndarray:
    return reduce(np.kron, ops)


def pauli(axis: str, qubit_index: int, n_total: int) -> np.ndarray:
    """Single-qubit Pauli ``axis`` on ``qubit_index`` of an ``n_total``-qubit register."""
    if axis not in ("X", "Y", "Z"):
        raise ValueError(f"unknown Pauli axis {axis!r}")
    if not 0 <= qubit_index < n_total:
        raise IndexError(f"qubit index {qubit_index} out of range for {n_total} qubits")
    ops = [PAULI["I"]] * n_total
    ops[qubit_index] = PAULI[axis]
    return kron_all(ops)


def partial_trace_first(a: np.ndarray, first_dim: int) -> np.ndarray:
    """Trace out the leading tensor factor of dimension ``first_dim``.

    ``B[k, l] = sum_i A[(i, k), (i, l)]``.
    """
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if first_dim < 1 or a.shape[0] % first_dim:
        raise ValueError(f"dimension {a.shape[0]} not divisible by {first_dim}")
    rest = a.shape[0] // first_dim
    return np.einsum("ikil->kl", a.reshape(first_dim, rest, first_dim, rest))


def is_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    a = np.asarray(a)
    return a.ndim == 2 and a.shape[0] == a.shape[1] and np.max(np.abs(a - a.conj().T), initial=0.0) <= tol


def hermitize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.conj().T)


def hermitian_exp(h: np.ndarray, t: float) -> np.ndarray:
    """Unitary ``exp(-i h t)`` from the eigendecomposition of Hermitian ``h``."""
    h = np.asarray(h, dtype=complex)
    if not is_hermitian(h):
        raise ValueError("hermitian_exp requires a Hermitian matrix")
    evals, evecs = np.linalg.eigh(h)
    return (evecs * np.exp(-1j * evals * t)) @ evecs.conj().T


def schatten2(a: np.ndarray) -> float:
    return float(np.sqrt(np.real(np.vdot(a, a))))


def weighted_seq_norm(v: Sequence[float], w: Sequence[float]) -> float:
    """The (1, w)-norm ``sum_t |v_t| w_{-t}`` of a left-infinite sequence.

    ``v`` is the finite support ordered oldest first, so ``v[-1]`` is ``v_0``.
    ``w`` is ``(w_0, w_1, ...)`` and must cover the support.
    """
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    if np.any(w <= 0):
        raise ValueError("weighting sequence must be strictly positive")
    if np.any(np.diff(w) >= 0):
        raise ValueError("weighting sequence must be strictly decreasing")
    if len(w) < len(v):
        raise ValueError("weighting sequence shorter than the sequence support")
    return float(np.sum(np.abs(v[::-1]) * w[: len(v)]))


def vec(a: np.ndarray) -> np.ndarray:
    return np.asarray(a).reshape(-1, order="F")


def unvec(x: np.ndarray, dim: int | None = None) -> np.ndarray:
    x = np.asarray(x)
    if dim is None:
        dim = int(round(np.sqrt(x.size)))
    return x.reshape(dim, dim, order="F")


def matrix_unit(i: int, j: int, dim: int) -> np.ndarray:
    e = np.zeros((dim, dim), dtype=complex)
    e[i, j] = 1.0
    return e


def to_superoperator(
    channel: Callable[[np.ndarray], np.ndarray],
    dim: int,
    *,
    seed: int = 0,
    linearity_tol: float = 1e-9,
) -> np.ndarray:
    """Column-stacked matrix of a linear map on ``dim x dim`` operators.

    Columns are ``vec(T(E_ij))`` over matrix units. The map is then probed on
    random complex operators; a mismatch above ``linearity_tol`` raises
    :class:`NonlinearChannelError`.
    """
    sup = np.empty((dim * dim, dim * dim), dtype=complex)
    for j in range(dim):
        for i in range(dim):
            sup[:, i + j * dim] = vec(channel(matrix_unit(i, j, dim)))
    rng = np.random.default_rng(seed)
    for _ in range(3):
        a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        mismatch = np.max(np.abs(vec(channel(a)) - sup @ vec(a)))
        if mismatch > linearity_tol:
            raise NonlinearChannelError(f"superposition mismatch {mismatch:.3e}")
    return sup


def apply_superoperator(sup: np.ndarray, a: np.ndarray) -> np.ndarray:
    return unvec(sup @ vec(a), a.shape[0])


def choi_matrix(sup: np.ndarray) -> np.ndarray:
    """Unnormalised Choi matrix ``sum_ij E_ij kron T(E_ij)``."""
    dim = int(round(np.sqrt(sup.shape[0])))
    # sup[a + b*d, i + j*d] = T(E_ij)[a, b]  ->  C[(i, a), (j, b)]
    s4 = sup.reshape(dim, dim, dim, dim)  # indices [b, a, j, i]
    return s4.transpose(3, 1, 2, 0).reshape(dim * dim, dim * dim)


@dataclass(frozen=True)
class CptpReport:
    trace_dev: float
    min_choi_eig: float
    trace_tol: float = 1e-10
    eig_tol: float = 1e-10

    @property
    def trace_preserving(self) -> bool:
        return self.trace_dev <= self.trace_tol

    @property
    def completely_positive(self) -> bool:
        return self.min_choi_eig >= -self.eig_tol

    @property
    def passed(self) -> bool:
        return self.trace_preserving and self.completely_positive


def verify_cptp(sup: np.ndarray) -> CptpReport:
    dim = int(round(np.sqrt(sup.shape[0])))
    diag_rows = [a + a * dim for a in range(dim)]
    traces = sup[diag_rows, :].sum(axis=0)  # tr T(E_ij) for every column
    expected = vec(np.eye(dim))
    trace_dev = float(np.max(np.abs(traces - expected)))
    min_eig = float(np.linalg.eigvalsh(hermitize(choi_matrix(sup)))[0])
    return CptpReport(trace_dev=trace_dev, min_choi_eig=min_eig)


def traceless_hermitian_basis(dim: int) -> np.ndarray:
    """Generalised Gell-Mann matrices, orthonormal under the Hilbert-Schmidt product.

    Returns a ``(dim^2 - 1, dim, dim)`` stack.
    """
    basis = []
    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    for j in range(dim):
        for k in range(j + 1, dim):
            sym = np.zeros((dim, dim), dtype=complex)
            sym[j, k] = sym[k, j] = inv_sqrt2
            anti = np.zeros((dim, dim), dtype=complex)
            anti[j, k] = -1j * inv_sqrt2
            anti[k, j] = 1j * inv_sqrt2
            basis += [sym, anti]
    for l in range(1, dim):
        diag = np.zeros(dim)
        diag[:l] = 1.0
        diag[l] = -l
        basis.append(np.diag(diag / np.sqrt(l * (l + 1))).astype(complex))
    return np.array(basis)


def traceless_restricted_norm(sup: np.ndarray) -> float:
    """Schatten-2 operator norm of the map restricted to traceless Hermitian operators."""
    dim = int(round(np.sqrt(sup.shape[0])))
    basis = traceless_hermitian_basis(dim)
    cols = np.stack([vec(b) for b in basis], axis=1)
    image = sup @ cols
    # Real coordinates only: ||S B x||^2 = x^T Re(M^dag M) x for real x.
    gram = np.real(image.conj().T @ image)
    return float(np.sqrt(max(np.linalg.eigvalsh(gram)[-1], 0.0)))


def maximally_mixed(n: int) -> np.ndarray:
    if n < 1:
        raise ValueError("need at least one qubit")
    d = 2**n
    return np.eye(d, dtype=complex) / d


def random_density(n: int, seed: int | np.random.Generator | None = None) -> np.ndarray:
    """Full-rank density matrix ``G G^dag / tr(G G^dag)`` from a complex Gaussian ``G``."""
    if n < 1:
        raise ValueError("need at least one qubit")
    rng = np.random.default_rng(seed)
    d = 2**n
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = g @ g.conj().T
    rho = hermitize(rho / np.trace(rho).real)
    return rho


def random_unitary(dim: int, seed: int | np.random.Generator | None = None) -> np.ndarray:
    """Haar-random unitary via QR of a complex Gaussian matrix."""
    rng = np.random.default_rng(seed)
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def basis_projector(index: int, dim: int) -> np.ndarray:
    p = np.zeros((dim, dim), dtype=complex)
    p[index, index] = 1.0
    return p


def check_density(
    rho: np.ndarray,
    herm_tol: float = HERMITIAN_TOL,
    trace_tol: float = TRACE_TOL,
    eig_tol: float = POSITIVITY_TOL,
) -> np.ndarray:
    """Validate a density matrix of dimension ``2^n`` and return it unchanged."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"density matrix must be square, got {rho.shape}")
    d = rho.shape[0]
    if d < 2 or d & (d - 1):
        raise ValueError(f"density matrix dimension {d} is not a power of two")
    if not is_hermitian(rho, herm_tol):
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > trace_tol:
        raise ValueError(f"density matrix trace {np.trace(rho).real:.15f} != 1")
    min_eig = np.linalg.eigvalsh(hermitize(rho))[0]
    if min_eig < -eig_tol:
        raise ValueError(f"density matrix has negative eigenvalue {min_eig:.3e}")
    return rho


def is_density(rho: np.ndarray, **tols: float) -> bool:
    try:
        check_density(rho, **tols)
    except ValueError:
        return False
    return True


def n_qubits(dim: int) -> int:
    n = int(round(np.log2(dim)))
    if 2**n != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    return n
