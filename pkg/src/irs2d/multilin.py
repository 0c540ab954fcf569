"""Dense complex matrix and third-order tensor kernels.

All vectorization is column-major (``vec`` stacks columns), matching the
convention ``vec(a b^T) = b kron a``.  Rank-one outputs follow a single gauge:
every factor except the last has unit norm and its largest-magnitude entry is
real and nonnegative; scale and phase are pushed into the last factor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

# Dominant singular pairs of matrices whose smaller side is at most this size
# are taken from LAPACK; larger ones use power iteration.
FULL_SVD_MAX_DIM = 64
POWER_TOL = 1e-12
POWER_MAX_ITER = 500


class DegenerateInputError(ValueError):
    """Raised when a rank-one fit is requested for an all-zero input."""


@dataclass(frozen=True)
class Rank1Triple:
    """Rank-one factors ``u1 o u2 o u3`` of a third-order tensor."""

    u1: np.ndarray
    u2: np.ndarray
    u3: np.ndarray

    def full(self) -> np.ndarray:
        return np.einsum("i,j,k->ijk", self.u1, self.u2, self.u3)


def _phase_anchor(v):
    """Unit phase that makes the largest-magnitude entry of ``v`` real >= 0."""
    idx = int(np.argmax(np.abs(v)))
    val = v[idx]
    if val == 0:
        return 1.0 + 0.0j
    return val / abs(val)


def kron(A, B):
    return np.kron(np.asarray(A), np.asarray(B))


def khatri_rao(A, B):
    """Column-wise Kronecker product ``A <> B``."""
    A = np.asarray(A)
    B = np.asarray(B)
    if A.ndim == 1:
        A = A[None, :]
    if B.ndim == 1:
        B = B[None, :]
    if A.shape[1] != B.shape[1]:
        raise ValueError(
            f"khatri_rao needs equal column counts, got {A.shape[1]} and {B.shape[1]}"
        )
    return np.einsum("ir,jr->ijr", A, B).reshape(A.shape[0] * B.shape[0], A.shape[1])


def hadamard_product(A, B):
    A = np.asarray(A)
    B = np.asarray(B)
    if A.shape != B.shape:
        raise ValueError(f"shape mismatch: {A.shape} vs {B.shape}")
    return A * B


def vec(A):
    return np.asarray(A).reshape(-1, order="F")


def unvec(v, rows, cols):
    v = np.asarray(v)
    if v.size != rows * cols:
        raise ValueError(f"cannot unvec length {v.size} into {rows}x{cols}")
    return v.reshape(rows, cols, order="F")


def _block_shape(X, block_rows, block_cols):
    rows, cols = X.shape
    if block_rows < 1 or block_cols < 1 or rows % block_rows or cols % block_cols:
        raise ValueError(
            f"{rows}x{cols} matrix is not divisible into a "
            f"{block_rows}x{block_cols} grid of blocks"
        )
    return rows // block_rows, cols // block_cols


def van_loan_rearrange(X, block_rows, block_cols):
    """Rearrange ``X`` so that ``X = A kron B`` becomes ``vec(B) vec(A)^T``.

    ``A`` has shape ``(block_rows, block_cols)``; column ``i + j*block_rows``
    of the output is ``vec`` of block ``(i, j)`` of ``X``.
    """
    X = np.asarray(X)
    r2, c2 = _block_shape(X, block_rows, block_cols)
    X4 = X.reshape(block_rows, r2, block_cols, c2)
    return X4.transpose(3, 1, 2, 0).reshape(c2 * r2, block_cols * block_rows)


def svd_rank1(M):
    """Dominant singular triplet ``(u, s, v)`` with ``s u v^H`` the best rank-one fit.

    ``u`` is phase-normalized (largest entry real nonnegative); ``v`` carries the
    compensating phase so the product is unchanged.
    """
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2:
        raise ValueError("svd_rank1 expects a matrix")
    if not np.any(M):
        raise DegenerateInputError("dominant singular pair of an all-zero matrix")
    if min(M.shape) <= FULL_SVD_MAX_DIM:
        U, s, Vh = scipy.linalg.svd(M, full_matrices=False, lapack_driver="gesdd")
        u, sigma, v = U[:, 0], float(s[0]), Vh[0].conj()
    else:
        u, sigma, v = _power_rank1(M)
    ph = _phase_anchor(u)
    return u / ph, sigma, v / ph


def _power_rank1(M, tol=POWER_TOL, max_iter=POWER_MAX_ITER):
    # start from the first column; fall back to the heaviest one if it is zero
    x = M[:, 0]
    if not np.any(x):
        x = M[:, int(np.argmax(np.linalg.norm(M, axis=0)))]
    u = x / np.linalg.norm(x)
    sigma = 0.0
    for _ in range(max_iter):
        v = M.conj().T @ u
        v /= np.linalg.norm(v)
        w = M @ v
        new_sigma = float(np.linalg.norm(w))
        u = w / new_sigma
        if abs(new_sigma - sigma) <= tol * new_sigma:
            sigma = new_sigma
            break
        sigma = new_sigma
    v = M.conj().T @ u
    v /= np.linalg.norm(v)
    return u, sigma, v


@dataclass(frozen=True)
class KroneckerFit:
    """Result of a nearest-Kronecker fit ``X ~ A kron B``."""

    A: np.ndarray
    B: np.ndarray
    singular_values: np.ndarray
    degenerate: bool = False

    @property
    def residual(self) -> float:
        """Frobenius residual, i.e. the tail singular energy of the rearrangement."""
        return float(np.sqrt(np.sum(self.singular_values[1:] ** 2)))

    @property
    def fit_ratio(self) -> float:
        """Share of total energy captured by the rank-one term."""
        total = np.sum(self.singular_values ** 2)
        return float(self.singular_values[0] ** 2 / total) if total > 0 else 0.0


def nearest_kronecker(X, block_rows, block_cols):
    """Best Frobenius approximation ``X ~ A kron B`` with ``A`` of shape
    ``(block_rows, block_cols)``.

    ``A`` has unit Frobenius norm with its largest entry real nonnegative;
    the scale lives in ``B``.  An all-zero ``X`` returns zero factors with
    ``degenerate=True``.
    """
    X = np.asarray(X, dtype=complex)
    r2, c2 = _block_shape(X, block_rows, block_cols)
    Xr = van_loan_rearrange(X, block_rows, block_cols)
    if not np.any(Xr):
        return KroneckerFit(
            A=np.zeros((block_rows, block_cols), complex),
            B=np.zeros((r2, c2), complex),
            singular_values=np.zeros(min(Xr.shape)),
            degenerate=True,
        )
    s_all = scipy.linalg.svdvals(Xr)
    u, s, v = svd_rank1(Xr)
    a = v.conj()
    ph = _phase_anchor(a)
    a = a / ph
    b = s * ph * u
    return KroneckerFit(
        A=unvec(a, block_rows, block_cols),
        B=unvec(b, r2, c2),
        singular_values=s_all,
    )


def unfold(T, mode):
    """Mode-``mode`` unfolding (modes numbered 1..3), fibers as columns."""
    T = np.asarray(T)
    return np.moveaxis(T, mode - 1, 0).reshape(T.shape[mode - 1], -1, order="F")


def fold(M, mode, shape):
    shape = tuple(shape)
    moved = (shape[mode - 1],) + tuple(d for i, d in enumerate(shape) if i != mode - 1)
    return np.moveaxis(np.asarray(M).reshape(moved, order="F"), 0, mode - 1)


def mode_product(T, v, mode):
    """Contract mode ``mode`` (1-based) of ``T`` with ``v`` (no conjugation)."""
    T = np.asarray(T)
    v = np.asarray(v)
    if v.shape != (T.shape[mode - 1],):
        raise ValueError(
            f"mode-{mode} contraction needs length {T.shape[mode - 1]}, got {v.shape}"
        )
    return np.tensordot(T, v, axes=([mode - 1], [0]))


def hosvd_rank1_3(T, refine=False):
    """Rank-one approximation of a third-order tensor by truncated HOSVD.

    ``u1`` and ``u2`` are the dominant left singular vectors of the mode-1 and
    mode-2 unfoldings; ``u3`` is the contraction ``T x1 conj(u1) x2 conj(u2)``.
    With ``refine=True`` one alternating (HOOI) sweep follows, which never
    increases the reconstruction error.
    """
    T = np.asarray(T, dtype=complex)
    if T.ndim != 3:
        raise ValueError("hosvd_rank1_3 expects a third-order tensor")
    if not np.any(T):
        raise DegenerateInputError("rank-one approximation of an all-zero tensor")
    u1 = svd_rank1(unfold(T, 1))[0]
    u2 = svd_rank1(unfold(T, 2))[0]
    if refine:
        u1 = _unit(np.einsum("ijk,j,k->i", T, u2.conj(), _contract12(T, u1, u2).conj()))
        u2 = _unit(np.einsum("ijk,i,k->j", T, u1.conj(), _contract12(T, u1, u2).conj()))
        u1 = u1 / _phase_anchor(u1)
        u2 = u2 / _phase_anchor(u2)
    return Rank1Triple(u1=u1, u2=u2, u3=_contract12(T, u1, u2))


def _contract12(T, u1, u2):
    return mode_product(mode_product(T, u1.conj(), 1), u2.conj(), 1)


def _unit(v):
    n = np.linalg.norm(v)
    if n == 0:
        raise DegenerateInputError("refinement collapsed to a zero factor")
    return v / n


def block_perm_indices(M_y, M_z, Q_y, Q_z, N_y=1, N_z=1):
    """Row permutation linking the two Khatri-Rao/Kronecker orderings.

    With ``A: I x R``, ``B: J x S``, ``C: K x R``, ``D: L x S`` and
    ``(I, J, K, L) = (M_y, M_z, Q_y, Q_z)``, the returned index array ``p``
    satisfies ``khatri_rao(kron(A, B), kron(C, D)) == kron(khatri_rao(A, C),
    khatri_rao(B, D))[p]``.  The column counts ``N_y, N_z`` do not affect the
    row map and are accepted for symmetry with the channel dimensions.
    """
    for d in (M_y, M_z, Q_y, Q_z, N_y, N_z):
        if d < 1:
            raise ValueError("dimensions must be positive")
    i, j, k, l = np.meshgrid(
        np.arange(M_y), np.arange(M_z), np.arange(Q_y), np.arange(Q_z), indexing="ij"
    )
    target = ((i * Q_y + k) * M_z + j) * Q_z + l
    return target.reshape(-1)


def invert_permutation(p):
    p = np.asarray(p)
    inv = np.empty_like(p)
    inv[p] = np.arange(p.size)
    return inv


def hadamard_matrix(n):
    """Sylvester Hadamard matrix of order ``n`` scaled to be unitary."""
    if n < 1 or n & (n - 1):
        raise ValueError(f"Hadamard order must be a power of two, got {n}")
    return scipy.linalg.hadamard(n).astype(complex) / np.sqrt(n)


def dft_codebook(N, K):
    """Row-orthonormal ``N x K`` DFT matrix, ``W[n, k] = exp(-2j pi n k / K) / sqrt(K)``."""
    if K < N:
        raise ValueError(f"DFT codebook needs K >= N, got N={N}, K={K}")
    n = np.arange(N)[:, None]
    k = np.arange(K)[None, :]
    return np.exp(-2j * np.pi * n * k / K) / np.sqrt(K)
