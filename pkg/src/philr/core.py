"""Shared matrix handling, norms, QR and the error taxonomy.

Dense matrices are plain 2-D ``float64`` numpy arrays; sparse matrices are
``scipy.sparse.csc_matrix`` instances with sorted indices and no explicit
zeros. The ``as_dense``/``as_sparse`` helpers enforce the invariants every
other module relies on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import norm as _sparse_fro

# Dense kernels refuse matrices larger than this on either side.
DENSE_THRESHOLD = 2000


class ComputationError(Exception):
    """Base class for every failure raised by the library.

    ``kind`` is one of the stable identifiers listed in ``KINDS``; the CLI
    uses it to choose an exit code and to label reports.
    """

    kind = "computation-error"
    KINDS = (
        "dimension-mismatch",
        "non-finite-input",
        "rank-exceeded",
        "convergence-failure",
        "singular-factor",
        "io-failure",
    )

    def __init__(self, context: str = ""):
        super().__init__(context)
        self.context = context

    def __str__(self):
        return f"{self.kind}: {self.context}" if self.context else self.kind


class DimensionMismatch(ComputationError, ValueError):
    kind = "dimension-mismatch"


class NonFiniteInput(ComputationError, ValueError):
    kind = "non-finite-input"


class RankExceeded(ComputationError):
    kind = "rank-exceeded"


class ConvergenceFailure(ComputationError):
    kind = "convergence-failure"


class SingularFactor(ComputationError):
    kind = "singular-factor"


class IOFailure(ComputationError, OSError):
    kind = "io-failure"


def as_dense(M, name="matrix") -> np.ndarray:
    """Return ``M`` as a finite 2-D float64 array (densifying sparse input)."""
    if sp.issparse(M):
        M = M.toarray()
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise NonFiniteInput(f"{name} contains NaN or Inf")
    return M


def as_sparse(A, name="matrix") -> sp.csc_matrix:
    """Return ``A`` as a canonical CSC matrix.

    Canonical means sorted row indices, no duplicates and no stored zeros,
    so that column extraction returns verbatim columns of the input.
    """
    if sp.issparse(A):
        A = sp.csc_matrix(A, dtype=float, copy=True)
    else:
        A = sp.csc_matrix(as_dense(A, name))
    if A.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D")
    if not np.all(np.isfinite(A.data)):
        raise NonFiniteInput(f"{name} contains NaN or Inf")
    A.sum_duplicates()
    A.eliminate_zeros()
    A.sort_indices()
    return A


def check_square(M, name="matrix"):
    if M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {M.shape}")


def matmul(A, B) -> np.ndarray:
    """Product of a dense or sparse ``A`` with a dense ``B``.

    Sparse ``A`` goes through the CSC kernel, so the cost is proportional to
    ``nnz(A) * B.shape[1]``.
    """
    B = np.asarray(B, dtype=float)
    if B.ndim != 2:
        raise DimensionMismatch(f"right operand must be 2-D, got shape {B.shape}")
    if A.shape[1] != B.shape[0]:
        raise DimensionMismatch(
            f"inner dimensions differ: {A.shape} x {B.shape}")
    if sp.issparse(A):
        return np.asarray(A @ B)
    return np.asarray(A, dtype=float) @ B


def qr_thin(M):
    """Thin QR with a nonnegative diagonal in ``R``.

    Returns ``(Q, R)`` with ``Q`` of shape ``(m, n)`` and ``R`` of shape
    ``(n, n)``. Column signs are flipped so that ``diag(R) >= 0``, which makes
    the factorization deterministic.
    """
    M = as_dense(M)
    m, n = M.shape
    if m < n:
        raise DimensionMismatch(f"qr_thin needs rows >= cols, got {M.shape}")
    if n == 0:
        return np.zeros((m, 0)), np.zeros((0, 0))
    Q, R = np.linalg.qr(M, mode="reduced")
    signs = np.where(np.diag(R) < 0, -1.0, 1.0)
    return Q * signs, R * signs[:, None]


@dataclass(frozen=True)
class NormReport:
    value: float
    kind: str = "two"
    method: str = "exact"
    iterations: int = 0
    converged: bool = True

    def __post_init__(self):
        if self.value < 0 or self.iterations < 0:
            raise ValueError("norm value and iteration count must be nonnegative")
        if self.kind not in ("two", "one", "frobenius"):
            raise ValueError(f"unknown norm kind {self.kind!r}")
        if self.method not in ("exact", "power-iteration"):
            raise ValueError(f"unknown norm method {self.method!r}")
        if self.method == "exact" and not self.converged:
            raise ValueError("exact norms are always converged")

    def __float__(self):
        return float(self.value)


def _start_vector(A):
    n = A.shape[1]
    v = np.asarray(abs(A).sum(axis=0)).ravel()
    w = np.asarray(A @ v).ravel() if np.any(v) else v
    if not np.any(w):
        # column-sum start lies in the null space; fall back to a fixed draw
        v = np.random.default_rng(0).standard_normal(n)
    return v / np.linalg.norm(v)


def norm2_estimate(A, tol=1e-8, max_iter=500, strict=False) -> NormReport:
    """Estimate the largest singular value of a sparse matrix.

    Power iteration on ``A^T A`` started from the normalized column-sum
    vector of ``|A|``. Iteration stops once the relative change of the
    estimate drops below ``tol``.

    With ``strict=True`` an unconverged run raises ``ConvergenceFailure``
    instead of returning ``converged=False``.
    """
    A = as_sparse(A) if not sp.issparse(A) else A.tocsc()
    if tol <= 0:
        raise ValueError("tol must be positive")
    fro = _sparse_fro(A)
    if fro == 0:
        return NormReport(0.0, "two", "power-iteration", 0, True)
    AT = A.T.tocsr()
    v = _start_vector(A)
    sigma = 0.0
    for it in range(1, max_iter + 1):
        w = AT @ (A @ v)
        nw = np.linalg.norm(w)
        if nw == 0:
            return NormReport(0.0, "two", "power-iteration", it, True)
        v = w / nw
        new = np.sqrt(nw)
        if abs(new - sigma) <= tol * new:
            return NormReport(min(new, fro), "two", "power-iteration", it, True)
        sigma = new
    if strict:
        raise ConvergenceFailure(
            f"power iteration did not reach tol={tol} in {max_iter} steps")
    return NormReport(min(sigma, fro), "two", "power-iteration", max_iter, False)


def norm2_exact_small(M, threshold=DENSE_THRESHOLD) -> float:
    """Spectral norm of a small dense matrix via its singular values."""
    M = as_dense(M)
    if max(M.shape) > threshold:
        raise DimensionMismatch(
            f"norm2_exact_small limited to {threshold}, got {M.shape}")
    if M.size == 0:
        return 0.0
    return float(np.linalg.svd(M, compute_uv=False)[0])


def frobenius(M) -> float:
    if sp.issparse(M):
        return float(_sparse_fro(M))
    return float(np.linalg.norm(M))
