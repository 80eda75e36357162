"""Sparse column-row approximation ``A ~ X T Y^T``.

``X`` holds columns of ``A`` and ``Y`` holds rows of ``A`` (as columns), both
picked by a pivoted quasi-Gram-Schmidt pass that keeps only the triangular
factor ``R`` and the pivot list; the orthonormal basis ``Q = X R^{-1}`` is
never stored. ``T`` is the Frobenius-optimal middle factor for the chosen
selections,

    T = R^{-1} R^{-T} (X^T A Y) S^{-1} S^{-T},

evaluated as ``Rx^{-1} (Qx^T A Qy) Ry^{-T}`` from Householder factors of the
(densified, n-by-r) selections to avoid squaring their condition numbers,
and the reconstruction satisfies ``||A - XTY^T||_F^2 <= eps_col^2 + eps_row^2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.linalg import solve_triangular

from .core import (DimensionMismatch, RankExceeded, SingularFactor,
                   as_sparse, frobenius, qr_thin)

# A downdated residual norm below this fraction of its last exactly computed
# value is recomputed from scratch.
REORTH_FRACTION = 0.1
TOL_MODES = ("absolute", "relative", "auto")


@dataclass(frozen=True)
class QgsResult:
    selected: np.ndarray
    R: np.ndarray
    residual: float
    history: tuple = ()
    converged: bool = True
    target: float = 0.0

    @property
    def rank(self):
        return len(self.selected)


def residual_target(fro_norm, tol, tol_mode="absolute"):
    """Absolute Frobenius target for a tolerance and a mode.

    ``auto`` treats ``tol`` as absolute when ``||A||_F <= 1`` and as
    relative otherwise.
    """
    if tol_mode not in TOL_MODES:
        raise ValueError(f"tol_mode must be one of {TOL_MODES}")
    if tol_mode == "relative" or (tol_mode == "auto" and fro_norm > 1):
        return tol * fro_norm
    return tol


def _basis_coeffs(X, R, B):
    """``Q^T B`` and ``B - Q Q^T B`` for ``Q = X R^{-1}``, with one refinement."""
    B = B.toarray() if sp.issparse(B) else np.asarray(B)
    if R.shape[0] == 0:
        return np.zeros((0, B.shape[1])), B
    C = solve_triangular(R, np.asarray(X.T @ B), trans="T")
    V = B - X @ solve_triangular(R, C)
    C2 = solve_triangular(R, np.asarray(X.T @ V), trans="T")
    V = V - X @ solve_triangular(R, C2)
    return C + C2, V


def quasi_gram_schmidt(A, tol=1e-5, max_rank=None, tol_mode="absolute",
                       strict=False) -> QgsResult:
    """Greedy pivoted Gram-Schmidt on the columns of a sparse matrix.

    At each step the unselected column with the largest residual norm joins
    the basis. Residual norms are downdated with the new row of ``Q^T A`` and
    recomputed exactly once they fall below ``REORTH_FRACTION`` of their last
    exact value. Stops when the Frobenius norm of the remaining residual is at
    most the target derived from ``tol`` and ``tol_mode``, or at ``max_rank``.

    An unconverged run at ``max_rank`` returns ``converged=False``; with
    ``strict=True`` it raises ``RankExceeded`` instead.
    """
    A = as_sparse(A)
    if tol <= 0:
        raise ValueError("tol must be positive")
    n, m = A.shape
    if max_rank is None:
        max_rank = min(n, m)
    if max_rank < 1:
        raise ValueError("max_rank must be at least 1")
    max_rank = min(max_rank, n, m)

    A2 = A.copy()
    A2.data **= 2
    nu = np.asarray(A2.sum(axis=0)).ravel()
    ref = nu.copy()
    fro = np.sqrt(nu.sum())
    target = residual_target(fro, tol, tol_mode)
    AT = A.T.tocsr()

    active = np.ones(m, dtype=bool)
    selected = []
    R = np.zeros((0, 0))
    X = sp.csc_matrix((n, 0))
    res = float(np.sqrt(nu.sum()))
    history = [res]
    while res > target and len(selected) < max_rank:
        j = int(np.argmax(np.where(active, nu, -1.0)))
        coeffs, v = _basis_coeffs(X, R, A[:, [j]])
        rho = float(np.linalg.norm(v))
        scale = max(float(np.sqrt(ref[j])), float(R.diagonal().max(initial=0.0)))
        if rho <= 1e-14 * scale:
            raise SingularFactor(
                f"pivot column {j} is numerically dependent (residual {rho:.3e})")
        k = len(selected)
        R_new = np.zeros((k + 1, k + 1))
        R_new[:k, :k] = R
        R_new[:k, k] = coeffs[:, 0]
        R_new[k, k] = rho
        R = R_new
        selected.append(j)
        X = A[:, selected]
        active[j] = False

        g = np.asarray(AT @ (v[:, 0] / rho)).ravel()
        nu = nu - g * g
        nu[j] = 0.0
        stale = np.flatnonzero(active & (nu < REORTH_FRACTION ** 2 * ref))
        for start in range(0, len(stale), 256):
            cols = stale[start:start + 256]
            _, V = _basis_coeffs(X, R, A[:, cols])
            exact = np.einsum("ij,ij->j", V, V)
            nu[cols] = exact
            ref[cols] = exact
        res = float(np.sqrt(np.clip(nu[active], 0.0, None).sum()))
        history.append(res)

    converged = res <= target
    if not converged and strict:
        raise RankExceeded(
            f"max_rank={max_rank} reached with residual {res:.3e} > {target:.3e}")
    return QgsResult(np.array(selected, dtype=int), R, res, tuple(history),
                     converged, target)


@dataclass(frozen=True)
class ScrFactors:
    """``A ~ X T Y^T`` with ``X`` of shape ``(n, r)`` and ``Y`` of shape ``(m, r)``."""

    X: sp.csc_matrix
    T: np.ndarray
    Y: sp.csc_matrix
    eps_col: float = 0.0
    eps_row: float = 0.0
    col_indices: np.ndarray | None = None
    row_indices: np.ndarray | None = None
    converged: bool = True
    info: dict = field(default_factory=dict)

    @property
    def rank(self):
        return self.T.shape[0]

    @property
    def shape(self):
        return (self.X.shape[0], self.Y.shape[0])

    @property
    def eps_bound(self):
        return float(np.hypot(self.eps_col, self.eps_row))

    @classmethod
    def from_factors(cls, X, T, Y):
        """Wrap arbitrary factors (no selection bookkeeping)."""
        X = sp.csc_matrix(X, dtype=float)
        Y = sp.csc_matrix(Y, dtype=float)
        T = np.asarray(T, dtype=float)
        if X.shape[1] != T.shape[0] or Y.shape[1] != T.shape[1] or T.shape[0] != T.shape[1]:
            raise DimensionMismatch(
                f"incompatible factor shapes {X.shape}, {T.shape}, {Y.shape}")
        return cls(X, T, Y)

    def to_dense(self):
        return np.asarray(self.X @ (self.T @ self.Y.T.toarray()))


def scr_approximate(A, tol_col=1e-5, tol_row=1e-5, max_rank=None,
                    tol_mode="absolute", allow_empty=False) -> ScrFactors:
    """Sparse column-row approximation of ``A``.

    Runs ``quasi_gram_schmidt`` on ``A`` and on ``A^T``, truncates the longer
    pivot list so both sides have the same length ``r``, and forms ``T`` by
    triangular solves. ``eps_col``/``eps_row`` are the residuals after ``r``
    selections on each side.

    A result with ``r = 0`` raises ``RankExceeded`` unless ``allow_empty``.
    """
    A = as_sparse(A)
    n, m = A.shape
    AT = A.T.tocsc()
    qc = quasi_gram_schmidt(A, tol_col, max_rank, tol_mode)
    qr = quasi_gram_schmidt(AT, tol_row, max_rank, tol_mode)
    r = min(qc.rank, qr.rank)
    if r == 0 and not allow_empty:
        raise RankExceeded(
            "tolerance exceeds ||A||_F; the approximation would have rank 0")
    cols, rows = qc.selected[:r], qr.selected[:r]
    R, S = qc.R[:r, :r], qr.R[:r, :r]
    for name, F in (("R", R), ("S", S)):
        d = np.diag(F)
        if r and d.min() < 1e-14 * d.max():
            raise SingularFactor(f"{name} has a negligible diagonal entry")
    X = A[:, cols]
    Y = AT[:, rows]
    eps_col, eps_row = qc.history[r], qr.history[r]

    if r:
        # Same T as R^{-1} R^{-T} (X^T A Y) S^{-1} S^{-T}, evaluated through
        # Householder factors of X and Y: the Gram form squares cond(R) cond(S)
        Qx, Rx = qr_thin(X.toarray())
        Qy, Ry = qr_thin(Y.toarray())
        C = Qx.T @ np.asarray(A @ Qy)
        T = solve_triangular(Ry, solve_triangular(Rx, C).T).T
    else:
        T = np.zeros((0, 0))
    converged = eps_col <= qc.target and eps_row <= qr.target
    info = {"col_rank": qc.rank, "row_rank": qr.rank,
            "col_history": qc.history, "row_history": qr.history,
            "R": R, "S": S}
    return ScrFactors(X, T, Y, float(eps_col), float(eps_row), cols, rows,
                      converged, info)


def scr_residual(A, f: ScrFactors, method="blocked", block=256) -> float:
    """``||A - X T Y^T||_F`` without forming the full reconstruction.

    ``blocked`` streams column blocks of the difference and is accurate to
    roundoff even when the residual is tiny. ``trace`` expands the square,

        ||A||^2 - 2 tr(T^T X^T A Y) + tr((X^T X) T (Y^T Y) T^T),

    clamped at zero; it loses about half the digits near zero.
    """
    A = as_sparse(A)
    if A.shape != f.shape:
        raise DimensionMismatch(f"A is {A.shape} but factors are {f.shape}")
    if method == "trace":
        fro2 = frobenius(A) ** 2
        if f.rank == 0:
            return float(np.sqrt(fro2))
        XAY = np.asarray((f.X.T @ (A @ f.Y)).toarray())
        XX = np.asarray((f.X.T @ f.X).toarray())
        YY = np.asarray((f.Y.T @ f.Y).toarray())
        cross = np.sum(f.T * XAY)
        model = np.sum((XX @ f.T @ YY) * f.T)
        return float(np.sqrt(max(fro2 - 2 * cross + model, 0.0)))
    if method != "blocked":
        raise ValueError("method must be 'blocked' or 'trace'")
    XT = np.asarray(f.X @ f.T) if f.rank else None
    Yd = f.Y.tocsr()
    total = 0.0
    for start in range(0, A.shape[1], block):
        stop = min(start + block, A.shape[1])
        D = A[:, start:stop].toarray()
        if XT is not None:
            D -= XT @ Yd[start:stop].toarray().T
        total += float(np.einsum("ij,ij->", D, D))
    return float(np.sqrt(total))
