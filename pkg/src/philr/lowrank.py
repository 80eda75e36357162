"""Phi-functions of a factored matrix ``A~ = X T Y^T`` without n-by-n work.

With ``Z = T (Y^T X)`` (r-by-r) every member of the family reduces to

    phi_l(X T Y^T) = I/l! + X [phi_{l+1}(Z) T] Y^T,

so only ``phi_1(Z) .. phi_{p+1}(Z)`` are evaluated densely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .core import (DENSE_THRESHOLD, DimensionMismatch, norm2_exact_small,
                   qr_thin)
from .phikernel import phi_family_dense
from .scr import ScrFactors


@dataclass(frozen=True, eq=False)
class LowRankPhiFamily:
    """Lazy representation of ``phi_0(A~) .. phi_p(A~)``.

    ``coeffs[l]`` is ``phi_{l+1}(Z) T``; ``phis[k]`` is the bare ``phi_k(Z)``
    for ``k = 0..p+1``.
    """

    p: int
    X: sp.csc_matrix
    Y: sp.csc_matrix
    T: np.ndarray
    Z: np.ndarray
    phis: tuple
    coeffs: tuple

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def rank(self):
        return self.Z.shape[0]

    @cached_property
    def R1(self):
        return qr_thin(self.X.toarray())[1]

    @cached_property
    def R2(self):
        return qr_thin(self.Y.toarray())[1]

    def _check_ell(self, ell):
        if not 0 <= ell <= self.p:
            raise DimensionMismatch(f"ell={ell} outside 0..{self.p}")


def build_phi_family(f: ScrFactors, p=4) -> LowRankPhiFamily:
    """Evaluate ``phi_{l+1}(Z)`` for ``l = 0..p`` and store ``phi_{l+1}(Z) T``."""
    if p < 0:
        raise ValueError("p must be nonnegative")
    X, Y, T = f.X.tocsc(), f.Y.tocsc(), np.asarray(f.T, dtype=float)
    if X.shape[0] != Y.shape[0]:
        raise DimensionMismatch(
            f"phi-functions need a square approximation, got {f.shape}")
    r = T.shape[0]
    if r * (p + 2) > DENSE_THRESHOLD:
        raise DimensionMismatch(f"rank {r} with p={p} exceeds the dense threshold")
    YX = np.asarray((Y.T @ X).toarray()) if r else np.zeros((0, 0))
    Z = T @ YX
    fam = phi_family_dense(Z, p + 1)
    coeffs = tuple(fam[ell + 1] @ T for ell in range(p + 1))
    return LowRankPhiFamily(p, X, Y, T, Z, tuple(fam.matrices), coeffs)


def materialize(fam: LowRankPhiFamily, ell, threshold=DENSE_THRESHOLD) -> np.ndarray:
    """Dense ``phi_ell(A~) = I/ell! + X C_ell Y^T``."""
    fam._check_ell(ell)
    if fam.n > threshold:
        raise DimensionMismatch(f"n={fam.n} exceeds dense threshold {threshold}")
    out = np.eye(fam.n) / math.factorial(ell)
    if fam.rank:
        # the n-by-n result is dense anyway; dense factors let BLAS do the work
        out += fam.X.toarray() @ (fam.coeffs[ell] @ fam.Y.T.toarray())
    return out


def apply(fam: LowRankPhiFamily, ell, v) -> np.ndarray:
    """``phi_ell(A~) v`` in ``O(nnz(X) + nnz(Y) + r^2)`` per column of ``v``."""
    fam._check_ell(ell)
    v = np.asarray(v, dtype=float)
    if v.shape[0] != fam.n:
        raise DimensionMismatch(f"vector of length {v.shape[0]} for n={fam.n}")
    out = v / math.factorial(ell)
    if fam.rank:
        out = out + fam.X @ (fam.coeffs[ell] @ (fam.Y.T @ v))
    return np.asarray(out)


def eta_matrix(fam: LowRankPhiFamily, ell):
    """``R1 C_ell R2^T``, the r-by-r surrogate of ``X C_ell Y^T``."""
    fam._check_ell(ell)
    return fam.R1 @ fam.coeffs[ell] @ fam.R2.T


def norm_estimate_eta(fam: LowRankPhiFamily, ell):
    """``(eta, lower, upper)`` bracketing ``||phi_ell(A~)||_2``.

    ``eta = ||R1 C_ell R2^T||_2`` equals ``||X C_ell Y^T||_2`` by unitary
    invariance, so the triangle inequality gives
    ``|eta - 1/ell!| <= ||phi_ell(A~)||_2 <= eta + 1/ell!``.
    """
    eta = norm2_exact_small(eta_matrix(fam, ell)) if fam.rank else 0.0
    inv_fact = 1.0 / math.factorial(ell)
    return eta, abs(eta - inv_fact), eta + inv_fact
