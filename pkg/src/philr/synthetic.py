"""Seeded synthetic matrices with controlled singular spectra."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp


def orthogonal(n, rng, k=None):
    """Haar-distributed ``n``-by-``k`` matrix with orthonormal columns."""
    k = n if k is None else k
    Q, R = np.linalg.qr(rng.standard_normal((n, k)))
    return Q * np.where(np.diag(R) < 0, -1.0, 1.0)


def decaying_spectrum(n, kind="geometric", rate=2.0, scale=1.0):
    """``scale * rate**-j`` (geometric) or ``scale * j**-rate`` (algebraic), j = 0..n-1 / 1..n."""
    j = np.arange(n, dtype=float)
    if kind == "geometric":
        return scale * rate ** -j
    if kind == "algebraic":
        return scale * (j + 1.0) ** -rate
    raise ValueError("kind must be 'geometric' or 'algebraic'")


def spectral_matrix(sigma, rng, n=None):
    """Dense ``U diag(sigma) V^T`` of size ``n`` (default ``len(sigma)``)."""
    sigma = np.asarray(sigma, dtype=float)
    n = len(sigma) if n is None else n
    k = len(sigma)
    U = orthogonal(n, rng, k)
    V = orthogonal(n, rng, k)
    return (U * sigma) @ V.T


def sparsify(A, density):
    """Keep the largest-magnitude entries so that about ``density`` survive."""
    A = np.asarray(A)
    if density >= 1:
        return sp.csc_matrix(A)
    cut = np.quantile(np.abs(A), 1.0 - density)
    return sp.csc_matrix(np.where(np.abs(A) >= cut, A, 0.0))


def synthetic_sparse(n, kind="geometric", rate=2.0, scale=1.0, density=0.2,
                     seed=0):
    """Sparse test matrix with a decaying spectrum before thresholding."""
    rng = np.random.default_rng(seed)
    return sparsify(spectral_matrix(decaying_spectrum(n, kind, rate, scale), rng),
                    density)


def random_factors(n, r, seed=0, density=0.1, target_norm=1.5):
    """Random sparse ``X``, ``Y`` (n-by-r) and dense ``T`` with ``||XTY^T||_2 = target_norm``.

    Every column of ``X`` and ``Y`` keeps at least one nonzero so both have
    full column rank with probability one.
    """
    rng = np.random.default_rng(seed)

    def factor():
        F = sp.random(n, r, density=density, random_state=rng,
                      data_rvs=rng.standard_normal).toarray()
        rows = rng.integers(0, n, size=r)
        F[rows, np.arange(r)] += 1.0
        return F

    X, Y = factor(), factor()
    T = rng.standard_normal((r, r))
    A = X @ T @ Y.T
    T *= target_norm / np.linalg.norm(A, 2)
    return sp.csc_matrix(X), T, sp.csc_matrix(Y)


def labeled_data(n, m, classes, seed=0, separation=1.0):
    """Gaussian class clouds: ``(data n-by-m, labels)`` with every class nonempty."""
    rng = np.random.default_rng(seed)
    labels = np.arange(m) % classes
    rng.shuffle(labels)
    centers = separation * rng.standard_normal((n, classes))
    data = centers[:, labels] + rng.standard_normal((n, m))
    return data, labels
