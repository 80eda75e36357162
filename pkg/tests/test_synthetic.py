import numpy as np
import pytest

from philr.synthetic import (decaying_spectrum, labeled_data, orthogonal,
                             random_factors, sparsify, spectral_matrix,
                             synthetic_sparse)


def test_spectra():
    assert np.allclose(decaying_spectrum(4, "geometric", 2.0), [1, 0.5, 0.25, 0.125])
    assert np.allclose(decaying_spectrum(3, "algebraic", 2.0), [1, 0.25, 1 / 9])
    with pytest.raises(ValueError):
        decaying_spectrum(3, "other")


def test_spectral_matrix_has_requested_singular_values(rng):
    s = decaying_spectrum(12, "geometric", 1.5)
    A = spectral_matrix(s, rng)
    assert np.allclose(np.linalg.svd(A, compute_uv=False), s, rtol=1e-12)
    Q = orthogonal(10, rng, 4)
    assert np.allclose(Q.T @ Q, np.eye(4))


def test_sparsify_density(rng):
    A = rng.standard_normal((50, 50))
    S = sparsify(A, 0.2)
    assert abs(S.nnz / 2500 - 0.2) < 0.01
    kept = S.toarray()
    assert np.all((kept == 0) | (kept == A))


def test_seeded_reproducibility():
    a = synthetic_sparse(30, seed=4)
    b = synthetic_sparse(30, seed=4)
    assert (a != b).nnz == 0
    X, T, Y = random_factors(40, 5, seed=1, target_norm=1.5)
    assert np.linalg.norm(X @ T @ Y.T.toarray(), 2) == pytest.approx(1.5, rel=1e-12)
    assert np.all(np.diff(X.indptr) > 0)
    d, l = labeled_data(5, 10, 3, seed=0)
    assert d.shape == (5, 10) and set(l.tolist()) == {0, 1, 2}
