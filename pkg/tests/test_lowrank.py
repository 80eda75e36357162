import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, strategies as st

from philr.core import DimensionMismatch, norm2_exact_small
from philr.lowrank import (apply, build_phi_family, eta_matrix, materialize,
                           norm_estimate_eta)
from philr.phikernel import phi_dense, phi_taylor_oracle
from philr.scr import ScrFactors, scr_approximate
from philr.synthetic import random_factors, synthetic_sparse

from conftest import rel

E = math.e


def rank_one(n=5):
    e1 = sp.csc_matrix(np.eye(n)[:, :1])
    return ScrFactors.from_factors(e1, np.ones((1, 1)), e1)


def test_rank_one_exponential():
    fam = build_phi_family(rank_one(), p=2)
    assert np.allclose(fam.Z, [[1.0]])
    assert fam.coeffs[0][0, 0] == pytest.approx(E - 1, rel=1e-14)
    expA = materialize(fam, 0)
    assert expA[0, 0] == pytest.approx(E, rel=1e-14)
    assert np.allclose(np.diag(expA)[1:], 1.0)
    assert np.allclose(apply(fam, 0, np.eye(5)[0]), E * np.eye(5)[0])
    eta, lo, hi = norm_estimate_eta(fam, 0)
    assert eta == pytest.approx(E - 1, rel=1e-14)
    assert lo <= E <= hi + 1e-15


def test_zero_core():
    X, _, Y = random_factors(30, 4, seed=1)
    fam = build_phi_family(ScrFactors.from_factors(X, np.zeros((4, 4)), Y), p=3)
    for ell in range(4):
        assert not np.any(fam.coeffs[ell])
        assert np.array_equal(materialize(fam, ell), np.eye(30) / math.factorial(ell))
        eta, lo, hi = norm_estimate_eta(fam, ell)
        assert eta == 0 and lo == hi == 1 / math.factorial(ell)


def test_exactness_against_taylor():
    X, T, Y = random_factors(400, 15, seed=5)
    f = ScrFactors.from_factors(X, T, Y)
    fam = build_phi_family(f, p=4)
    At = f.to_dense()
    for ell in range(5):
        assert rel(materialize(fam, ell), phi_taylor_oracle(At, ell)) <= 1e-12


def test_structure_invariants():
    X, T, Y = random_factors(60, 6, seed=9)
    fam = build_phi_family(ScrFactors.from_factors(X, T, Y), p=4)
    Z = T @ (Y.T @ X).toarray()
    assert rel(fam.Z, Z) <= 1e-14
    for R in (fam.R1, fam.R2):
        assert R.shape == (6, 6) and np.allclose(R, np.triu(R))
    for ell in range(5):
        M = eta_matrix(fam, ell)
        dense = X.toarray() @ fam.coeffs[ell] @ Y.T.toarray()
        assert abs(norm2_exact_small(M) - np.linalg.norm(dense, 2)) <= 1e-10 * norm2_exact_small(M)


def test_symmetric_input_gives_symmetric_output(rng):
    B = rng.standard_normal((40, 40)) * 0.05
    A = sp.csc_matrix(B @ B.T)
    f = scr_approximate(A, 1e-3, 1e-3)
    fam = build_phi_family(f, p=2)
    for ell in range(3):
        P = materialize(fam, ell)
        assert np.linalg.norm(P - P.T) <= 1e-12 * np.linalg.norm(P)


@given(st.integers(0, 10**6), st.integers(1, 8), st.integers(0, 4))
def test_apply_matches_materialize(seed, r, ell):
    X, T, Y = random_factors(50, r, seed=seed)
    fam = build_phi_family(ScrFactors.from_factors(X, T, Y), p=4)
    v = np.random.default_rng(seed).standard_normal(50)
    assert rel(apply(fam, ell, v), materialize(fam, ell) @ v) <= 1e-12
    assert np.array_equal(apply(fam, ell, np.zeros(50)), np.zeros(50))


def test_eta_sandwich_n300():
    A = synthetic_sparse(300, "geometric", 1.5, density=0.1, seed=2)
    fam = build_phi_family(scr_approximate(A, 1e-6, 1e-6), p=4)
    for ell in range(5):
        exact = np.linalg.norm(materialize(fam, ell), 2)
        _, lo, hi = norm_estimate_eta(fam, ell)
        assert lo - 1e-12 <= exact <= hi + 1e-12


def test_error_transfer_small():
    from philr.cond import cond_exact_small
    from philr.synthetic import decaying_spectrum, spectral_matrix
    A = spectral_matrix(decaying_spectrum(10, "geometric", 2.5), np.random.default_rng(1))
    f = scr_approximate(A, 1e-14, 1e-14, max_rank=4)
    eps = np.linalg.norm(A - f.to_dense())
    for ell in range(5):
        diff = np.linalg.norm(phi_dense(A, ell) - phi_dense(f.to_dense(), ell))
        assert diff <= 10 * cond_exact_small(A, ell).absolute * eps


def test_guards():
    fam = build_phi_family(rank_one(), p=1)
    with pytest.raises(DimensionMismatch):
        materialize(fam, 2)
    with pytest.raises(DimensionMismatch):
        apply(fam, 0, np.ones(4))
    with pytest.raises(DimensionMismatch):
        materialize(fam, 0, threshold=3)
    with pytest.raises(ValueError):
        build_phi_family(rank_one(), p=-1)
    rect = ScrFactors.from_factors(np.ones((4, 1)), np.eye(1), np.ones((3, 1)))
    with pytest.raises(DimensionMismatch):
        build_phi_family(rect)
