import dataclasses
import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, strategies as st

from philr.cond import (CondEstimate, KroneckerForm, cond_exact_small,
                        frechet_augmented, frechet_quadrature, kronecker_form,
                        kronecker_form_lowrank_series, norm_sandwich_check,
                        one_norm_probe, perturbation_identity_check,
                        phi_series_coeffs, sandwich_search, strategy_one,
                        strategy_two)
from philr.core import DimensionMismatch, SingularFactor
from philr.lowrank import build_phi_family
from philr.phikernel import phi_dense, phi_scalar
from philr.scr import ScrFactors
from philr.synthetic import random_factors
from philr.verify import fd_reduction

from conftest import rel

E_ = math.e


def rand(rng, n, norm=1.0):
    M = rng.standard_normal((n, n))
    return M * (norm / np.linalg.norm(M, 2))


def scalar_derivative(a, ell, h=1e-6):
    return (phi_scalar(a + h, ell) - phi_scalar(a - h, ell)) / (2 * h)


def test_frechet_examples(rng):
    A = rand(rng, 5)
    assert not np.any(frechet_augmented(A, np.zeros((5, 5)), 2))
    assert not np.any(frechet_quadrature(A, np.zeros((5, 5)), 2))
    E = rng.standard_normal((5, 5))
    assert rel(frechet_augmented(np.zeros((5, 5)), E, 0), E) <= 1e-15
    assert frechet_quadrature(np.zeros((1, 1)), np.ones((1, 1)), 1)[0, 0] == pytest.approx(0.5, rel=1e-14)
    assert rel(frechet_quadrature(A, E, 1), frechet_augmented(A, E, 1)) <= 1e-9


def test_quadrature_self_convergence(rng):
    A, E = rand(rng, 4, 2.0), rng.standard_normal((4, 4))
    q32 = frechet_quadrature(A, E, 2, nodes=32)
    q48 = frechet_quadrature(A, E, 2, nodes=48)
    assert np.linalg.norm(q32 - q48) <= 1e-12 * max(1.0, np.linalg.norm(q48))
    assert rel(q48, frechet_augmented(A, E, 2)) <= 1e-9
    with pytest.raises(ValueError):
        frechet_quadrature(A, E, 2, nodes=8)


@given(st.integers(1, 6), st.integers(0, 4), st.integers(0, 2**31))
def test_oracles_agree_and_are_linear(n, ell, seed):
    r = np.random.default_rng(seed)
    A = rand(r, n, r.uniform(0.1, 3.0))
    E1, E2 = r.standard_normal((n, n)), r.standard_normal((n, n))
    a, b = r.standard_normal(2)
    for L in (lambda E: frechet_augmented(A, E, ell),
              lambda E: frechet_quadrature(A, E, ell, nodes=48)):
        lhs = L(a * E1 + b * E2)
        assert np.linalg.norm(lhs - a * L(E1) - b * L(E2)) <= 1e-11 * max(1.0, np.linalg.norm(lhs))
    assert rel(frechet_quadrature(A, E1, ell, nodes=48), frechet_augmented(A, E1, ell)) <= 1e-9


def test_finite_difference_ratio(rng):
    for ell in range(5):
        A, E = rand(rng, 4, 1.5), rng.standard_normal((4, 4))
        assert 8 <= fd_reduction(A, E, ell, h=1e-4) <= 12


def test_perturbation_identity(rng):
    A = rand(rng, 4, 2.0)
    assert perturbation_identity_check(A, np.zeros((4, 4)), 1) <= 1e-14
    E = rng.standard_normal((4, 4))
    E *= 0.3 / np.linalg.norm(E, 2)
    for ell in range(5):
        bound = 1e-10 * (1 + np.linalg.norm(phi_dense(A, ell)))
        assert perturbation_identity_check(A, E, ell) <= bound


def test_kronecker_examples(rng):
    K = kronecker_form(np.zeros((3, 3)), 0)
    assert np.allclose(K.entries, np.eye(9), atol=1e-15)
    for ell in range(4):
        a = 0.7
        K1 = kronecker_form(np.array([[a]]), ell).entries[0, 0]
        assert K1 == pytest.approx(scalar_derivative(a, ell), rel=1e-8)
        if ell >= 1:
            closed = (phi_scalar(a, ell - 1) - ell * phi_scalar(a, ell)) / a
            assert K1 == pytest.approx(closed, rel=1e-12)
    A = rand(rng, 4, 2.0)
    K = kronecker_form(A, 2)
    for _ in range(10):
        E = rng.standard_normal((4, 4))
        assert rel(K.apply(E), frechet_augmented(A, E, 2)) <= 1e-11
    with pytest.raises(DimensionMismatch):
        kronecker_form(np.zeros((13, 13)), 0)


def test_kronecker_quadrature_assembly(rng):
    A = rand(rng, 6, 2.0)
    for ell in (0, 3):
        Ka = kronecker_form(A, ell, method="augmented").entries
        Kq = kronecker_form(A, ell, method="quadrature").entries
        assert rel(Kq, Ka) <= 1e-12


def test_series_form_examples(rng):
    X, T, Y = random_factors(4, 1, seed=3, density=0.5, target_norm=1.0)
    f = ScrFactors.from_factors(X, T, Y)
    Ks = kronecker_form_lowrank_series(f, [1.0, 1.0])
    assert np.allclose(Ks.entries, np.eye(16), atol=1e-15)
    Ks = kronecker_form_lowrank_series(f, phi_series_coeffs(0, 20))
    Kc = kronecker_form(f.to_dense(), 0)
    assert rel(Ks.entries, Kc.entries) <= 1e-10
    # only alpha_3 contributes to Psi_3 with a = [0, 0, 0, 1]: (W kron X) I (X kron W)^T
    Xd, Yd = X.toarray(), Y.toarray()
    W = Yd @ T.T
    Ks3 = kronecker_form_lowrank_series(f, [0, 0, 0, 1.0]).entries
    Z = T @ Yd.T @ Xd
    psi2 = np.kron(W, np.eye(4)) @ np.kron(Z.T, np.eye(4)) @ np.kron(Xd, np.eye(4)).T \
        + np.kron(np.eye(4), Xd) @ np.kron(np.eye(4), Z) @ np.kron(np.eye(4), W).T
    assert rel(Ks3 - psi2, np.kron(W, Xd) @ np.kron(Xd, W).T) <= 1e-13


@pytest.mark.parametrize("r", [1, 2, 3])
def test_series_form_matches_column_built(r):
    X, T, Y = random_factors(6, r, seed=r, density=0.5, target_norm=1.0)
    f = ScrFactors.from_factors(X, T, Y)
    for ell in range(5):
        Ks = kronecker_form_lowrank_series(f, phi_series_coeffs(ell, 20))
        assert rel(Ks.entries, kronecker_form(f.to_dense(), ell).entries) <= 1e-10


def test_remark_reindexing(rng):
    # psi_{i-1}(Z) = Phi_i(Z), and sum_i alpha_i psi_i(Z) is the Kronecker form of
    # g(z) = sum_{i>=2} alpha_i z^{i-1}; for exp coefficients g = phi_1 - 1
    Z = rand(rng, 3, 0.8)
    I = np.eye(3)

    def mp(M, k):
        return np.linalg.matrix_power(M, k)

    def psi(i):
        return sum(np.kron(mp(Z.T, i - j - 1), mp(Z, j - 1)) for j in range(1, i))

    def Phi(i):
        return sum(np.kron(mp(Z.T, i - j - 1), mp(Z, j - 2)) for j in range(2, i))

    for i in range(3, 9):
        assert rel(psi(i - 1), Phi(i)) <= 1e-14
    Kg = sum(psi(i) / math.factorial(i) for i in range(2, 25))
    assert rel(Kg, kronecker_form(Z, 1).entries) <= 1e-12
    assert I.shape == (3, 3)


def test_cond_exact_examples():
    c = cond_exact_small(np.zeros((3, 3)), 0)
    assert c.absolute == pytest.approx(1.0, rel=1e-14) and c.strategy == "exact"
    for ell in range(4):
        a = -0.4
        c = cond_exact_small(np.array([[a]]), ell)
        assert c.absolute == pytest.approx(abs(scalar_derivative(a, ell)), rel=1e-8)
        assert c.relative == pytest.approx(c.absolute * c.norm_A / c.phi_norm, rel=1e-12)
    with pytest.raises(DimensionMismatch):
        cond_exact_small(np.zeros((13, 13)), 0)
    assert cond_exact_small(np.eye(14) * 0.1, 0, max_n=14).absolute > 0


def test_sandwich_examples(rng):
    res = sandwich_search(np.zeros((3, 3)), 0, samples=20)
    assert res.k_norm == pytest.approx(1.0) and res.l_norm_lower == pytest.approx(1.0)
    assert res.lower_ok and res.upper_ok
    res = sandwich_search(np.array([[0.8]]), 2, samples=5)
    assert res.k_norm == pytest.approx(res.l_norm_lower, rel=1e-12)
    A = rand(rng, 5, 2.0)
    assert norm_sandwich_check(A, 1, samples=200) == (True, True)
    with pytest.raises(DimensionMismatch):
        sandwich_search(np.zeros((9, 9)), 0)


def test_one_norm_sandwich(rng):
    for ell in range(3):
        A = rand(rng, 4, 1.5)
        K = kronecker_form(A, ell).entries
        k_one, l_one = one_norm_probe(A, ell)
        assert k_one == pytest.approx(np.abs(K).sum(axis=0).max(), rel=1e-14)
        n = 4
        assert l_one / n <= k_one <= n * l_one
        sampled, _ = one_norm_probe(A, ell, columns=5, seed=1)
        assert sampled <= k_one


def rank_one_family(z=1.0, t=1.0, scale=1.0):
    e1 = sp.csc_matrix(np.eye(4)[:, :1] * scale)
    return build_phi_family(ScrFactors.from_factors(e1, np.array([[t]]), e1), p=4)


def test_strategy_one_examples():
    fam = rank_one_family()
    c = strategy_one(fam, 0, 1.0)
    assert c.absolute == pytest.approx((E_ - 1) ** 2, rel=1e-14)
    assert c.relative == pytest.approx(c.absolute * c.norm_A / c.phi_norm, rel=1e-12)
    X, _, Y = random_factors(20, 3, seed=0)
    zero = build_phi_family(ScrFactors.from_factors(X, np.zeros((3, 3)), Y), p=4)
    for ell in range(5):
        assert strategy_one(zero, ell, 1.0).absolute == 0.0
        assert strategy_two(zero, ell, 1.0).absolute == 0.0


def test_strategy_two_scalar():
    # X = Y = s e1, T = [t]: Z = t s^2, R1 = R2 = s
    s, t = 1.3, 0.6
    fam = rank_one_family(t=t, scale=s)
    z = t * s * s
    for ell in range(4):
        c = strategy_two(fam, ell, 1.0, tol=1e-12)
        expected = abs(s * scalar_derivative(z, ell + 1) * t * s)
        assert c.absolute == pytest.approx(expected, rel=1e-8)
        assert c.diagnostics["converged"]


def test_strategy_two_scales_with_t():
    X, T, Y = random_factors(30, 4, seed=7)
    fam = build_phi_family(ScrFactors.from_factors(X, T, Y), p=4)
    doubled = dataclasses.replace(fam, T=2 * fam.T)  # same Z, doubled outer factor
    for ell in range(3):
        a = strategy_two(fam, ell, 1.0).absolute
        b = strategy_two(doubled, ell, 1.0).absolute
        assert b == pytest.approx(2 * a, rel=1e-12)


def test_strategy_two_nonconvergence_flag():
    X, T, Y = random_factors(30, 5, seed=2)
    fam = build_phi_family(ScrFactors.from_factors(X, T, Y), p=4)
    c = strategy_two(fam, 0, 1.0, tol=1e-16, max_iter=2)
    assert not c.diagnostics["converged"] and c.absolute > 0
    from philr.core import ConvergenceFailure
    with pytest.raises(ConvergenceFailure):
        strategy_two(fam, 0, 1.0, tol=1e-16, max_iter=2, strict=True)


def test_strategies_order_of_magnitude_small():
    from philr.scr import scr_approximate
    from philr.synthetic import decaying_spectrum, spectral_matrix
    A = spectral_matrix(decaying_spectrum(4, "geometric", 2.0), np.random.default_rng(5), n=10)
    f = scr_approximate(A, 1e-10, 1e-10)
    fam = build_phi_family(f, p=4)
    nA = np.linalg.norm(f.to_dense(), 2)
    for ell in range(5):
        exact = cond_exact_small(f.to_dense(), ell).absolute
        for est in (strategy_one(fam, ell, nA), strategy_two(fam, ell, nA)):
            assert exact / 100 <= est.absolute <= exact * 100


def test_cond_estimate_validation():
    with pytest.raises(ValueError):
        CondEstimate(0, -1.0, 0.0, "exact", 1.0, 1.0)
    with pytest.raises(ValueError):
        CondEstimate(0, 1.0, 1.0, "guess", 1.0, 1.0)
    from philr.cond import _relative
    assert _relative(0.0, 1.0, 0.0) == 0.0
    with pytest.raises(SingularFactor):
        _relative(1.0, 1.0, 0.0)


def test_kronecker_form_object():
    K = KroneckerForm(2, np.eye(4))
    E = np.arange(4.0).reshape(2, 2)
    assert np.array_equal(K.apply(E), E)
    assert K.dimension == 4 and K.norm2() == pytest.approx(1.0)
