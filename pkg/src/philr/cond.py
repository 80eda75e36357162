"""Frechet derivatives of phi-functions and 2-norm condition numbers.

Two independent routes to ``L_{phi_l}(A, E)``:

* ``frechet_augmented`` reads the derivative off ``phi_l([[A, E], [0, A]])``;
* ``frechet_quadrature`` integrates ``exp((1-s)A) s^l E phi_l(sA)`` over
  ``[0, 1]`` with Gauss-Legendre nodes.

The exact reference condition number is ``||K||_2`` for the Kronecker form
``vec(L(A, E)) = K vec(E)``. Strategy one and strategy two estimate it for a
factored ``A~ = X T Y^T`` from r-by-r quantities only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import svds

from .core import (ConvergenceFailure, DimensionMismatch, SingularFactor,
                   as_dense, check_square, norm2_exact_small)
from .lowrank import LowRankPhiFamily, eta_matrix, norm_estimate_eta
from .phikernel import expm_dense, phi_dense
from .scr import ScrFactors

KRONECKER_MAX_N = 12
STRATEGIES = ("exact", "strategy-one", "strategy-two")


@dataclass(frozen=True)
class CondEstimate:
    """Absolute and relative condition numbers of ``phi_ell``.

    ``relative == absolute * norm_A / phi_norm``; ``phi_norm`` is the
    eta estimate for the strategies and the exact 2-norm in exact mode.
    """

    ell: int
    absolute: float
    relative: float
    strategy: str
    norm_A: float
    phi_norm: float
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.absolute < 0 or self.relative < 0:
            raise ValueError("condition numbers are nonnegative")


def _relative(absolute, norm_A, phi_norm):
    if phi_norm == 0:
        if absolute == 0:
            return 0.0
        raise SingularFactor("phi norm estimate is zero; relative condition undefined")
    return absolute * norm_A / phi_norm


@dataclass(frozen=True)
class KroneckerForm:
    n: int
    entries: np.ndarray

    @property
    def dimension(self):
        return self.n * self.n

    def apply(self, E):
        """``L(A, E)`` recovered from the Kronecker matrix."""
        vec = self.entries @ np.asarray(E).reshape(-1, order="F")
        return vec.reshape(self.n, self.n, order="F")

    def norm2(self):
        return _spectral_norm(self.entries)


def _spectral_norm(K):
    if K.size == 0:
        return 0.0
    if K.shape[0] <= 600:
        return float(np.linalg.svd(K, compute_uv=False)[0])
    v0 = np.ones(K.shape[1]) / math.sqrt(K.shape[1])
    s = svds(K, k=1, tol=1e-14, v0=v0, return_singular_vectors=False)
    return float(s[0])


def _pair(A, E):
    A, E = as_dense(A, "A"), as_dense(E, "E")
    check_square(A, "A")
    if E.shape != A.shape:
        raise DimensionMismatch(f"A is {A.shape} but E is {E.shape}")
    return A, E


def frechet_augmented(A, E, ell) -> np.ndarray:
    """``L_{phi_ell}(A, E)`` as the top-right block of ``phi_ell`` of ``[[A, E], [0, A]]``."""
    A, E = _pair(A, E)
    n = A.shape[0]
    B = np.zeros((2 * n, 2 * n))
    B[:n, :n] = A
    B[n:, n:] = A
    B[:n, n:] = E
    return phi_dense(B, ell)[:n, n:]


def gauss_legendre_01(nodes):
    """Gauss-Legendre nodes and weights mapped to ``[0, 1]``."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    return 0.5 * (x + 1.0), 0.5 * w


def _integrate(integrand, nodes):
    s, w = gauss_legendre_01(nodes)
    total = None
    for sk, wk in zip(s, w):
        term = wk * integrand(sk)
        total = term if total is None else total + term
    return total


def _integrate_adaptive(integrand, nodes, tol=1e-12, max_nodes=128):
    if nodes is not None:
        if nodes < 16:
            raise ValueError("quadrature needs at least 16 nodes")
        return _integrate(integrand, nodes), nodes
    nodes = 32
    prev = _integrate(integrand, nodes)
    while nodes < max_nodes:
        nodes *= 2
        cur = _integrate(integrand, nodes)
        if np.linalg.norm(cur - prev) <= tol * max(1.0, np.linalg.norm(cur)):
            return cur, nodes
        prev = cur
    return prev, nodes


def frechet_quadrature(A, E, ell, nodes=None) -> np.ndarray:
    """``L_{phi_ell}(A, E) = int_0^1 exp((1-s)A) s^ell E phi_ell(sA) ds``.

    With ``nodes=None`` the rule starts at 32 nodes and doubles until two
    successive results agree to 1e-12 (relative) or 128 nodes are used.
    """
    A, E = _pair(A, E)

    def integrand(s):
        return expm_dense((1 - s) * A) @ (s ** ell * E) @ phi_dense(s * A, ell)

    return _integrate_adaptive(integrand, nodes)[0]


def perturbation_identity_check(A, E, ell, nodes=48) -> float:
    """Residual of the exact identity

        phi_l(A+E) - phi_l(A) = int_0^1 exp((1-s)A) s^l E phi_l(s(A+E)) ds,

    in the Frobenius norm. It vanishes to quadrature accuracy for any ``E``.
    """
    A, E = _pair(A, E)
    lhs = phi_dense(A + E, ell) - phi_dense(A, ell)

    def integrand(s):
        return expm_dense((1 - s) * A) @ (s ** ell * E) @ phi_dense(s * (A + E), ell)

    rhs = _integrate(integrand, nodes)
    return float(np.linalg.norm(lhs - rhs))


def kronecker_form(A, ell, max_n=KRONECKER_MAX_N, method=None) -> KroneckerForm:
    """Kronecker matrix of ``L_{phi_ell}(A)``.

    ``augmented`` builds column ``j*n + i`` as ``vec(L(A, e_i e_j^T))``;
    ``quadrature`` sums ``w s^l (phi_l(sA)^T kron exp((1-s)A))`` over the
    Gauss-Legendre rule, which is far cheaper for larger ``n``. The default
    picks ``augmented`` up to ``n = 12``.
    """
    A = as_dense(A, "A")
    check_square(A, "A")
    n = A.shape[0]
    if n > max_n:
        raise DimensionMismatch(f"Kronecker form limited to n <= {max_n}, got {n}")
    if method is None:
        method = "augmented" if n <= KRONECKER_MAX_N else "quadrature"
    if method == "augmented":
        K = np.zeros((n * n, n * n))
        for j in range(n):
            for i in range(n):
                E = np.zeros((n, n))
                E[i, j] = 1.0
                K[:, j * n + i] = frechet_augmented(A, E, ell).reshape(-1, order="F")
        return KroneckerForm(n, K)
    if method != "quadrature":
        raise ValueError("method must be 'augmented' or 'quadrature'")

    prev = _kronecker_quadrature(A, ell, 32)
    for nodes in (64, 128):
        K = _kronecker_quadrature(A, ell, nodes)
        if np.linalg.norm(K - prev) <= 1e-12 * max(1.0, np.linalg.norm(K)):
            break
        prev = K
    return KroneckerForm(n, K)


def _kronecker_quadrature(A, ell, nodes):
    # sum_q w_q s_q^l kron(Q_q^T, P_q) as one (n^2 x q) @ (q x n^2) product
    n = A.shape[0]
    s, w = gauss_legendre_01(nodes)
    Qt = np.stack([wk * sk ** ell * phi_dense(sk * A, ell).T for sk, wk in zip(s, w)])
    P = np.stack([expm_dense((1 - sk) * A) for sk in s])
    K4 = (Qt.reshape(nodes, n * n).T @ P.reshape(nodes, n * n)).reshape(n, n, n, n)
    return K4.transpose(0, 2, 1, 3).reshape(n * n, n * n)


def phi_series_coeffs(ell, terms):
    """Power-series coefficients ``1/(i+ell)!`` of ``phi_ell``, ``i < terms``."""
    return np.array([1.0 / math.factorial(i + ell) for i in range(terms)])


def kronecker_form_lowrank_series(f: ScrFactors, coeffs, trunc=None,
                                  max_n=KRONECKER_MAX_N) -> KroneckerForm:
    """Kronecker form of ``f(X T Y^T)`` for ``f(z) = sum_i coeffs[i] z^i``.

    Assembled as ``Psi1 + Psi2 + Psi3`` with ``W = Y T^T`` and
    ``Z = T Y^T X``::

        Psi1 = a1 I kron I
        Psi2 = (W kron I)(sum_{i>=2} a_i (Z^T)^{i-2} kron I)(X kron I)^T
             + (I kron X)(sum_{i>=2} a_i I kron Z^{i-2})(I kron W)^T
        Psi3 = (W kron X)(sum_{i>=3} a_i sum_{j=2}^{i-1}
                          (Z^T)^{i-j-1} kron Z^{j-2})(X kron W)^T
    """
    coeffs = np.asarray(coeffs, dtype=float)
    if trunc is not None:
        coeffs = coeffs[:trunc]
    X, Y, T = f.X.toarray(), f.Y.toarray(), np.asarray(f.T, dtype=float)
    n, r = X.shape
    if n > max_n:
        raise DimensionMismatch(f"Kronecker form limited to n <= {max_n}, got {n}")
    if Y.shape[0] != n:
        raise DimensionMismatch("series Kronecker form needs a square approximation")
    a = np.zeros(max(len(coeffs), 2))
    a[:len(coeffs)] = coeffs
    W = Y @ T.T
    Z = T @ (Y.T @ X)
    In, Ir = np.eye(n), np.eye(r)

    Zp = [Ir]
    for _ in range(max(len(a) - 2, 0)):
        Zp.append(Zp[-1] @ Z)
    ZTp = [P.T for P in Zp]

    psi1 = a[1] * np.eye(n * n)

    left = sum((a[i] * np.kron(ZTp[i - 2], In) for i in range(2, len(a))),
               np.zeros((r * n, r * n)))
    right = sum((a[i] * np.kron(In, Zp[i - 2]) for i in range(2, len(a))),
                np.zeros((n * r, n * r)))
    psi2 = (np.kron(W, In) @ left @ np.kron(X, In).T
            + np.kron(In, X) @ right @ np.kron(In, W).T)

    inner = np.zeros((r * r, r * r))
    for i in range(3, len(a)):
        if a[i] == 0:
            continue
        for j in range(2, i):
            inner += a[i] * np.kron(ZTp[i - j - 1], Zp[j - 2])
    psi3 = np.kron(W, X) @ inner @ np.kron(X, W).T
    return KroneckerForm(n, psi1 + psi2 + psi3)


def cond_exact_small(A, ell, max_n=KRONECKER_MAX_N) -> CondEstimate:
    """Exact absolute and relative condition numbers from ``||K||_2``."""
    A = as_dense(A, "A")
    K = kronecker_form(A, ell, max_n=max_n)
    absolute = K.norm2()
    norm_A = norm2_exact_small(A)
    phi_norm = norm2_exact_small(phi_dense(A, ell))
    return CondEstimate(ell, absolute, _relative(absolute, norm_A, phi_norm),
                        "exact", norm_A, phi_norm,
                        {"kronecker_dimension": K.dimension})


def strategy_one(fam: LowRankPhiFamily, ell, norm_A) -> CondEstimate:
    """Closed-form r-by-r estimate

        ||R1 phi_1(Z) T R2^T . R1 phi_{l+1}(Z) T R2^T||_2,

    relative version divided by ``eta_l`` and multiplied by ``||A||_2``.
    """
    eta, _, _ = norm_estimate_eta(fam, ell)
    if fam.rank == 0:
        absolute = 0.0
    else:
        absolute = norm2_exact_small(eta_matrix(fam, 0) @ eta_matrix(fam, ell))
    return CondEstimate(ell, absolute, _relative(absolute, norm_A, eta),
                        "strategy-one", float(norm_A), eta, {"rank": fam.rank})


def strategy_two(fam: LowRankPhiFamily, ell, norm_A, tol=1e-3, max_iter=50,
                 seed=0, strict=False) -> CondEstimate:
    """Estimate ``||F -> R1 L_{phi_{l+1}}(Z, F) T R2^T||`` by power iteration.

    The map and its adjoint ``H -> L_{phi_{l+1}}(Z^T, R1^T H R2 T^T)`` are
    applied alternately; iteration stops when the norm estimate changes by
    less than ``tol`` (relative). An unconverged run is returned with
    ``diagnostics['converged'] = False`` unless ``strict``.
    """
    eta, _, _ = norm_estimate_eta(fam, ell)
    r = fam.rank
    diag = {"rank": r, "tol": tol, "max_iter": max_iter, "seed": seed,
            "iterations": 0, "converged": True}
    if r == 0 or not np.any(fam.T):
        return CondEstimate(ell, 0.0, _relative(0.0, norm_A, eta),
                            "strategy-two", float(norm_A), eta, diag)
    R1, R2, T, Z = fam.R1, fam.R2, fam.T, fam.Z
    left, right = R1, T @ R2.T

    def forward(F):
        return left @ frechet_augmented(Z, F, ell + 1) @ right

    def adjoint(H):
        return frechet_augmented(Z.T, left.T @ H @ right.T, ell + 1)

    F = np.random.default_rng(seed).standard_normal((r, r))
    F /= np.linalg.norm(F)
    est = 0.0
    converged = False
    for it in range(1, max_iter + 1):
        H = forward(F)
        new = float(np.linalg.norm(H))
        G = adjoint(H)
        gn = np.linalg.norm(G)
        diag["iterations"] = it
        if gn == 0 or abs(new - est) <= tol * new:
            est = max(est, new)
            converged = True
            break
        est = max(est, new)
        F = G / gn
    diag["converged"] = converged
    if not converged and strict:
        raise ConvergenceFailure(
            f"strategy two power iteration stalled after {max_iter} steps")
    return CondEstimate(ell, est, _relative(est, norm_A, eta), "strategy-two",
                        float(norm_A), eta, diag)


@dataclass(frozen=True)
class SandwichResult:
    lower_ok: bool
    upper_ok: bool
    k_norm: float
    l_norm_lower: float
    n: int


def _polar(G):
    U, _, Vt = np.linalg.svd(G)
    return U @ Vt


def sandwich_search(A, ell, samples=200, seed=0, refine=10) -> SandwichResult:
    """Compare ``||K||_2`` with a searched lower bound on ``||L||_2``.

    ``||L||_2 = max ||L(A, E)||_2 / ||E||_2`` is bounded from below by trying
    the top right singular vector of ``K`` (reshaped), ``samples`` Gaussian
    directions, and a few steps of the dual power method from the best of
    them (``E <- polar(L*(u v^T))`` with ``(u, v)`` the top singular pair of
    ``L(A, E)``).
    """
    A = as_dense(A, "A")
    n = A.shape[0]
    if n > 8:
        raise DimensionMismatch(f"sandwich check limited to n <= 8, got {n}")
    K = kronecker_form(A, ell)
    k_norm = K.norm2()
    Kt = KroneckerForm(n, K.entries.T)

    def ratio(E):
        return norm2_exact_small(K.apply(E)) / norm2_exact_small(E)

    _, _, Vt = np.linalg.svd(K.entries)
    candidates = [Vt[0].reshape(n, n, order="F")]
    rng = np.random.default_rng(seed)
    candidates += [rng.standard_normal((n, n)) for _ in range(samples)]
    best_E = max(candidates, key=ratio)
    best = ratio(best_E)
    E = best_E
    for _ in range(refine):
        Ysvd = np.linalg.svd(K.apply(E))
        G = Kt.apply(np.outer(Ysvd[0][:, 0], Ysvd[2][0]))
        if not np.any(G):
            break
        E = _polar(G)
        val = ratio(E)
        if val <= best * (1 + 1e-12):
            best = max(best, val)
            break
        best = val
    root = math.sqrt(n)
    # 1e-12 guards the n = 1 case where both sides agree up to roundoff
    lower_ok = best / root <= k_norm * (1 + 1e-12)
    upper_ok = k_norm <= root * best * 1.05
    return SandwichResult(bool(lower_ok), bool(upper_ok), k_norm, best, n)


def norm_sandwich_check(A, ell, samples=200, seed=0):
    """``(lower_ok, upper_ok)`` for ``||L||_2/sqrt(n) <= ||K||_2 <= sqrt(n)||L||_2``."""
    res = sandwich_search(A, ell, samples, seed)
    return res.lower_ok, res.upper_ok


def one_norm_probe(A, ell, columns=None, seed=0):
    """Test support: 1-norm quantities around the Kronecker form.

    Evaluates ``L(A, e_i e_j^T)`` for the sampled index pairs and returns
    ``(k_one_lower, l_one_lower)``: the largest column 1-norm of ``K`` seen
    and the largest ``||L(A, e_i e_j^T)||_1`` (each probe has unit 1-norm).
    With every column probed the first value is ``||K||_1`` exactly, and
    ``||L||_1/n <= ||K||_1 <= n ||L||_1`` can be checked against the second.
    """
    A = as_dense(A, "A")
    check_square(A, "A")
    n = A.shape[0]
    pairs = [(i, j) for j in range(n) for i in range(n)]
    if columns is not None and columns < len(pairs):
        pick = np.random.default_rng(seed).choice(len(pairs), columns, replace=False)
        pairs = [pairs[k] for k in sorted(pick)]
    k_one = l_one = 0.0
    for i, j in pairs:
        E = np.zeros((n, n))
        E[i, j] = 1.0
        L = frechet_augmented(A, E, ell)
        k_one = max(k_one, float(np.abs(L).sum()))
        l_one = max(l_one, float(np.abs(L).sum(axis=0).max()))
    return k_one, l_one
