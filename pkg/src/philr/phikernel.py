"""Dense evaluation of the phi-function family for small matrices.

``phi_l(z) = sum_{k>=0} z^k / (k+l)!``, with ``phi_0 = exp``. The whole family
``phi_0(M), ..., phi_p(M)`` is read off a single exponential of a block
matrix::

    exp([[M, I, 0, ...],        [[e^M, phi_1(M), phi_2(M), ...],
         [0, 0, I, ...],   =     [ 0 ,   ...                 ]]
         [0, 0, 0, ...]])

The truncated Taylor series in ``phi_taylor_oracle`` is an independent
witness used by the tests; it shares no code with the block route.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (DENSE_THRESHOLD, DimensionMismatch, as_dense,
                   check_square)

# Degree-m diagonal Pade coefficients and the 1-norm thresholds below which
# the degree-m approximant meets unit roundoff in backward error.
_PADE = {
    3: (120., 60., 12., 1.),
    5: (30240., 15120., 3360., 420., 30., 1.),
    7: (17297280., 8648640., 1995840., 277200., 25200., 1512., 56., 1.),
    9: (17643225600., 8821612800., 2075673600., 302702400., 30270240.,
        2162160., 110880., 3960., 90., 1.),
    13: (64764752532480000., 32382376266240000., 7771770303897600.,
         1187353796428800., 129060195264000., 10559470521600.,
         670442572800., 33522128640., 1323241920., 40840800., 960960.,
         16380., 182., 1.),
}
_THETA = {
    3: 1.495585217958292e-2,
    5: 2.539398330063230e-1,
    7: 9.504178996162932e-1,
    9: 2.097847961257068e0,
    13: 5.371920351148152e0,
}


def _pade_low(A, m):
    b = _PADE[m]
    n = A.shape[0]
    ident = np.eye(n)
    A2 = A @ A
    U = b[1] * ident
    V = b[0] * ident
    P = ident
    for k in range(1, m // 2 + 1):
        P = P @ A2
        U = U + b[2 * k + 1] * P
        V = V + b[2 * k] * P
    return A @ U, V


def _pade13(A):
    b = _PADE[13]
    ident = np.eye(A.shape[0])
    A2 = A @ A
    A4 = A2 @ A2
    A6 = A2 @ A4
    U = A @ (A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2)
             + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * ident)
    V = (A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2)
         + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * ident)
    return U, V


def expm_dense(M) -> np.ndarray:
    """Matrix exponential by scaling and squaring with diagonal Pade.

    Picks the lowest degree in (3, 5, 7, 9, 13) whose threshold covers
    ``||M||_1``; otherwise scales by ``2**-s`` so the degree-13 approximant
    applies, then squares ``s`` times.
    """
    M = as_dense(M)
    check_square(M)
    n = M.shape[0]
    if n == 0:
        return np.zeros((0, 0))
    norm1 = np.linalg.norm(M, 1)
    for m in (3, 5, 7, 9):
        if norm1 <= _THETA[m]:
            U, V = _pade_low(M, m)
            return np.linalg.solve(V - U, V + U)
    s = max(0, int(math.ceil(math.log2(norm1 / _THETA[13]))))
    U, V = _pade13(M / 2.0 ** s)
    X = np.linalg.solve(V - U, V + U)
    for _ in range(s):
        X = X @ X
    return X


@dataclass(frozen=True)
class PhiFamilyDense:
    """``matrices[l]`` holds ``phi_l(M)`` for ``l = 0..p``."""

    p: int
    matrices: tuple

    def __getitem__(self, ell):
        return self.matrices[ell]

    def __len__(self):
        return len(self.matrices)

    def recurrence_residual(self, M, ell) -> float:
        """Relative residual of ``phi_l = M phi_{l+1} + I/l!``."""
        lhs = self.matrices[ell]
        rhs = M @ self.matrices[ell + 1] + np.eye(M.shape[0]) / math.factorial(ell)
        return float(np.linalg.norm(lhs - rhs) / (1.0 + np.linalg.norm(lhs)))


def augmented_phi_matrix(M, p):
    """Block matrix whose exponential carries ``phi_1(M) .. phi_p(M)``."""
    r = M.shape[0]
    B = np.zeros((r * (p + 1), r * (p + 1)))
    B[:r, :r] = M
    ident = np.eye(r)
    for k in range(p):
        B[k * r:(k + 1) * r, (k + 1) * r:(k + 2) * r] = ident
    return B


def phi_family_dense(M, p, threshold=DENSE_THRESHOLD) -> PhiFamilyDense:
    """Evaluate ``phi_0(M), ..., phi_p(M)`` for a small square ``M``.

    One exponential of the ``r(p+1)``-square block matrix built by
    ``augmented_phi_matrix`` yields ``phi_1..phi_p`` in its first block row;
    ``phi_0`` comes from ``expm_dense(M)`` directly.
    """
    M = as_dense(M)
    check_square(M)
    if p < 0:
        raise ValueError("p must be nonnegative")
    r = M.shape[0]
    if r * (p + 1) > threshold:
        raise DimensionMismatch(
            f"augmented size {r * (p + 1)} exceeds dense threshold {threshold}")
    phi0 = expm_dense(M)
    if p == 0 or r == 0:
        mats = [phi0] + [np.eye(r) / math.factorial(k) for k in range(1, p + 1)]
        return PhiFamilyDense(p, tuple(mats))
    top = expm_dense(augmented_phi_matrix(M, p))[:r]
    mats = [phi0] + [top[:, k * r:(k + 1) * r].copy() for k in range(1, p + 1)]
    return PhiFamilyDense(p, tuple(mats))


def phi_dense(M, ell) -> np.ndarray:
    """Single ``phi_ell(M)``; convenience wrapper over ``phi_family_dense``."""
    return phi_family_dense(M, ell)[ell]


def phi_scalar(z, ell):
    """``phi_ell`` at a real scalar, via the same dense kernel."""
    return float(phi_dense(np.array([[float(z)]]), ell)[0, 0])


def taylor_tail_bound(norm, ell, terms):
    """Upper bound on the neglected tail ``sum_{k>terms} norm^k/(k+ell)!``.

    Geometric majorant of the first neglected term; ``inf`` when the ratio
    test does not apply.
    """
    ratio = norm / (terms + ell + 2)
    if ratio >= 1:
        return math.inf
    first = math.exp((terms + 1) * math.log(norm) - math.lgamma(terms + ell + 2)) \
        if norm > 0 else 0.0
    return first / (1.0 - ratio)


def _check_oracle_input(M, terms):
    M = as_dense(M)
    check_square(M)
    if terms < 30:
        raise ValueError("the Taylor oracle needs terms >= 30")
    nrm = np.linalg.norm(M)
    if nrm > 20 and np.linalg.norm(M, 2) > 20:
        raise ValueError("Taylor oracle limited to ||M||_2 <= 20")
    return M


def _kahan_series(M, ells, terms):
    """Compensated partial sums of ``sum_k M^k/(k+l)!`` for every ``l``.

    The powers ``M^k`` are shared across the requested orders. Summation
    stops early once every order's term is below roundoff of its sum and
    ``k`` has passed the norm (so terms are strictly decreasing).
    """
    n = M.shape[0]
    nrm = np.linalg.norm(M)
    sums = {ell: np.zeros((n, n)) for ell in ells}
    comp = {ell: np.zeros((n, n)) for ell in ells}
    power = np.eye(n)
    for k in range(terms + 1):
        if k:
            power = power @ M
        pnorm = np.linalg.norm(power)
        done = k > nrm
        for ell in ells:
            term = power / math.factorial(k + ell)
            y = term - comp[ell]
            t = sums[ell] + y
            comp[ell] = (t - sums[ell]) - y
            sums[ell] = t
            if pnorm / math.factorial(k + ell) > 1e-18 * np.linalg.norm(t):
                done = False
        if done:
            break
    return sums


def phi_taylor_oracle(M, ell, terms=60) -> np.ndarray:
    """Truncated Taylor series ``sum_{k=l}^{l+terms} M^(k-l)/k!``.

    Uses Kahan-compensated summation. The truncation error is at most
    ``taylor_tail_bound(||M||, ell, terms)``.
    """
    M = _check_oracle_input(M, terms)
    return _kahan_series(M, (ell,), terms)[ell]


def phi_taylor_family(M, p, terms=60):
    """``[phi_0(M), ..., phi_p(M)]`` from one shared sequence of powers."""
    M = _check_oracle_input(M, terms)
    sums = _kahan_series(M, tuple(range(p + 1)), terms)
    return [sums[ell] for ell in range(p + 1)]
