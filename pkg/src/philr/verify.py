"""Seeded property suites behind ``philr verify``.

Every check records a measured quantity, the bound it must respect and the
slack ``bound - measured``; a suite passes iff every slack is nonnegative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cond import (cond_exact_small, frechet_augmented, frechet_quadrature,
                   kronecker_form, kronecker_form_lowrank_series,
                   perturbation_identity_check, phi_series_coeffs,
                   sandwich_search, strategy_one, strategy_two)
from .core import norm2_exact_small
from .lowrank import apply, build_phi_family, materialize, norm_estimate_eta
from .phikernel import phi_dense, phi_family_dense, phi_taylor_oracle
from .scr import ScrFactors, scr_approximate, scr_residual
from .synthetic import (decaying_spectrum, random_factors, spectral_matrix,
                        synthetic_sparse)

SUITES = ("identity", "frechet", "sandwich", "bounds")


@dataclass(frozen=True)
class Check:
    suite: str
    name: str
    measured: float
    bound: float

    @property
    def slack(self):
        return self.bound - self.measured

    @property
    def passed(self):
        return bool(np.isfinite(self.measured) and self.measured <= self.bound)

    def as_dict(self):
        return {"suite": self.suite, "name": self.name, "measured": self.measured,
                "bound": self.bound, "slack": self.slack, "passed": self.passed}


def rel_fro(A, B):
    den = np.linalg.norm(B)
    return float(np.linalg.norm(A - B) / (den if den else 1.0))


def random_dense(rng, n, norm):
    M = rng.standard_normal((n, n))
    return M * (norm / np.linalg.norm(M, 2))


def fd_reduction(A, E, ell, h=1e-4):
    """Ratio of forward-difference errors at ``h`` and ``h/10``.

    The error of ``(phi(A+hE) - phi(A))/h`` against the Frechet derivative is
    first order in ``h``, so the ratio should sit near 10.
    """
    L = frechet_augmented(A, E, ell)
    base = phi_dense(A, ell)

    def err(step):
        return np.linalg.norm((phi_dense(A + step * E, ell) - base) / step - L)

    return float(err(h) / err(h / 10))


def suite_identity(seed):
    out = []
    rng = np.random.default_rng(seed)
    for k, r in enumerate((3, 10)):
        X, T, Y = random_factors(150, r, seed=seed * 10 + k)
        f = ScrFactors.from_factors(X, T, Y)
        fam = build_phi_family(f, p=4)
        At = f.to_dense()
        v = rng.standard_normal(150)
        for ell in range(5):
            dense = materialize(fam, ell)
            out.append(Check("identity", f"r={r} ell={ell} materialize vs Taylor",
                             rel_fro(dense, phi_taylor_oracle(At, ell)), 1e-12))
            out.append(Check("identity", f"r={r} ell={ell} apply vs materialize",
                             rel_fro(apply(fam, ell, v), dense @ v), 1e-12))
            _, lo, hi = norm_estimate_eta(fam, ell)
            exact = norm2_exact_small(dense)
            out.append(Check("identity", f"r={r} ell={ell} eta lower",
                             lo - exact, 1e-12 * max(1.0, exact)))
            out.append(Check("identity", f"r={r} ell={ell} eta upper",
                             exact - hi, 1e-12 * max(1.0, exact)))
    for k in range(5):
        n = int(rng.integers(2, 20))
        M = random_dense(rng, n, rng.uniform(0.1, 10.0))
        fam = phi_family_dense(M, 5)
        for ell in range(5):
            out.append(Check("identity", f"recurrence M{k} n={n} ell={ell}",
                             fam.recurrence_residual(M, ell), 1e-10))
    return out


def suite_frechet(seed):
    out = []
    rng = np.random.default_rng(seed + 1)
    for k in range(4):
        n = int(rng.integers(2, 7))
        A = random_dense(rng, n, rng.uniform(0.5, 3.0))
        E = rng.standard_normal((n, n))
        for ell in range(5):
            out.append(Check("frechet", f"A{k} n={n} ell={ell} block vs quadrature",
                             rel_fro(frechet_quadrature(A, E, ell, nodes=48),
                                     frechet_augmented(A, E, ell)), 1e-9))
        ell = k % 5
        ratio = fd_reduction(A, E, ell)
        out.append(Check("frechet", f"A{k} ell={ell} fd ratio >= 8", 8.0 - ratio, 0.0))
        out.append(Check("frechet", f"A{k} ell={ell} fd ratio <= 12", ratio, 12.0))
        Ep = 0.1 * E / np.linalg.norm(E)
        out.append(Check("frechet", f"A{k} ell={ell} perturbation identity",
                         perturbation_identity_check(A, Ep, ell), 1e-10))
    for k in range(2):
        n, r = 5, 2 + k
        X, T, Y = random_factors(n, r, seed=seed * 7 + k, density=0.5, target_norm=1.0)
        f = ScrFactors.from_factors(X, T, Y)
        At = f.to_dense()
        for ell in range(3):
            Ks = kronecker_form_lowrank_series(f, phi_series_coeffs(ell, 20))
            Kc = kronecker_form(At, ell)
            out.append(Check("frechet", f"series K r={r} ell={ell}",
                             rel_fro(Ks.entries, Kc.entries), 1e-10))
    return out


def suite_sandwich(seed):
    out = []
    rng = np.random.default_rng(seed + 2)
    for k in range(4):
        n = int(rng.integers(2, 7))
        A = random_dense(rng, n, rng.uniform(0.5, 3.0))
        ell = k % 5
        res = sandwich_search(A, ell, samples=50, seed=seed + k)
        root = math.sqrt(n)
        out.append(Check("sandwich", f"A{k} n={n} ell={ell} lower",
                         res.l_norm_lower / root, res.k_norm * (1 + 1e-12)))
        out.append(Check("sandwich", f"A{k} n={n} ell={ell} upper",
                         res.k_norm, root * res.l_norm_lower * 1.05))
    return out


def suite_bounds(seed):
    out = []
    for k, (kind, rate) in enumerate((("geometric", 2.0), ("algebraic", 2.0))):
        A = synthetic_sparse(120, kind, rate, density=0.3, seed=seed + k)
        f = scr_approximate(A, 1e-4, 1e-4)
        fro = float(np.linalg.norm(A.toarray()))
        out.append(Check("bounds", f"{kind} scr residual",
                         scr_residual(A, f), f.eps_bound + 1e-10 * fro))
    rng = np.random.default_rng(seed + 3)
    for k in range(2):
        A = spectral_matrix(decaying_spectrum(12, "geometric", 3.0), rng)
        f = scr_approximate(A, 1e-14, 1e-14, max_rank=4 + k)
        eps = float(np.linalg.norm(A - f.to_dense()))
        At = f.to_dense()
        fam = build_phi_family(f, p=4)
        nA = norm2_exact_small(At)
        for ell in range(5):
            exact = cond_exact_small(A, ell)
            diff = float(np.linalg.norm(phi_dense(A, ell) - phi_dense(At, ell)))
            out.append(Check("bounds", f"A{k} ell={ell} error transfer",
                             diff, 10 * exact.absolute * eps))
            ref = cond_exact_small(At, ell).absolute
            for est in (strategy_one(fam, ell, nA), strategy_two(fam, ell, nA)):
                ratio = est.absolute / ref
                out.append(Check("bounds", f"A{k} ell={ell} {est.strategy} log10 ratio",
                                 abs(math.log10(ratio)), 2.0))
    return out


_RUNNERS = {"identity": suite_identity, "frechet": suite_frechet,
            "sandwich": suite_sandwich, "bounds": suite_bounds}


def run_suite(name, seed=0):
    """Run one suite (or ``all``); returns the list of ``Check`` records."""
    names = SUITES if name == "all" else (name,)
    for nm in names:
        if nm not in _RUNNERS:
            raise ValueError(f"unknown suite {nm!r}; choose from {SUITES + ('all',)}")
    return [c for nm in names for c in _RUNNERS[nm](seed)]
