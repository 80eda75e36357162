"""Phi-functions of sparse low-rank matrices and their condition numbers."""

__version__ = "0.1.0"

from .core import (ComputationError, ConvergenceFailure, DimensionMismatch,
                   IOFailure, NonFiniteInput, RankExceeded, SingularFactor,
                   norm2_estimate, norm2_exact_small)
from .scr import ScrFactors, quasi_gram_schmidt, scr_approximate, scr_residual
from .phikernel import (expm_dense, phi_dense, phi_family_dense,
                        phi_taylor_oracle)
from .lowrank import (LowRankPhiFamily, apply, build_phi_family, materialize,
                      norm_estimate_eta)
from .cond import (CondEstimate, cond_exact_small, frechet_augmented,
                   frechet_quadrature, kronecker_form, strategy_one,
                   strategy_two)
from .eda import LabeledData, exp_scatter, scatter_factors

__all__ = [
    "__version__", "ComputationError", "ConvergenceFailure", "DimensionMismatch",
    "IOFailure", "NonFiniteInput", "RankExceeded", "SingularFactor",
    "norm2_estimate", "norm2_exact_small", "ScrFactors", "quasi_gram_schmidt",
    "scr_approximate", "scr_residual", "expm_dense", "phi_dense",
    "phi_family_dense", "phi_taylor_oracle", "LowRankPhiFamily", "apply",
    "build_phi_family", "materialize", "norm_estimate_eta", "CondEstimate",
    "cond_exact_small", "frechet_augmented", "frechet_quadrature",
    "kronecker_form", "strategy_one", "strategy_two", "LabeledData",
    "exp_scatter", "scatter_factors",
]
