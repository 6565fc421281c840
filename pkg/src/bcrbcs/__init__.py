"""Bayesian Cramer-Rao bounds for noisy non-blind and blind compressed sensing.

Closed-form bounds live in :mod:`bcrbcs.bounds`, independent numerical checks
in :mod:`bcrbcs.oracles`, recovery algorithms in :mod:`bcrbcs.recovery` and
the Monte Carlo benchmark in :mod:`bcrbcs.bench`.
"""

__version__ = "0.1.0"

from .bounds import (  # noqa: E402
    BoundReport, FisherDecomposition, bg_prior_info, blind_a_coeffs, blind_bcrb, c1, c2, erfcx,
    gaussian_prior_info, nonblind_bcrb, nonblind_data_info,
)
from .model import BgPrior, CsModel, Ensemble, EnsembleSpec, measure, sample_matrix, sample_signal  # noqa: E402
from .recovery import RecoveryOutput, SolverConfig, bp_l1, least_squares, omp, register_solver, sl0  # noqa: E402
