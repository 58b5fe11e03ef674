"""Chaos expansions, second quantization and Wick products for the Gaussian
and Poisson reference measures, with the two mollified limit experiments."""

from .chaos import (
    ChaosExpansion,
    TruncationError,
    YoungConfig,
    lp_norm,
    l2_norm,
    project,
    second_quantization,
    wick_power,
    wick_product,
    young_check,
)
from .experiment import ConvergenceRecord, SequenceSchedule, Tolerances
from .gaussian_llt import canonical_density, run_llt_experiment, validate_gaussian_density
from .orthobasis import ReferenceMeasure, gauss_hermite_rule
from .poisson_lsn import FinitePmf, canonical_pmf, density_from_pmf, run_lsn_experiment, thin

__all__ = [
    "ChaosExpansion", "ConvergenceRecord", "FinitePmf", "ReferenceMeasure", "SequenceSchedule",
    "Tolerances", "TruncationError", "YoungConfig", "canonical_density", "canonical_pmf",
    "density_from_pmf", "gauss_hermite_rule", "l2_norm", "lp_norm", "project", "run_llt_experiment",
    "run_lsn_experiment", "second_quantization", "thin", "validate_gaussian_density", "wick_power",
    "wick_product", "young_check",
]
