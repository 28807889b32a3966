"""Clustering of attributed networks observed through respondent-driven
sampling: inclusion-probability estimation, inverse-probability-weighted
variational EM, evaluation metrics, and a simulation-study harness.
"""

from .netcore import (
    SEED,
    SIGMA_FLOOR,
    TAU_FLOOR,
    PHI_MIN,
    PHI_MAX,
    DegreeLookupError,
    FitCollapseError,
    InclusionProbs,
    ModelParams,
    NumericalDomainError,
    OracleSizeError,
    ParseError,
    Population,
    RdsClusterError,
    RdsSample,
    Responsibilities,
    UndefinedMetricError,
    expand_probs,
)
from .synth import SynthConfig, case_config, generate_population
from .rds import RdsConfig, rds_sample
from .probs import ProbsConfig, estimate_probs, estimate_node_probs, \
    estimate_pair_probs, estimate_edge_probs
from .mixfit import FitConfig, FitResult, fit, objective_unweighted, \
    objective_weighted, phi_score, update_params, update_phi, update_tau
from .evalmetrics import SweepReport, WeightedNmiResult, alpha_sweep, \
    modularity, nmi, weighted_modularity, weighted_nmi
from .study import ModelSpec, StudyConfig, StudyResult, run_replication, \
    run_study

__all__ = [
    "SEED", "SIGMA_FLOOR", "TAU_FLOOR", "PHI_MIN", "PHI_MAX",
    "RdsClusterError", "DegreeLookupError", "UndefinedMetricError",
    "NumericalDomainError", "FitCollapseError", "OracleSizeError",
    "ParseError",
    "Population", "RdsSample", "InclusionProbs", "ModelParams",
    "Responsibilities", "expand_probs",
    "SynthConfig", "case_config", "generate_population",
    "RdsConfig", "rds_sample",
    "ProbsConfig", "estimate_probs", "estimate_node_probs",
    "estimate_pair_probs", "estimate_edge_probs",
    "FitConfig", "FitResult", "fit", "objective_unweighted",
    "objective_weighted", "phi_score", "update_params", "update_phi",
    "update_tau",
    "SweepReport", "WeightedNmiResult", "alpha_sweep", "modularity", "nmi",
    "weighted_modularity", "weighted_nmi",
    "ModelSpec", "StudyConfig", "StudyResult", "run_replication",
    "run_study",
]

__version__ = "0.1.0"
