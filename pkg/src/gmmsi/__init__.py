"""Classification and reconstruction of low-rank Gaussian mixture signals
from noisy linear features, with decoder side information.

The library answers two kinds of question about a jointly Gaussian
mixture pair (x1, x2) observed through noisy linear features. Given the
features of both signals, can the label (or the signal) behind x1 be
recovered as the noise vanishes, and how fast does the error fall? The
analytic layer answers from rank arithmetic alone; the experiment layer
verifies those answers by Monte Carlo simulation.
"""

from .model import (
    ClassPair,
    ConfigError,
    FactorModel,
    IndexSets,
    JointComponent,
    JointGmm,
    LabeledSampleSet,
    ModelError,
    component_from_factors,
    index_sets,
    load_model,
    sample_joint,
    sample_pair,
    save_model,
    sqrt_factor,
    stacked_factor,
)
from .geometry import (
    ComponentRanks,
    GeometryTable,
    PairRanks,
    geometry_summary,
    in_range,
    numerical_rank,
    projected_rank,
    projected_rank_numeric,
    range_basis,
)
from .sensing import Observation, SensingPair, assemble, draw_kernel, observe
from .classify import (
    BhattTable,
    DiversityReport,
    ProjectedMixture,
    Verdict,
    bhatt_exponent,
    bound_weight,
    classification_phase_verdict,
    diversity_order,
    exp_decay_verdict,
    log_class_likelihood,
    map_distributed,
    map_side_info,
    pairwise_diversity,
    perr_upper_bound,
)
from .reconstruct import (
    GaussianEstimator,
    GmmPosterior,
    PairFilter,
    ReconVerdict,
    classify_reconstruct,
    gaussian_cme,
    gaussian_estimator,
    gaussian_mmse,
    gmm_cme,
    mse_lower_bound,
    reconstruction_phase_verdict,
)
from .experiments import (
    ProbeSpec,
    RegionGrid,
    SweepConfig,
    SweepCurve,
    fit_slope,
    log_grid,
    region_map,
    run_sweep,
    wilson_interval,
)

__version__ = "0.1.0"

__all__ = [
    "ClassPair",
    "ConfigError",
    "FactorModel",
    "IndexSets",
    "JointComponent",
    "JointGmm",
    "LabeledSampleSet",
    "ModelError",
    "component_from_factors",
    "index_sets",
    "load_model",
    "sample_joint",
    "sample_pair",
    "save_model",
    "sqrt_factor",
    "stacked_factor",
    "ComponentRanks",
    "GeometryTable",
    "PairRanks",
    "geometry_summary",
    "in_range",
    "numerical_rank",
    "projected_rank",
    "projected_rank_numeric",
    "range_basis",
    "Observation",
    "SensingPair",
    "assemble",
    "draw_kernel",
    "observe",
    "BhattTable",
    "DiversityReport",
    "ProjectedMixture",
    "Verdict",
    "bhatt_exponent",
    "bound_weight",
    "classification_phase_verdict",
    "diversity_order",
    "exp_decay_verdict",
    "log_class_likelihood",
    "map_distributed",
    "map_side_info",
    "pairwise_diversity",
    "perr_upper_bound",
    "GaussianEstimator",
    "GmmPosterior",
    "PairFilter",
    "ReconVerdict",
    "classify_reconstruct",
    "gaussian_cme",
    "gaussian_estimator",
    "gaussian_mmse",
    "gmm_cme",
    "mse_lower_bound",
    "reconstruction_phase_verdict",
    "ProbeSpec",
    "RegionGrid",
    "SweepConfig",
    "SweepCurve",
    "fit_slope",
    "log_grid",
    "region_map",
    "run_sweep",
    "wilson_interval",
]
