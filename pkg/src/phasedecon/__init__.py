"""Phase-function density deconvolution for heteroscedastic measurement error."""

from .model import (
    ErrorSpec,
    ObservationSet,
    ReplicateDataset,
    TrueDensitySpec,
    sample_dataset,
    standard_error_cf,
)
from .ecf import PhaseEstimate, TGrid, find_t_star, weighted_ecf, wepf, wepf_asymptotic_variance
from .weights import (
    InsufficientReplicatesError,
    VarianceComponents,
    clamped_sigma_x_sq,
    collapse_replicates,
    equal_weights,
    estimate_variance_components,
    mean_optimal_weights,
)
from .metrics import ise, mise_ratio_with_jackknife, phase_ise, quartile_summary

__version__ = "0.1.0"
