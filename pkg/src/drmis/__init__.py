"""Distortion risk measures of expensive black-box models, estimated by
importance sampling with cheap regression surrogates.

The public surface: distortion specs and partitions, surrogate fitting and
cross-validated selection, exponential tilts with estimated normalizers,
optimal budget allocation, mixture sampling, the end-to-end pipeline, and a
replicated benchmark harness.
"""

from .allocation import (AllocationPlan, MixtureIS, allocate,
                         compare_variances, estimate_coeffs,
                         largest_remainder_counts)
from .bench import (ArmRow, ExperimentConfig, ExperimentReport, emit_tables,
                    read_summary, rep_seed, run_experiment)
from .distortion import (DistortionSpec, Partition, avar, drm_from_quantiles,
                         estimation_levels, eval_distortion, g_increments,
                         make_partition, power_tail, reference_drm, tabulated,
                         var_at)
from .errors import (AllocationError, CalibrationError, ConfigError,
                     DomainError, DrmisError, EstimationError, NumericError,
                     SamplingError, SelectionError, TrainingError)
from .estimator import (QuantileEstimate, clt_variance, crude_quantile,
                        interp_quantile, is_quantile, jensen_tail_bounds)
from .models import (AlmModel, AlmParams, BlackBoxModel, alm_model,
                     builtin_model, eval_count, reset_count)
from .pipeline import (DrmReport, PipelineConfig, crude_drm, estimate_drm,
                       estimate_drm_iterative)
from .sampler import (MhConfig, WeightedSample, WeightedSamples, draw_mixture,
                      estimate_norm_const, mh_sample)
from .surrogate import (HypothesisSpec, TrainingSet, auto_select, fit,
                        kfold_select, knn, linear, polynomial, svm_gaussian,
                        svm_linear, svm_polynomial)
from .tilt import (TiltComponent, calibrate_theta, estimate_psi,
                   likelihood_ratio, tilted_mean)
from .validate import run_validation

__version__ = "0.1.0"

__all__ = [
    "AllocationPlan", "MixtureIS", "allocate", "compare_variances",
    "estimate_coeffs", "largest_remainder_counts",
    "ArmRow", "ExperimentConfig", "ExperimentReport", "emit_tables",
    "read_summary", "rep_seed", "run_experiment",
    "DistortionSpec", "Partition", "avar", "drm_from_quantiles",
    "estimation_levels", "eval_distortion", "g_increments", "make_partition",
    "power_tail", "reference_drm", "tabulated", "var_at",
    "AllocationError", "CalibrationError", "ConfigError", "DomainError",
    "DrmisError", "EstimationError", "NumericError", "SamplingError",
    "SelectionError", "TrainingError",
    "QuantileEstimate", "clt_variance", "crude_quantile", "interp_quantile",
    "is_quantile", "jensen_tail_bounds",
    "AlmModel", "AlmParams", "BlackBoxModel", "alm_model", "builtin_model",
    "eval_count", "reset_count",
    "DrmReport", "PipelineConfig", "crude_drm", "estimate_drm",
    "estimate_drm_iterative",
    "MhConfig", "WeightedSample", "WeightedSamples", "draw_mixture",
    "estimate_norm_const", "mh_sample",
    "HypothesisSpec", "TrainingSet", "auto_select", "fit", "kfold_select",
    "knn", "linear", "polynomial", "svm_gaussian", "svm_linear",
    "svm_polynomial",
    "TiltComponent", "calibrate_theta", "estimate_psi", "likelihood_ratio",
    "tilted_mean",
    "run_validation",
    "__version__",
]
