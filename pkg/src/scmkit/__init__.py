"""Synthetic control estimation with placebo-based permutation inference."""

__version__ = "0.1.0"

from .errors import SCMError
from .estimator import SCFit, estimate, fit, rmspe, single_comparator_fit
from .inference import (
    InferenceReport,
    filter_by_mspe,
    in_space_placebos,
    permutation_p_value,
    rmspe_ratio_table,
    run_inference,
)
from .panel import (
    PanelDataset,
    StudySpec,
    ValidatedStudy,
    design_matrices,
    dumps_long_csv,
    load_long_csv,
    validate,
    write_long_csv,
)
from .robustness import in_time_placebo, leave_one_out
from .solver import VWeights, WeightSolution, brute_force_weights, optimize_v_nested, solve_weights

__all__ = [
    "SCMError",
    "PanelDataset",
    "StudySpec",
    "ValidatedStudy",
    "load_long_csv",
    "dumps_long_csv",
    "write_long_csv",
    "validate",
    "design_matrices",
    "VWeights",
    "WeightSolution",
    "solve_weights",
    "brute_force_weights",
    "optimize_v_nested",
    "SCFit",
    "fit",
    "estimate",
    "rmspe",
    "single_comparator_fit",
    "InferenceReport",
    "in_space_placebos",
    "filter_by_mspe",
    "rmspe_ratio_table",
    "permutation_p_value",
    "run_inference",
    "in_time_placebo",
    "leave_one_out",
]
