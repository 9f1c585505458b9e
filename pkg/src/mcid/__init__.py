"""MCID estimation: population-based thresholds by exact empirical risk
minimization, and personalized (covariate-dependent) thresholds by a kernel
machine trained under a capped ramp surrogate with difference-of-convex
iterations."""

__version__ = "0.1.0"

from .data_model import Dataset, LabeledSample, SplitPlan, apply_split, split, validate
from .errors import DataError, McidError, NumericError
from .kernels import (
    KernelMatrix,
    KernelSpec,
    cross_gram,
    gaussian_kernel,
    gram,
    kernel_eval,
    linear_kernel,
    resolve_bandwidth,
)
from .losses import (
    CAPPED_HINGE,
    HINGE,
    LOGISTIC,
    ZERO_ONE,
    LossKind,
    PopulationSpec,
    loss_subgradient,
    loss_value,
    population_risk,
    ramp,
    ramp_dc_parts,
    surrogate_minimizer,
)
from .model_selection import CvPlan, cross_validate, default_lambda_grid
from .personalized import (
    DcaConfig,
    PersonalizedModel,
    dca_fit,
    linear_coefficients,
    load_model,
    objective,
    save_model,
    solve_inner,
)
from .population import (
    ThresholdFit,
    fit_neyman_pearson,
    fit_population,
    fit_weighted,
    ideal_mcid,
)
from .simulate import (
    ReplicationReport,
    SimulationScenario,
    delta_sensitivity,
    generate,
    mce,
    run_replications,
)

__all__ = [name for name in dir() if not name.startswith("_")]
