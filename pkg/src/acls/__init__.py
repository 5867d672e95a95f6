"""Adaptive capped least squares: robust regression, robust subspaces and blind inpainting."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    AclsError,
    DegenerateDesignError,
    DegenerateMaskError,
    DegenerateScaleError,
    DivergenceError,
    InstanceTooLargeError,
    InsufficientInliersError,
    InvalidArgumentError,
    SingularSystemError,
)
from .estimators import (  # noqa: E402
    ExactConfig,
    ExactStrategy,
    FitResult,
    RgdConfig,
    Solver,
    fit_ahr,
    fit_exact,
    fit_hybrid,
    fit_lts,
    fit_ols,
    fit_rgd,
)
from .inference import InferenceReport, mape, mse, robust_inference  # noqa: E402
from .loss import (  # noqa: E402
    Dataset,
    LossConfig,
    TauRule,
    cls_loss,
    cls_score,
    empirical_gradient,
    empirical_loss,
    select_tau,
)
from .numerics import inverse_spd, solve_least_squares, thin_svd  # noqa: E402
