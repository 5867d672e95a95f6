from .baselines import fit_ahr, fit_lts, fit_ols, huber_gradient, huber_objective, trimmed_objective
from .exact import ExactConfig, ExactStrategy, fit_exact
from .hybrid import fit_hybrid
from .result import FitResult, Solver
from .rgd import RgdConfig, fit_rgd, fit_rgd_single, uniform_ball

__all__ = [
    "ExactConfig",
    "ExactStrategy",
    "FitResult",
    "RgdConfig",
    "Solver",
    "fit_ahr",
    "fit_exact",
    "fit_hybrid",
    "fit_lts",
    "fit_ols",
    "fit_rgd",
    "fit_rgd_single",
    "huber_gradient",
    "huber_objective",
    "trimmed_objective",
    "uniform_ball",
]
