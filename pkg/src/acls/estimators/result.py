from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ..loss import empirical_loss, residuals


class Solver(str, Enum):
    EXACT = "exact"
    RGD = "rgd"
    HYBRID = "hybrid"
    OLS = "ols"
    AHR = "ahr"
    LTS = "lts"


@dataclass(frozen=True)
class FitResult:
    beta: np.ndarray
    loss: float
    inlier_mask: np.ndarray
    iterations: int
    restarts_used: int
    solver: Solver
    elapsed_seconds: float
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "beta": [float(b) for b in self.beta],
            "loss": float(self.loss),
            "inlier_mask": [bool(m) for m in self.inlier_mask],
            "iterations": int(self.iterations),
            "restarts_used": int(self.restarts_used),
            "solver": Solver(self.solver).value,
            "elapsed_seconds": float(self.elapsed_seconds),
            "diagnostics": _jsonable(self.diagnostics),
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, Enum):
        return obj.value
    return obj


def cls_result(data, beta, cfg, solver, elapsed, iterations=0, restarts_used=0, **diagnostics):
    """FitResult whose loss and mask are the CLS quantities at ``beta``."""
    beta = np.asarray(beta, dtype=float)
    r = residuals(data, beta)
    return FitResult(
        beta=beta,
        loss=empirical_loss(data, beta, cfg),
        inlier_mask=np.abs(r) <= cfg.tau,
        iterations=iterations,
        restarts_used=restarts_used,
        solver=Solver(solver),
        elapsed_seconds=elapsed,
        diagnostics=diagnostics,
    )
