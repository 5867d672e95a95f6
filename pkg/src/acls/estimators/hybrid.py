import math
import time

import numpy as np

from ..errors import DegenerateDesignError, InstanceTooLargeError, InvalidArgumentError
from ..loss import empirical_loss
from .exact import ExactConfig, fit_exact
from .result import Solver, cls_result
from .rgd import RgdConfig, descend


def fit_hybrid(data, cfg, rcfg=None, subsample_fraction=0.3, subsample_runs=10, xcfg=None):
    """Exact fits on random row subsamples, then descent from the best one.

    Each of ``subsample_runs`` subsamples has ``ceil(fraction * n)`` rows.
    The subsample estimate with the smallest full-data CLS loss seeds a
    single gradient descent on all rows.
    """
    rcfg = rcfg or RgdConfig()
    xcfg = xcfg or ExactConfig()
    if not 0 < subsample_fraction <= 1:
        raise InvalidArgumentError("subsample_fraction must lie in (0, 1]")
    if subsample_runs < 1:
        raise InvalidArgumentError("subsample_runs must be positive")
    t0 = time.perf_counter()
    n = data.n
    size = math.ceil(subsample_fraction * n)
    if size > xcfg.max_n:
        raise InstanceTooLargeError(
            f"instance-too-large: subsample of {size} rows exceeds max_n={xcfg.max_n}"
        )
    rng = np.random.default_rng(rcfg.seed)
    best_beta, best_loss, skipped = None, math.inf, 0
    for _ in range(subsample_runs):
        rows = np.sort(rng.choice(n, size=size, replace=False))
        try:
            sub = fit_exact(data.subset(rows), cfg, xcfg)
        except DegenerateDesignError:
            skipped += 1
            continue
        val = empirical_loss(data, sub.beta, cfg)
        if val < best_loss:
            best_beta, best_loss = sub.beta, val
    if best_beta is None:
        raise DegenerateDesignError("every subsample was rank deficient")
    B, _, iters, status = descend(data.design, data.y, cfg.tau, best_beta[None, :], rcfg)
    return cls_result(
        data, B[0], cfg, Solver.HYBRID, time.perf_counter() - t0,
        iterations=int(iters[0]), restarts_used=subsample_runs,
        status=status[0], skipped_subsamples=skipped, subsample_size=size,
        initial_loss=best_loss,
    )
