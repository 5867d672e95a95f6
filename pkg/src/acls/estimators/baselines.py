"""Comparison estimators: OLS, adaptive Huber (IRLS) and least trimmed squares."""

import time

import numpy as np

from ..errors import DegenerateDesignError, InvalidArgumentError, SingularSystemError
from ..numerics import solve_least_squares
from .result import FitResult, Solver, cls_result


def fit_ols(data):
    """Ordinary least squares. The mask is all true (no cap) and ``loss`` is mean r^2/2."""
    t0 = time.perf_counter()
    beta = solve_least_squares(data.design, data.y)
    r = data.y - data.design @ beta
    return FitResult(
        beta=beta,
        loss=float(0.5 * np.mean(r * r)),
        inlier_mask=np.ones(data.n, dtype=bool),
        iterations=1,
        restarts_used=0,
        solver=Solver.OLS,
        elapsed_seconds=time.perf_counter() - t0,
    )


def huber_loss(r, tau):
    a = np.abs(r)
    return np.where(a <= tau, 0.5 * r * r, tau * a - 0.5 * tau * tau)


def huber_objective(data, beta, tau):
    r = data.y - data.design @ beta
    return float(np.mean(huber_loss(r, tau)))


def huber_gradient(data, beta, tau):
    r = data.y - data.design @ beta
    psi = np.clip(r, -tau, tau)
    return -(data.design.T @ psi) / data.n


def fit_ahr(data, cfg, tol=1e-8, max_iter=500):
    """Huber regression with robustification ``cfg.tau`` by IRLS from OLS.

    Weights are 1 inside the cap and ``tau / |r|`` outside. ``loss`` holds the
    CLS loss at the solution; the Huber objective trace is in diagnostics.
    """
    t0 = time.perf_counter()
    X, y, tau = data.design, data.y, cfg.tau
    if data.n <= data.p:
        raise InvalidArgumentError("AHR needs n > p")
    try:
        beta = solve_least_squares(X, y)
    except SingularSystemError as exc:
        raise DegenerateDesignError(str(exc)) from exc
    trace = [huber_objective(data, beta, tau)]
    it = 0
    for it in range(1, max_iter + 1):
        r = y - X @ beta
        a = np.abs(r)
        w = np.where(a <= tau, 1.0, tau / np.maximum(a, 1e-300))
        sw = np.sqrt(w)
        try:
            new = solve_least_squares(X * sw[:, None], y * sw)
        except SingularSystemError as exc:
            raise DegenerateDesignError(f"weighted system singular: {exc}") from exc
        step = np.linalg.norm(new - beta)
        beta = new
        trace.append(huber_objective(data, beta, tau))
        if step <= tol:
            break
    return cls_result(
        data, beta, cfg, Solver.AHR, time.perf_counter() - t0,
        iterations=it, huber_objective=trace[-1], objective_trace=trace,
    )


def trimmed_objective(data, beta, h):
    r = data.y - data.design @ beta
    return float(np.sum(np.sort(r * r)[:h]))


def _c_steps(X, y, beta, h, max_steps):
    """Concentration steps; returns (beta, objective, trace)."""
    r2 = (y - X @ beta) ** 2
    H = np.sort(np.argsort(r2, kind="stable")[:h])
    trace = [float(np.sum(np.sort(r2)[:h]))]
    for _ in range(max_steps):
        try:
            beta = solve_least_squares(X[H], y[H])
        except SingularSystemError:
            break
        r2 = (y - X @ beta) ** 2
        trace.append(float(np.sum(np.sort(r2)[:h])))
        newH = np.sort(np.argsort(r2, kind="stable")[:h])
        if np.array_equal(newH, H):
            break
        H = newH
    return beta, trace[-1], trace


def fit_lts(data, h=None, n_subsets=500, seed=0, max_csteps=50):
    """Least trimmed squares from random elemental starts refined by C-steps.

    ``h`` defaults to ``(n + p + 1) // 2``. ``loss`` stores the trimmed sum of
    squares, not the CLS loss.
    """
    t0 = time.perf_counter()
    X, y = data.design, data.y
    n, p = X.shape
    if h is None:
        h = (n + p + 1) // 2
    if not p <= h <= n:
        raise InvalidArgumentError(f"need p <= h <= n, got h={h}, p={p}, n={n}")
    rng = np.random.default_rng(seed)
    best = None
    for k in range(n_subsets):
        rows = list(rng.choice(n, size=p, replace=False))
        # grow singular elemental sets until they determine beta
        pool = [i for i in rng.permutation(n) if i not in rows]
        beta = None
        while beta is None:
            try:
                beta = solve_least_squares(X[rows], y[rows])
            except SingularSystemError:
                if not pool:
                    break
                rows.append(pool.pop())
        if beta is None:
            continue
        beta, obj, trace = _c_steps(X, y, beta, h, max_csteps)
        if best is None or obj < best[1]:
            best = (beta, obj, trace, k)
    if best is None:
        raise DegenerateDesignError("no elemental subset determines beta")
    beta, obj, trace, k = best
    r = y - X @ beta
    cut = np.sort(np.abs(r))[h - 1]
    return FitResult(
        beta=beta,
        loss=obj,
        inlier_mask=np.abs(r) <= cut,
        iterations=len(trace) - 1,
        restarts_used=n_subsets,
        solver=Solver.LTS,
        elapsed_seconds=time.perf_counter() - t0,
        diagnostics={"h": h, "cstep_trace": trace, "best_subset": k},
    )
