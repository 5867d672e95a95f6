"""Randomised gradient descent with an inflating line search.

Each iteration tries the step sizes ``eta0 * gamma_u**m`` for m = 0, 1, ...
and keeps inflating while the next trial loss is strictly smaller. All
restarts are advanced together as rows of one array; every row follows
exactly the arithmetic of a single-start run.
"""

from dataclasses import dataclass
import math
import time

import numpy as np

from ..errors import DivergenceError, InvalidArgumentError
from .result import Solver, cls_result

MAX_INFLATIONS = 200
MAX_HALVINGS = 30


@dataclass(frozen=True)
class RgdConfig:
    eta0: float = 0.001
    gamma_u: float = 2.0
    eps_opt: float = 1e-6
    max_iters: int = 5000
    restarts: int = 200
    seed: int = 0

    def __post_init__(self):
        if not self.eta0 > 0:
            raise InvalidArgumentError("eta0 must be positive")
        if not self.gamma_u > 1:
            raise InvalidArgumentError("gamma_u must exceed 1")
        if not self.eps_opt > 0:
            raise InvalidArgumentError("eps_opt must be positive")
        if self.max_iters < 1:
            raise InvalidArgumentError("max_iters must be positive")


def _batch_loss(X, y, tau2, B):
    R = y[None, :] - B @ X.T
    return 0.5 * np.mean(np.minimum(R * R, tau2), axis=1)


def _batch_grad(X, y, tau, B):
    R = y[None, :] - B @ X.T
    psi = np.where(np.abs(R) <= tau, R, 0.0)
    return -(psi @ X) / X.shape[0]


def descend(X, y, tau, B0, rcfg):
    """Run gradient descent from every row of ``B0``.

    Returns ``(B, losses, iterations, status)`` where status is one of
    ``converged``, ``stationary``, ``flat``, ``max_iters`` or ``diverged``
    per start. ``flat`` means the start had zero gradient.
    """
    B = np.array(B0, dtype=float, copy=True)
    k = B.shape[0]
    tau2 = tau * tau
    eta0, gam = rcfg.eta0, rcfg.gamma_u
    losses = _batch_loss(X, y, tau2, B)
    iters = np.zeros(k, dtype=int)
    status = np.array(["running"] * k, dtype=object)
    active = np.ones(k, dtype=bool)
    bad = ~np.all(np.isfinite(B), axis=1)
    status[bad] = "diverged"
    active[bad] = False

    for _ in range(rcfg.max_iters):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        Bk, Lk = B[idx], losses[idx]
        G = _batch_grad(X, y, tau, Bk)
        zero = ~np.any(G != 0.0, axis=1)
        if np.any(zero):
            z = idx[zero]
            status[z] = np.where(iters[z] == 0, "flat", "stationary")
            active[z] = False
            idx, Bk, Lk, G = idx[~zero], Bk[~zero], Lk[~zero], G[~zero]
            if idx.size == 0:
                break

        # inflating search: keep m while L(gamma^m eta0) > L(gamma^(m+1) eta0)
        m = np.zeros(idx.size)
        cur = _batch_loss(X, y, tau2, Bk - eta0 * G)
        searching = np.ones(idx.size, dtype=bool)
        for _ in range(MAX_INFLATIONS):
            s = np.flatnonzero(searching)
            if s.size == 0:
                break
            step = eta0 * gam ** (m[s] + 1)
            nxt = _batch_loss(X, y, tau2, Bk[s] - step[:, None] * G[s])
            better = cur[s] > nxt
            grow = s[better]
            m[grow] += 1
            cur[grow] = nxt[better]
            searching[s[~better]] = False
        eta = eta0 * gam ** m
        newB = Bk - eta[:, None] * G
        newL = cur

        # the chosen step must beat the current loss; otherwise shrink eta0
        fail = np.flatnonzero(~(newL < Lk))
        for j in fail:
            accepted = False
            h = eta0
            for _ in range(MAX_HALVINGS):
                h *= 0.5
                cand = Bk[j] - h * G[j]
                lc = _batch_loss(X, y, tau2, cand[None, :])[0]
                if lc < Lk[j]:
                    newB[j], newL[j], accepted = cand, lc, True
                    break
            if not accepted:
                newB[j], newL[j] = Bk[j], Lk[j]
                status[idx[j]] = "stationary"
                active[idx[j]] = False

        finite = np.all(np.isfinite(newB), axis=1)
        if not np.all(finite):
            d = idx[~finite]
            status[d] = "diverged"
            active[d] = False
        moved = finite & (status[idx] == "running")
        mi = idx[moved]
        delta = np.linalg.norm(newB[moved] - Bk[moved], axis=1)
        B[mi] = newB[moved]
        losses[mi] = newL[moved]
        iters[mi] += 1
        done = mi[delta <= rcfg.eps_opt]
        status[done] = "converged"
        active[done] = False
    status[active] = "max_iters"
    return B, losses, iters, status


def uniform_ball(rng, count, p, radius):
    """``count`` points uniform in the l2 ball of the given radius in R^p."""
    direction = rng.standard_normal((count, p))
    norms = np.linalg.norm(direction, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    u = rng.random(count)
    return direction / norms * (radius * u ** (1.0 / p))[:, None]


def fit_rgd_single(data, cfg, rcfg, beta0):
    t0 = time.perf_counter()
    beta0 = np.asarray(beta0, dtype=float)
    if beta0.shape != (data.p,):
        raise InvalidArgumentError(f"beta0 has shape {beta0.shape}, expected ({data.p},)")
    if not np.all(np.isfinite(beta0)):
        raise InvalidArgumentError("beta0 must be finite")
    B, _, iters, status = descend(data.design, data.y, cfg.tau, beta0[None, :], rcfg)
    if status[0] == "diverged":
        raise DivergenceError("gradient descent produced a non-finite iterate", last_finite=B[0])
    return cls_result(
        data, B[0], cfg, Solver.RGD, time.perf_counter() - t0,
        iterations=int(iters[0]), restarts_used=1, status=status[0],
    )


def starting_points(data, cfg, rcfg):
    rng = np.random.default_rng(rcfg.seed)
    return uniform_ball(rng, rcfg.restarts, data.p, cfg.tau)


def fit_rgd(data, cfg, rcfg=None):
    """Best of ``rcfg.restarts`` descents started uniformly in the ball of radius tau.

    Ties in the final loss go to the lowest start index.
    """
    rcfg = rcfg or RgdConfig()
    if rcfg.restarts < 1:
        raise InvalidArgumentError("restarts must be at least 1")
    t0 = time.perf_counter()
    B0 = starting_points(data, cfg, rcfg)
    B, losses, iters, status = descend(data.design, data.y, cfg.tau, B0, rcfg)
    ok = status != "diverged"
    if not np.any(ok):
        raise DivergenceError("every start diverged", last_finite=B0[0])
    masked = np.where(ok, losses, math.inf)
    best = int(np.argmin(masked))
    flat = status == "flat"
    return cls_result(
        data, B[best], cfg, Solver.RGD, time.perf_counter() - t0,
        iterations=int(iters[best]), restarts_used=rcfg.restarts,
        status=status[best], best_start=best,
        flat_starts=int(np.sum(flat)), all_starts_flat=bool(np.all(flat[ok])),
        total_iterations=int(iters.sum()),
    )
