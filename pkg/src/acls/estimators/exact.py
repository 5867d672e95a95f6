"""Global minimisation of the CLS empirical loss on small instances.

For a fixed binary outlier vector ``z`` the big-M program reduces to
ordinary least squares on the rows with ``z_i = 0``; the penalty for each
flagged row is ``tau**2 / 2``. So the global optimum is the best subset
objective::

    RSS(S) / 2 + (tau**2 / 2) * (n - |S|)        (all over n)

and the big constant ``M`` never needs to be formed. Two strategies search
over subsets: exhaustive enumeration and a depth-first branch and bound.
"""

from dataclasses import dataclass
from enum import Enum
import math
import time

import numpy as np

from ..errors import DegenerateDesignError, InstanceTooLargeError, InvalidArgumentError
from .result import Solver, cls_result


class ExactStrategy(str, Enum):
    ENUMERATE = "enumerate"
    BRANCH_AND_BOUND = "branch-and-bound"


@dataclass(frozen=True)
class ExactConfig:
    max_n: int = 24
    strategy: ExactStrategy = ExactStrategy.BRANCH_AND_BOUND
    incumbent_starts: int = 200
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "strategy", ExactStrategy(self.strategy))
        if self.max_n < 1:
            raise InvalidArgumentError("max_n must be positive")


def _subset_fit(X, y, rows):
    """OLS on ``rows``; returns (beta, rss, rank)."""
    Xs, ys = X[rows], y[rows]
    beta, _, rank, _ = np.linalg.lstsq(Xs, ys, rcond=1e-10)
    r = ys - Xs @ beta
    return beta, float(r @ r), int(rank)


def _subset_objective(rss, n_out, tau):
    return 0.5 * rss + 0.5 * tau * tau * n_out


def _concentrate(X, y, tau, beta, max_steps=100):
    """Alternate ``S = {|r| <= tau}`` and OLS on ``S`` while the CLS loss drops."""
    n, p = X.shape
    tau2 = tau * tau
    r = y - X @ beta
    best = 0.5 * float(np.sum(np.minimum(r * r, tau2)))
    for _ in range(max_steps):
        rows = np.flatnonzero(np.abs(r) <= tau)
        if rows.size < p:
            break
        cand, _, rank = _subset_fit(X, y, rows)
        if rank < p:
            break
        rc = y - X @ cand
        val = 0.5 * float(np.sum(np.minimum(rc * rc, tau2)))
        if not val < best:
            break
        beta, r, best = cand, rc, val
    return beta, best


def _incumbent(X, y, tau, starts, seed):
    """Good starting incumbent from OLS and random elemental subsets, concentrated."""
    n, p = X.shape
    rng = np.random.default_rng(seed)
    candidates = []
    if n >= p:
        b, _, rank = _subset_fit(X, y, np.arange(n))
        if rank == p:
            candidates.append(b)
    if n <= 12 and math.comb(n, p) <= starts:
        from itertools import combinations

        subsets = [np.array(c) for c in combinations(range(n), p)]
    else:
        subsets = [np.sort(rng.choice(n, size=p, replace=False)) for _ in range(starts)]
    for rows in subsets:
        b, _, rank = _subset_fit(X, y, rows)
        if rank == p:
            candidates.append(b)
    best_beta, best_val = None, math.inf
    for b in candidates:
        b, val = _concentrate(X, y, tau, b)
        if val < best_val:
            best_beta, best_val = b, val
    return best_beta, best_val


def _enumerate(X, y, tau, chunk_bits=14):
    """Exhaustive search over all 2^n inlier subsets via batched normal equations.

    Returns a small list of candidate subsets (boolean masks) whose
    objective is within rounding of the minimum; the caller re-evaluates
    them accurately.
    """
    n, p = X.shape
    outer = np.einsum("ij,ik->ijk", X, X).reshape(n, p * p)
    xy = X * y[:, None]
    yy = y * y
    tau2 = tau * tau
    total = 1 << n
    chunk = 1 << min(n, chunk_bits)
    shifts = np.arange(n, dtype=np.int64)
    best_val = math.inf
    keep = []
    for start in range(0, total, chunk):
        codes = np.arange(start, min(start + chunk, total), dtype=np.int64)
        bits = ((codes[:, None] >> shifts) & 1).astype(float)
        size = bits.sum(axis=1)
        ok = size >= p
        if not np.any(ok):
            continue
        bits, size, codes = bits[ok], size[ok], codes[ok]
        G = (bits @ outer).reshape(-1, p, p)
        c = bits @ xy
        s = bits @ yy
        eig = np.linalg.eigvalsh(G)
        full = eig[:, 0] > 1e-12 * np.maximum(eig[:, -1], 1e-300)
        if not np.any(full):
            continue
        G, c, s, size, codes = G[full], c[full], s[full], size[full], codes[full]
        beta = np.linalg.solve(G, c[..., None])[..., 0]
        rss = np.maximum(s - np.einsum("ij,ij->i", c, beta), 0.0)
        obj = 0.5 * rss + 0.5 * tau2 * (n - size)
        best_val = min(best_val, float(obj.min()))
        near = obj <= best_val + 1e-8 * max(abs(best_val), 1.0)
        keep.extend(zip(codes[near].tolist(), obj[near].tolist()))
        keep = [(k, v) for k, v in keep if v <= best_val + 1e-8 * max(abs(best_val), 1.0)]
    if not keep:
        return []
    masks = [((k >> shifts) & 1).astype(bool) for k, _ in keep]
    return masks


class _BranchAndBound:
    """Depth-first search over in/out decisions with an RSS-based lower bound.

    Lower bound at a node: RSS of the rows already included (it can only
    grow as rows are added), plus ``tau^2/2`` per excluded row, plus the
    cheapest way to dispose of the undecided rows, each of which must be
    excluded (``tau^2/2``) or raise the RSS by at least its own one-row
    update ``e^2 / (1 + x' P x)``.
    """

    def __init__(self, X, y, tau, order, incumbent_val, incumbent_mask):
        self.X, self.y, self.tau = X, y, tau
        self.n, self.p = X.shape
        self.half_tau2 = 0.5 * tau * tau
        self.order = order
        self.best_val = incumbent_val
        self.best_mask = incumbent_mask
        self.nodes = 0

    def run(self):
        self._visit(0, [], 0)
        return self.best_mask, self.best_val

    def _bound_undecided(self, beta, P, k, base):
        if P is None or k >= self.n:
            return base
        rows = self.order[k:]
        Xu = self.X[rows]
        e = self.y[rows] - Xu @ beta
        h = np.einsum("ij,jk,ik->i", Xu, P, Xu)
        inc = np.sort(0.5 * e * e / (1.0 + h))[::-1]
        # exclude the j largest increments, pay the (j+1)-th as RSS growth
        nxt = np.append(inc, 0.0)
        costs = np.arange(inc.size + 1) * self.half_tau2 + nxt
        return base + float(costs.min())

    def _visit(self, k, inside, n_out):
        self.nodes += 1
        if len(inside) >= self.p:
            rows = np.array(inside)
            beta, rss, rank = _subset_fit(self.X, self.y, rows)
        else:
            beta, rss, rank = None, 0.0, len(inside)
        base = 0.5 * rss + n_out * self.half_tau2
        if base >= self.best_val:
            return
        if k == self.n:
            if rank == self.p:
                mask = np.zeros(self.n, dtype=bool)
                mask[inside] = True
                self.best_val, self.best_mask = base, mask
            return
        P = None
        if rank == self.p:
            Xi = self.X[np.array(inside)]
            P = np.linalg.inv(Xi.T @ Xi)
        if self._bound_undecided(beta, P, k, base) >= self.best_val:
            return
        row = int(self.order[k])
        inside.append(row)
        self._visit(k + 1, inside, n_out)
        inside.pop()
        if (n_out + 1) * self.half_tau2 < self.best_val:
            self._visit(k + 1, inside, n_out + 1)


def fit_exact(data, cfg, xcfg=None):
    """Global minimiser of the CLS empirical loss for ``n <= xcfg.max_n``."""
    xcfg = xcfg or ExactConfig()
    t0 = time.perf_counter()
    X, y, tau = data.design, data.y, cfg.tau
    n, p = X.shape
    if n > xcfg.max_n:
        raise InstanceTooLargeError(f"instance-too-large: n={n} exceeds max_n={xcfg.max_n}")
    if n < p:
        raise DegenerateDesignError(f"n={n} is smaller than the number of coefficients p={p}")

    nodes = 0
    if xcfg.strategy is ExactStrategy.ENUMERATE:
        masks = _enumerate(X, y, tau)
        if not masks:
            raise DegenerateDesignError("every inlier subset is rank deficient")
        candidates = masks
    else:
        inc_beta, inc_val = _incumbent(X, y, tau, xcfg.incumbent_starts, xcfg.seed)
        if inc_beta is None:
            raise DegenerateDesignError("every candidate subset is rank deficient")
        r = y - X @ inc_beta
        order = np.argsort(np.abs(r), kind="stable")
        inc_mask = np.abs(r) <= tau
        # the concentrated incumbent is OLS on its own inlier set
        bb = _BranchAndBound(X, y, tau, order, inc_val * (1 + 1e-12) + 1e-300, inc_mask)
        mask, _ = bb.run()
        nodes = bb.nodes
        candidates = [mask]

    best_beta, best_val = None, math.inf
    for mask in candidates:
        rows = np.flatnonzero(mask)
        if rows.size < p:
            continue
        beta, rss, rank = _subset_fit(X, y, rows)
        if rank < p:
            continue
        val = _subset_objective(rss, n - rows.size, tau)
        if val < best_val:
            best_beta, best_val = beta, val
    if best_beta is None:
        raise DegenerateDesignError("every inlier subset is rank deficient")
    best_beta, _ = _concentrate(X, y, tau, best_beta)
    return cls_result(
        data, best_beta, cfg, Solver.EXACT, time.perf_counter() - t0,
        strategy=xcfg.strategy.value, nodes=nodes,
    )
