"""Synthetic data generators and the replication / landscape / breakdown harnesses."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import math
import time

import numpy as np

from .errors import AclsError, InvalidArgumentError
from .estimators import ExactConfig, RgdConfig, fit_ahr, fit_exact, fit_hybrid, fit_lts, fit_ols, fit_rgd
from .inference import mse
from .loss import Dataset, LossConfig, TauRule, select_tau

DEFAULT_BETA_STAR = (0.0, 3.0, 4.0, 1.0, 2.0, 0.0)
ESTIMATORS = ("ols", "ahr", "lts", "acls", "acls-h", "acls-c")


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: int = 1
    n: int = 50
    d: int = 6
    lam: float = 0.10
    a: float = 50.0
    rho: float = 0.5
    seed: int = 0
    beta_star: tuple = None

    def __post_init__(self):
        if self.scenario not in (1, 2, 3):
            raise InvalidArgumentError(f"scenario must be 1, 2 or 3, got {self.scenario}")
        if not 0 <= self.lam < 0.5:
            raise InvalidArgumentError("contamination fraction must lie in [0, 0.5)")
        if self.n < 1 or self.d < 2:
            raise InvalidArgumentError("need n >= 1 and d >= 2 (d counts the intercept)")
        if self.beta_star is None:
            reps = math.ceil(self.d / len(DEFAULT_BETA_STAR))
            object.__setattr__(self, "beta_star", tuple((DEFAULT_BETA_STAR * reps)[: self.d]))
        elif len(self.beta_star) != self.d:
            raise InvalidArgumentError("beta_star length must equal d")

    def with_seed(self, seed):
        return ScenarioConfig(self.scenario, self.n, self.d, self.lam, self.a, self.rho, seed, self.beta_star)


@dataclass(frozen=True)
class ScenarioData:
    data: Dataset
    contamination_mask: np.ndarray
    beta_star: np.ndarray


def ar_covariance(k, rho):
    idx = np.arange(k)
    return rho ** np.abs(idx[:, None] - idx[None, :])


def generate_scenario(cfg):
    """One dataset from Scenario 1 (clean), 2 (y-outliers) or 3 (y- and x-outliers).

    Covariates are N(0, Sigma) with Sigma_jk = rho^|j-k|; the intercept is
    the first coefficient. Each row is contaminated independently with
    probability ``lam``; contaminated rows get N(a, 1) errors, and in
    Scenario 3 their covariates are also shifted by N(a 1, I).
    """
    rng = np.random.default_rng(cfg.seed)
    k = cfg.d - 1
    beta = np.asarray(cfg.beta_star, dtype=float)
    chol = np.linalg.cholesky(ar_covariance(k, cfg.rho))
    X = rng.standard_normal((cfg.n, k)) @ chol.T
    eps = rng.standard_normal(cfg.n)
    contaminated = rng.random(cfg.n) < cfg.lam
    if cfg.scenario == 1:
        contaminated[:] = False
    y = beta[0] + X @ beta[1:]
    m = int(contaminated.sum())
    eps[contaminated] = cfg.a + rng.standard_normal(m)
    y = y + eps
    if cfg.scenario == 3:
        X[contaminated] += cfg.a + rng.standard_normal((m, k))
    return ScenarioData(Dataset(X, y, add_intercept=True), contaminated, beta)


def _fit(name, data, cfg, seed, restarts):
    if name == "ols":
        return fit_ols(data)
    if name == "ahr":
        return fit_ahr(data, cfg)
    if name == "lts":
        return fit_lts(data, seed=seed)
    if name == "acls":
        return fit_rgd(data, cfg, RgdConfig(restarts=restarts, seed=seed))
    if name == "acls-h":
        return fit_hybrid(data, cfg, RgdConfig(restarts=restarts, seed=seed))
    if name == "acls-c":
        return fit_exact(data, cfg, ExactConfig())
    raise InvalidArgumentError(f"unknown estimator {name!r}")


@dataclass
class EstimatorSummary:
    median_mse: float
    median_sd: float
    mean_cpu_s: float
    replicates: int
    failures: int


@dataclass
class ReplicationSummary:
    scenario: int
    a: float
    per_estimator: dict
    mse: dict = field(repr=False)
    sd: dict = field(repr=False)
    cpu: dict = field(repr=False)

    def rows(self):
        return [
            {
                "estimator": name,
                "scenario": self.scenario,
                "a": self.a,
                "median_mse": s.median_mse,
                "median_sd": s.median_sd,
                "mean_cpu_s": s.mean_cpu_s,
            }
            for name, s in self.per_estimator.items()
        ]


def _nanmedian(v):
    v = np.asarray(v, dtype=float)
    v = v[np.isfinite(v)]
    return float(np.median(v)) if v.size else math.nan


def _one_replicate(cfg, estimators, seed_seq, restarts, tau):
    data_seed, fit_seed = (int(s.generate_state(1)[0]) for s in seed_seq.spawn(2))
    sc = generate_scenario(cfg.with_seed(data_seed))
    data = sc.data
    lcfg = LossConfig(tau if tau is not None else select_tau(data.n, TauRule.SQRT_N_OVER_LOGLOG_N))
    out = {}
    for name in estimators:
        t0 = time.perf_counter()
        try:
            fit = _fit(name, data, lcfg, fit_seed, restarts)
        except AclsError:
            out[name] = (math.nan, math.nan, time.perf_counter() - t0)
            continue
        elapsed = time.perf_counter() - t0
        r = data.y - data.design @ fit.beta
        out[name] = (mse(fit.beta, sc.beta_star), math.sqrt(float(np.mean(r * r))), elapsed)
    return out


def run_replication(cfg, estimators=("ols", "ahr", "lts", "acls"), replicates=100, restarts=200,
                    tau=None, workers=1):
    """Repeat generate-and-fit ``replicates`` times and aggregate per estimator.

    Median MSE against ``beta_star``, median residual standard deviation
    ``sqrt(mean r^2)`` of each fit, and mean wall time of the fit call.
    Replicate seeds derive from ``cfg.seed`` so results do not depend on
    ``workers``. Failed fits count as NaN and are excluded from medians.
    """
    estimators = tuple(estimators)
    for name in estimators:
        if name not in ESTIMATORS:
            raise InvalidArgumentError(f"unknown estimator {name!r}")
    seeds = np.random.SeedSequence(cfg.seed).spawn(replicates)
    job = lambda s: _one_replicate(cfg, estimators, s, restarts, tau)  # noqa: E731
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, seeds))
    else:
        results = [job(s) for s in seeds]
    mses = {e: [r[e][0] for r in results] for e in estimators}
    sds = {e: [r[e][1] for r in results] for e in estimators}
    cpu = {e: [r[e][2] for r in results] for e in estimators}
    per = {
        e: EstimatorSummary(
            median_mse=_nanmedian(mses[e]),
            median_sd=_nanmedian(sds[e]),
            mean_cpu_s=float(np.mean(cpu[e])),
            replicates=replicates,
            failures=int(np.sum(~np.isfinite(mses[e]))),
        )
        for e in estimators
    }
    return ReplicationSummary(cfg.scenario, cfg.a, per, mses, sds, cpu)


LANDSCAPE_BETA_STAR = 5.0


def landscape_data(case, n, seed, a=10.0, lam=0.1, n_contaminated=5):
    """Univariate data (no intercept, true slope 5) for landscape Cases 1-4."""
    if case not in (1, 2, 3, 4):
        raise InvalidArgumentError(f"case must be 1-4, got {case}")
    rng = np.random.default_rng(np.random.SeedSequence([seed, case, n]))
    x = rng.standard_normal(n)
    eps = rng.standard_normal(n)
    if case == 1:
        mask = np.zeros(n, dtype=bool)
    elif case == 3:
        mask = np.zeros(n, dtype=bool)
        mask[rng.choice(n, size=min(n_contaminated, n), replace=False)] = True
    else:
        mask = rng.random(n) < lam
    m = int(mask.sum())
    eps[mask] = a + rng.standard_normal(m)
    y = LANDSCAPE_BETA_STAR * x + eps
    if case in (3, 4):
        x = x.copy()
        x[mask] += a + rng.standard_normal(m)
    return Dataset(x[:, None], y), mask


def landscape_profile(case, n_values, grid=(-5.0, 15.0, 401), seed=0):
    """Empirical CLS loss over a slope grid, one curve per sample size."""
    lo, hi, steps = grid
    betas = np.linspace(lo, hi, int(steps))
    curves = []
    for n in n_values:
        data, _ = landscape_data(case, n, seed)
        tau = select_tau(n, TauRule.SQRT_N_OVER_LOGLOG_N)
        R = data.y[None, :] - betas[:, None] * data.X[:, 0][None, :]
        loss = 0.5 * np.mean(np.minimum(R * R, tau * tau), axis=1)
        curves.append({"case": case, "n": n, "tau": tau, "beta": betas, "loss": loss})
    return curves


def count_local_minima(values):
    """Strict grid-local minima; plateaus count once, endpoints are excluded."""
    v = np.asarray(values, dtype=float)
    keep = np.concatenate([[True], np.diff(v) != 0])
    v = v[keep]
    if v.size < 3:
        return 0
    inner = (v[1:-1] < v[:-2]) & (v[1:-1] < v[2:])
    return int(np.sum(inner))


def breakdown_base(n, d, seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, d))
    y = X @ np.ones(d) + rng.standard_normal(n)
    directions = rng.standard_normal((n, d))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    return X, y, directions


def breakdown_probe(n, d, contam_counts, magnitude_ladder, estimator="exact", seed=0, tau=None):
    """Estimate norms after planting ``m`` leverage points ``(t u_k, t^2)``.

    The clean base has N(0, I) covariates, unit coefficients and N(0, 1)
    errors. Rows ``0..m-1`` are replaced, each with its own random unit
    direction ``u_k``. Returns a list of ``(m, t, norm)`` triples.
    """
    if estimator not in ("exact", "ahr", "ols"):
        raise InvalidArgumentError(f"estimator must be exact, ahr or ols, got {estimator!r}")
    X, y, U = breakdown_base(n, d, seed)
    cfg = LossConfig(tau if tau is not None else select_tau(n, TauRule.SQRT_N_OVER_LOGLOG_N))
    fit = {
        "exact": lambda data: fit_exact(data, cfg, ExactConfig(max_n=max(24, n))),
        "ahr": lambda data: fit_ahr(data, cfg),
        "ols": fit_ols,
    }[estimator]
    table = []
    for m in contam_counts:
        if not 0 <= m <= n:
            raise InvalidArgumentError(f"contamination count {m} out of range")
        for t in magnitude_ladder:
            Xc, yc = X.copy(), y.copy()
            Xc[:m] = t * U[:m]
            yc[:m] = t * t
            beta = fit(Dataset(Xc, yc)).beta
            table.append((int(m), float(t), float(np.linalg.norm(beta))))
    return table
