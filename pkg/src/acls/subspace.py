"""Robust low-rank background model with frame-level outlier flags.

Frames are the rows ``y_i`` of an ``n x p`` matrix. The model is
``y_i ~ m + U s_i`` with orthonormal ``U`` (p x q); a frame whose residual
norm exceeds ``tau`` is flagged and drops out of the fit, paying a flat
``tau^2 / 2``.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateMaskError, InvalidArgumentError
from .numerics import thin_svd

MAD_CONSTANT = 1.4826


@dataclass
class SubspaceModel:
    m: np.ndarray
    U: np.ndarray
    S: np.ndarray
    delta: np.ndarray
    tau: float
    objective: float
    history: list = field(default_factory=list)
    sweeps: int = 0
    converged: bool = True

    def background(self):
        return self.m[None, :] + self.S @ self.U.T

    def foreground(self, Y):
        """Residual of flagged frames; zero rows for unflagged ones."""
        return (np.asarray(Y, dtype=float) - self.background()) * self.delta[:, None]


def _check(Y, q):
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2:
        raise InvalidArgumentError("Y must be a 2-d array of frames")
    if not np.all(np.isfinite(Y)):
        raise InvalidArgumentError("Y has non-finite entries")
    n, p = Y.shape
    if not 1 <= q <= min(n, p):
        raise InvalidArgumentError(f"rank q={q} must lie in [1, min(n, p)={min(n, p)}]")
    return Y


def procrustes(A):
    """Orthonormal ``W = L R^T`` maximising ``tr(W^T A)``, from ``A = L D R^T``."""
    L, _, R = thin_svd(A)
    return L @ R.T


def subspace_objective(Y, m, U, S, tau):
    """``(1/2n) sum_i min(||y_i - m - U s_i||^2, tau^2)`` and the frame residual norms."""
    resid = Y - m[None, :] - S @ U.T
    norms = np.linalg.norm(resid, axis=1)
    return 0.5 * float(np.mean(np.minimum(norms * norms, tau * tau))), norms


def fit_subspace_acls(Y, q, tau, eps_opt=1e-5, max_sweeps=500):
    """Alternating minimisation: mean, scores, basis, then flags, once per sweep.

    Starts from a zero basis and no flags. Stops when the objective changes
    by at most ``eps_opt`` between sweeps.
    """
    Y = _check(Y, q)
    if not tau > 0:
        raise InvalidArgumentError("tau must be positive")
    n, p = Y.shape
    U = np.zeros((p, q))
    S = np.zeros((n, q))
    delta = np.zeros(n, dtype=bool)
    history = []
    converged = False
    sweep = 0
    for sweep in range(1, max_sweeps + 1):
        keep = (~delta).astype(float)
        count = keep.sum()
        if count == 0:
            raise DegenerateMaskError(f"every frame is flagged at sweep {sweep}; the mean update is undefined")
        m = keep @ (Y - S @ U.T) / count
        centred = (Y - m[None, :]) * keep[:, None]
        S = centred @ U
        # flagged frames keep only their fitted part when updating the basis
        O = (Y - m[None, :] - S @ U.T) * delta[:, None]
        Yo = Y - m[None, :] - O
        U = procrustes(Yo.T @ S)
        obj, norms = subspace_objective(Y, m, U, S, tau)
        delta = norms > tau
        history.append(obj)
        if len(history) > 1 and abs(history[-1] - history[-2]) <= eps_opt:
            converged = True
            break
    return SubspaceModel(m, U, S, delta, tau, history[-1], history, sweep, converged)


def fit_subspace_ols(Y, q):
    """Least squares fit: column mean and the top ``q`` right singular vectors."""
    Y = _check(Y, q)
    n, p = Y.shape
    m = Y.mean(axis=0)
    Yc = Y - m[None, :]
    _, _, R = thin_svd(Yc)
    k = R.shape[1]
    if k < q:
        # fewer singular directions than requested: pad deterministically
        from .numerics import _complete_orthonormal

        pad = np.zeros((p, q))
        pad[:, :k] = R
        U = _complete_orthonormal(pad, k)
    else:
        U = R[:, :q]
    S = Yc @ U
    obj = 0.5 * float(np.mean(np.sum((Yc - S @ U.T) ** 2, axis=1)))
    return SubspaceModel(m, U, S, np.zeros(n, dtype=bool), np.inf, obj, [obj], 1, True)


def mad_sigma(Y):
    """1.4826 times the median absolute deviation from each row's median."""
    Y = np.asarray(Y, dtype=float)
    if Y.size < 1:
        raise InvalidArgumentError("need at least one entry")
    if Y.ndim == 1:
        Y = Y[None, :]
    dev = np.abs(Y - np.median(Y, axis=1, keepdims=True))
    return MAD_CONSTANT * float(np.median(dev))


def planted_scene(n=200, p=64, q=3, frac=0.1, magnitude=20.0, noise=0.01, blob=9, seed=0):
    """Synthetic frames with a planted basis and additive blobs on some frames.

    Returns ``(Y, U_true, corrupted_mask)``.
    """
    rng = np.random.default_rng(seed)
    U_true, _ = np.linalg.qr(rng.standard_normal((p, q)))
    m = rng.uniform(0.0, 2.0, p)
    scales = np.linspace(0.6, 0.3, q)
    S = rng.standard_normal((n, q)) * scales
    Y = m[None, :] + S @ U_true.T + noise * rng.standard_normal((n, p))
    k = int(round(frac * n))
    corrupted = np.zeros(n, dtype=bool)
    corrupted[rng.choice(n, size=k, replace=False)] = True
    for i in np.flatnonzero(corrupted):
        start = rng.integers(0, p - blob + 1)
        Y[i, start:start + blob] += magnitude
    return Y, U_true, corrupted
