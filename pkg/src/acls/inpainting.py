"""Blind inpainting by capped sparse coding against a fixed dictionary.

Signals are columns of an ``n x p`` matrix (one column per image patch).
Each entry whose residual exceeds ``tau`` is flagged as corrupted, drops out
of the next Lasso fit and is restored from the sparse code.
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import InvalidArgumentError


@dataclass(frozen=True)
class Dictionary:
    D: np.ndarray
    atom_norms: np.ndarray

    @classmethod
    def from_matrix(cls, D):
        D = np.asarray(D, dtype=float)
        if D.ndim != 2 or D.size == 0:
            raise InvalidArgumentError("dictionary must be a non-empty 2-d array")
        if not np.all(np.isfinite(D)):
            raise InvalidArgumentError("dictionary has non-finite entries")
        norms = np.linalg.norm(D, axis=0)
        if np.any(norms == 0):
            raise InvalidArgumentError(f"dictionary has zero atoms at {np.flatnonzero(norms == 0).tolist()}")
        return cls(D, norms)

    @property
    def n(self):
        return self.D.shape[0]

    @property
    def m(self):
        return self.D.shape[1]


@dataclass(frozen=True)
class SparseCodeResult:
    alpha: np.ndarray
    mask: np.ndarray
    restored: np.ndarray
    lam: float
    tau: float
    rounds: int
    converged: bool
    cycled: bool

    @property
    def mask_density(self):
        return float(self.mask.mean())


@dataclass(frozen=True)
class PatchGeometry:
    shape: tuple
    size: int
    positions: tuple


def _starts(length, size, stride):
    starts = list(range(0, length - size + 1, stride))
    if starts[-1] != length - size:
        # keep the far border covered when the stride does not divide evenly
        starts.append(length - size)
    return starts


def patchify(image, size, stride=1):
    """Sliding ``size x size`` patches, each flattened column-major into a column."""
    image = np.asarray(image, dtype=float)
    if image.ndim != 2:
        raise InvalidArgumentError("image must be 2-d")
    H, W = image.shape
    if not 1 <= size <= min(H, W):
        raise InvalidArgumentError(f"patch size {size} must lie in [1, {min(H, W)}]")
    if stride < 1:
        raise InvalidArgumentError("stride must be positive")
    positions = tuple((r, c) for c in _starts(W, size, stride) for r in _starts(H, size, stride))
    cols = [image[r:r + size, c:c + size].ravel(order="F") for r, c in positions]
    return np.stack(cols, axis=1), PatchGeometry((H, W), size, positions)


def reassemble(Y, geometry):
    """Inverse of :func:`patchify`; overlapping pixels are averaged."""
    Y = np.asarray(Y, dtype=float)
    s = geometry.size
    if Y.shape != (s * s, len(geometry.positions)):
        raise InvalidArgumentError("signal matrix does not match the patch geometry")
    total = np.zeros(geometry.shape)
    count = np.zeros(geometry.shape)
    for k, (r, c) in enumerate(geometry.positions):
        total[r:r + s, c:c + s] += Y[:, k].reshape(s, s, order="F")
        count[r:r + s, c:c + s] += 1.0
    return total / count


def soft_threshold(z, lam):
    return np.sign(z) * np.maximum(np.abs(z) - lam, 0.0)


def masked_lasso(Y, D, W, lam, alpha0=None, tol=1e-8, max_sweeps=10000):
    """Column-wise ``(1/2)||(y - D a) * w||^2 + lam ||a||_1`` by cyclic coordinate descent.

    ``W`` holds 0/1 weights with the shape of ``Y``. All columns are swept
    together through their own weighted Gram matrices. Coordinates whose
    atom is fully masked are held at zero.
    """
    n, p = Y.shape
    m = D.shape[1]
    G = np.einsum("ij,iq,ik->qjk", D, W, D)
    c = (D.T @ (W * Y)).T  # p x m
    diag = np.einsum("njj->nj", G)
    A = np.zeros((p, m)) if alpha0 is None else np.array(alpha0, dtype=float).T
    active = diag > 0
    A[~active] = 0.0
    safe = np.where(active, diag, 1.0)
    todo = np.arange(p)
    for _ in range(max_sweeps):
        if todo.size == 0:
            break
        Gs, Ast, cs, ds, act = G[todo], A[todo], c[todo], diag[todo], active[todo]
        safe_s = safe[todo]
        shift = np.zeros(todo.size)
        for j in range(m):
            # partial residual correlation with atom j excluded
            rho = cs[:, j] - np.einsum("nk,nk->n", Gs[:, j, :], Ast) + ds[:, j] * Ast[:, j]
            new = np.where(act[:, j], soft_threshold(rho, lam) / safe_s[:, j], 0.0)
            shift = np.maximum(shift, np.abs(new - Ast[:, j]))
            Ast[:, j] = new
        A[todo] = Ast
        todo = todo[shift > tol]
    return A.T


def fit_inpaint(Y, D, lam, tau, max_rounds=50, tol=1e-8):
    """Alternate a masked Lasso fit and an entrywise residual mask.

    Starts with every entry flagged, so the first code is zero and the first
    mask flags ``|y_ij| > tau``. Stops when the mask repeats; a mask that
    returns to an earlier state other than the last one sets ``cycled``.
    Restoration uses the final code and mask.
    """
    if not isinstance(D, Dictionary):
        D = Dictionary.from_matrix(D)
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2 or Y.shape[0] != D.n:
        raise InvalidArgumentError(f"signals must have {D.n} rows to match the dictionary")
    if not np.all(np.isfinite(Y)):
        raise InvalidArgumentError("signals have non-finite entries")
    if not lam >= 0:
        raise InvalidArgumentError("lambda must be nonnegative")
    if not tau > 0:
        raise InvalidArgumentError("tau must be positive")
    mask = np.ones(Y.shape, dtype=bool)
    alpha = np.zeros((D.m, Y.shape[1]))
    seen = {mask.tobytes(): 0}
    converged = cycled = False
    rounds = 0
    for rounds in range(1, max_rounds + 1):
        alpha = masked_lasso(Y, D.D, (~mask).astype(float), lam, alpha, tol=tol)
        new = np.abs(Y - D.D @ alpha) > tau
        key = new.tobytes()
        if np.array_equal(new, mask):
            converged = True
            break
        if key in seen:
            mask = new
            cycled = True
            break
        seen[key] = rounds
        mask = new
    restored = np.where(mask, D.D @ alpha, Y)
    return SparseCodeResult(alpha, mask, restored, float(lam), float(tau), rounds, converged, cycled)


def psnr(x_hat, x, peak=255.0):
    """``10 log10(peak^2 / mean squared difference)``; identical inputs give ``inf``."""
    x_hat = np.asarray(x_hat, dtype=float)
    x = np.asarray(x, dtype=float)
    if x_hat.shape != x.shape:
        raise InvalidArgumentError(f"shape mismatch {x_hat.shape} vs {x.shape}")
    err = float(np.mean((x_hat - x) ** 2))
    if err == 0:
        return math.inf
    return 10.0 * math.log10(peak * peak / err)


def dct_dictionary(n, m):
    """Overcomplete separable 2-D DCT with unit-norm atoms.

    ``n`` must be a square patch size ``s*s``. Each axis uses
    ``k = ceil(sqrt(m))`` DCT-II frequencies on ``s`` samples and the ``m``
    lowest-frequency products are kept. With ``m = n`` this is the
    orthonormal DCT basis.
    """
    s = math.isqrt(n)
    if s * s != n or n < 1:
        raise InvalidArgumentError(f"patch pixel count {n} is not a perfect square")
    if m < 1:
        raise InvalidArgumentError("atom count must be positive")
    k = math.isqrt(m - 1) + 1
    i = np.arange(s)[:, None]
    f = np.arange(k)[None, :]
    basis = np.cos(np.pi * (2 * i + 1) * f / (2 * k))
    order = sorted(((a + b, a, b) for a in range(k) for b in range(k)))[:m]
    # column-major pixel order: row index varies fastest
    atoms = np.stack([np.kron(basis[:, b], basis[:, a]) for _, a, b in order], axis=1)
    atoms /= np.linalg.norm(atoms, axis=0)
    return Dictionary.from_matrix(atoms)


def planted_codes(n=20, m=40, p=100, sparsity=3, frac=0.05, magnitude=10.0, noise=0.05, seed=0):
    """Random unit-atom dictionary, sparse codes and additive entrywise spikes.

    Returns ``(Y_corrupted, Y_clean, Dictionary, corrupted_mask)``.
    """
    rng = np.random.default_rng(seed)
    D = rng.standard_normal((n, m))
    D /= np.linalg.norm(D, axis=0)
    A = np.zeros((m, p))
    for i in range(p):
        support = rng.choice(m, size=sparsity, replace=False)
        A[support, i] = rng.standard_normal(sparsity)
    clean = D @ A + noise * rng.standard_normal((n, p))
    corrupted = rng.random((n, p)) < frac
    Y = clean + magnitude * corrupted
    return Y, clean, Dictionary.from_matrix(D), corrupted
