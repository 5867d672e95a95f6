"""Small dense linear algebra: least squares, thin SVD, SPD inverse."""

import numpy as np
from scipy import linalg as sla

from .errors import InvalidArgumentError, SingularSystemError

RANK_RTOL = 1e-10


def _as_matrix(A, name="A"):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise InvalidArgumentError(f"{name} must be a 2-d array")
    if not np.all(np.isfinite(A)):
        raise InvalidArgumentError(f"{name} has non-finite entries")
    return A


def solve_least_squares(A, b):
    """Minimiser of ``||A beta - b||_2`` for a full-column-rank ``A``.

    Raises :class:`SingularSystemError` (with ``rank`` set) when the smallest
    singular value falls below ``1e-10`` times the largest.
    """
    A = _as_matrix(A)
    b = np.asarray(b, dtype=float)
    n, p = A.shape
    if b.shape != (n,):
        raise InvalidArgumentError(f"b has shape {b.shape}, expected ({n},)")
    if n < p:
        raise SingularSystemError(f"underdetermined system ({n} rows, {p} columns)", rank=n)
    beta, _, rank, sv = np.linalg.lstsq(A, b, rcond=RANK_RTOL)
    if rank < p:
        raise SingularSystemError(f"design has effective rank {rank} < {p}", rank=int(rank))
    return beta


def _round_robin(p):
    """Rounds of disjoint index pairs covering every pair once (circle method)."""
    idx = list(range(p)) + ([-1] if p % 2 else [])
    m = len(idx)
    rounds = []
    for _ in range(m - 1):
        pairs = [(idx[k], idx[m - 1 - k]) for k in range(m // 2)]
        pairs = [(min(i, j), max(i, j)) for i, j in pairs if i >= 0 and j >= 0]
        if pairs:
            rounds.append((np.array([i for i, _ in pairs]), np.array([j for _, j in pairs])))
        idx = [idx[0]] + [idx[-1]] + idx[1:-1]
    return rounds


def _jacobi_square(R, tol=1e-15, max_sweeps=60):
    """One-sided Jacobi on a small square matrix; returns (W, V) with R V = W, W orthogonal columns."""
    W = R.copy()
    p = W.shape[1]
    V = np.eye(p)
    rounds = _round_robin(p)
    for _ in range(max_sweeps):
        rotated = False
        for I, J in rounds:
            wi, wj = W[:, I], W[:, J]
            alpha = np.einsum("ij,ij->j", wi, wi)
            beta = np.einsum("ij,ij->j", wj, wj)
            gamma = np.einsum("ij,ij->j", wi, wj)
            active = np.abs(gamma) > tol * np.sqrt(alpha * beta)
            if not np.any(active):
                continue
            rotated = True
            I, J = I[active], J[active]
            alpha, beta, gamma = alpha[active], beta[active], gamma[active]
            zeta = (beta - alpha) / (2.0 * gamma)
            t = np.where(zeta >= 0, 1.0, -1.0) / (np.abs(zeta) + np.hypot(1.0, zeta))
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = c * t
            for M in (W, V):
                mi, mj = M[:, I].copy(), M[:, J]
                M[:, I] = c * mi - s * mj
                M[:, J] = s * mi + c * mj
        if not rotated:
            break
    return W, V


def _complete_orthonormal(L, k):
    """Fill columns ``k:`` of ``L`` with unit vectors orthogonal to the first ``k``."""
    n, r = L.shape
    basis = [L[:, j] for j in range(k)]
    out = L.copy()
    col = k
    for e in range(n):
        if col >= r:
            break
        v = np.zeros(n)
        v[e] = 1.0
        for _ in range(2):
            for b in basis:
                v -= (b @ v) * b
        nv = np.linalg.norm(v)
        if nv > 1e-8:
            v /= nv
            basis.append(v)
            out[:, col] = v
            col += 1
    return out


def thin_svd(A):
    """Thin SVD ``A = L diag(D) R^T`` with ``k = min(n, p)`` components.

    Singular values come out in descending order. Each left singular vector
    has its first nonzero entry nonnegative, which makes the output
    deterministic. Computed by a QR reduction followed by one-sided Jacobi.
    """
    A = _as_matrix(A)
    n, p = A.shape
    if p > n:
        L, D, R = thin_svd(A.T)
        return _fix_signs(R, D, L)
    k = p
    if k == 0:
        return np.zeros((n, 0)), np.zeros(0), np.zeros((p, 0))
    Q, Rq = np.linalg.qr(A, mode="reduced")
    W, V = _jacobi_square(Rq)
    D = np.linalg.norm(W, axis=0)
    order = np.argsort(-D, kind="stable")
    D, W, V = D[order], W[:, order], V[:, order]
    scale = D[0] if D[0] > 0 else 1.0
    nz = int(np.sum(D > 1e-14 * scale)) if D[0] > 0 else 0
    Lr = np.zeros((k, k))
    Lr[:, :nz] = W[:, :nz] / D[:nz]
    D = D.copy()
    D[nz:] = 0.0
    if nz < k:
        Lr = _complete_orthonormal(Lr, nz)
    L = Q @ Lr
    return _fix_signs(L, D, V)


def _fix_signs(L, D, R):
    L, R = L.copy(), R.copy()
    for j in range(L.shape[1]):
        col = L[:, j]
        nzi = np.flatnonzero(np.abs(col) > 1e-12)
        if nzi.size and col[nzi[0]] < 0:
            L[:, j] = -col
            R[:, j] = -R[:, j]
    return L, D, R


def inverse_spd(A, sym_tol=1e-10, eig_tol=1e-12):
    """Inverse of a symmetric positive-definite matrix via Cholesky."""
    A = _as_matrix(A)
    p = A.shape[0]
    if A.shape != (p, p):
        raise InvalidArgumentError("matrix must be square")
    scale = max(1.0, float(np.max(np.abs(A)))) if A.size else 1.0
    if np.max(np.abs(A - A.T), initial=0.0) > sym_tol * scale:
        raise InvalidArgumentError("matrix is not symmetric")
    A = 0.5 * (A + A.T)
    eig = np.linalg.eigvalsh(A)
    if eig.size and eig[0] <= eig_tol * max(eig[-1], 0.0) or (eig.size and eig[-1] <= 0):
        raise SingularSystemError("matrix is not positive definite", rank=int(np.sum(eig > eig_tol * max(eig[-1], 0.0))))
    cf = sla.cho_factor(A, lower=True)
    inv = sla.cho_solve(cf, np.eye(p))
    return 0.5 * (inv + inv.T)
