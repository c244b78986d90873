"""Pure-Python Wolfe min-norm-point kernel.

Reference twin of the compiled kernel in ``wsharp._kernels``: both solve

    min ||x||  over  x in conv{p_1, ..., p_m}

with Wolfe's corral algorithm.  The affine subproblem (minimum-norm point
of the affine hull of the corral) is solved through the bordered Gram
system; near-singular systems fall back to a least-squares solve.
"""

from __future__ import annotations

import numpy as np

__all__ = ["wolfe_min_norm"]

STATUS_OK = 0
STATUS_ITER_CAP = 1

_W_NONNEG = 1e-12  # affine weights above -_W_NONNEG count as nonnegative
_LAM_DROP = 1e-14  # corral weights at or below this are dropped


def _affine_minimizer(V: np.ndarray) -> np.ndarray:
    """Weights w (sum 1) minimizing ||V.T w|| over the affine hull of rows."""
    k = V.shape[0]
    M = np.empty((k + 1, k + 1))
    M[:k, :k] = V @ V.T
    M[:k, k] = 1.0
    M[k, :k] = 1.0
    M[k, k] = 0.0
    rhs = np.zeros(k + 1)
    rhs[k] = 1.0
    try:
        sol = np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError:
        sol = np.linalg.lstsq(M, rhs, rcond=None)[0]
    return sol[:k]


def wolfe_min_norm(verts: np.ndarray, tol: float, max_iter: int) -> tuple[np.ndarray, int, int]:
    """Return (x, status, iterations) for the min-norm point of conv(verts)."""
    P = np.ascontiguousarray(verts, dtype=float)
    m, n = P.shape
    norms2 = np.einsum("ij,ij->i", P, P)
    start = int(np.argmin(norms2))
    corral = [start]
    lam = np.array([1.0])
    x = P[start].copy()
    scale = 1.0 + float(np.sqrt(np.max(norms2)))
    stop_slack = 0.5 * tol * scale

    iters = 0
    while True:
        iters += 1
        if iters > max_iter:
            return x, STATUS_ITER_CAP, iters
        dots = P @ x
        j = int(np.argmin(dots))
        xx = float(x @ x)
        if dots[j] >= xx - stop_slack:
            return x, STATUS_OK, iters
        if j in corral:
            # numerically stalled: x already optimal over the corral
            return x, STATUS_OK, iters
        corral.append(j)
        lam = np.append(lam, 0.0)

        while True:
            iters += 1
            if iters > max_iter:
                return x, STATUS_ITER_CAP, iters
            V = P[corral]
            w = _affine_minimizer(V)
            if np.all(w >= -_W_NONNEG):
                lam = np.clip(w, 0.0, None)
                s = lam.sum()
                if s > 0:
                    lam /= s
                x = V.T @ lam
                break
            neg = w < -_W_NONNEG
            ratios = lam[neg] / (lam[neg] - w[neg])
            theta = min(1.0, float(np.min(ratios)))
            lam = (1.0 - theta) * lam + theta * w
            keep = lam > _LAM_DROP
            if not np.any(keep):
                keep[int(np.argmax(lam))] = True
            corral = [corral[i] for i in range(len(corral)) if keep[i]]
            lam = lam[keep]
            s = lam.sum()
            if s > 0:
                lam /= s
            x = P[corral].T @ lam
