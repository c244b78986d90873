"""Demyanov difference of polytopes and the derived generalized gradient.

For compact convex A, B the Demyanov difference A (-) B is the Clarke
subdifferential at the origin of the support-function difference
s(.|A) - s(.|B).  Over polytopes in R^n it equals the convex hull of all
differences of vertices exposed by a common direction, which gives three
backends:

exact1d   conv{max A - max B, min A - min B} on the line.
exact2d   common refinement of the two edge-normal fans; every open arc
          exposes a single vertex of each polygon, so the hull of the
          per-arc vertex differences is exact.
sampled   vertex differences over a deterministic direction sample, with
          directions whose max-face is not a singleton skipped and counted.
          This is an inner approximation; certifiers pair it with the
          representative-dependent outer bound sub + sup.

The map demcoqd(f, x) = sub (-) (-sup) built from a quasidifferential pair
does not depend on the representative pair; the test suite checks this
rather than assuming it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import (
    DEFAULT_SEED,
    Polytope,
    canonicalize,
    direction_set,
    minkowski_sum,
    reflect,
)
from .geometry.polytope import _hull_2d
from .qdcalc import ACTIVE_TOL, FuncExpr, QuasiDiff, quasidiff

__all__ = ["DemyanovResult", "demcoqd", "demcoqd_outer", "demyanov_diff", "pair_outer_bound"]

#: relative tie tolerance for the singleton max-face test
TIE_TOL = 1e-9
#: arcs shorter than this (radians) are merged in the 2D refinement
_ARC_MERGE = 1e-12


@dataclass(frozen=True)
class DemyanovResult:
    """Outcome of a Demyanov difference.

    ``set`` is canonical.  ``sample_count`` is 0 for the exact backends;
    ``tie_skipped`` counts sampled directions dropped by the singleton
    max-face test.
    """

    set: Polytope
    backend: str  # "exact1d" | "exact2d" | "sampled"
    sample_count: int = 0
    tie_skipped: int = 0

    def __post_init__(self):
        if self.backend.startswith("exact") and self.sample_count != 0:
            raise ValueError("exact backends carry no samples")


def _exact_1d(A: Polytope, B: Polytope) -> Polytope:
    a = A.vertices[:, 0]
    b = B.vertices[:, 0]
    hi = float(np.max(a)) - float(np.max(b))
    lo = float(np.min(a)) - float(np.min(b))
    if lo > hi:
        lo, hi = hi, lo
    verts = [[lo]] if lo == hi else [[lo], [hi]]
    return Polytope(np.asarray(verts), canonical=True)


def _edge_normal_angles(P: Polytope) -> np.ndarray:
    verts = P.vertices
    m = verts.shape[0]
    if m < 2:
        return np.empty(0)
    angles = []
    for i in range(m):
        e = verts[(i + 1) % m] - verts[i]
        n = np.hypot(e[0], e[1])
        if n == 0.0:
            continue
        angles.append(np.arctan2(-e[0], e[1]))  # outward normal of a CCW edge
    return np.mod(np.asarray(angles), 2.0 * np.pi)


def _exact_2d(A: Polytope, B: Polytope) -> Polytope:
    angles = np.concatenate([_edge_normal_angles(A), _edge_normal_angles(B)])
    if angles.size == 0:
        dirs = np.array([[1.0, 0.0]])
    else:
        angles = np.sort(angles)
        keep = [angles[0]]
        for a in angles[1:]:
            if a - keep[-1] > _ARC_MERGE:
                keep.append(a)
        # wrap-around duplicate
        if len(keep) > 1 and (2.0 * np.pi - keep[-1]) + keep[0] <= _ARC_MERGE:
            keep.pop()
        brk = np.asarray(keep)
        if brk.size == 1:
            mids = np.array([brk[0] + np.pi])
        else:
            gaps = np.diff(np.append(brk, brk[0] + 2.0 * np.pi))
            mids = brk + gaps / 2.0
            mids = mids[gaps > _ARC_MERGE]
        dirs = np.column_stack([np.cos(mids), np.sin(mids)])
    ia = np.argmax(dirs @ A.vertices.T, axis=1)
    ib = np.argmax(dirs @ B.vertices.T, axis=1)
    diffs = A.vertices[ia] - B.vertices[ib]
    return Polytope(_hull_2d(diffs), canonical=True)


def _sampled(A: Polytope, B: Polytope, n_directions: int, tie_tol: float, seed: int):
    if A.dim == 2:
        # evenly spaced angles minimize the worst angular gap (2 pi / n),
        # so no exposure arc wider than that can be missed
        theta = (np.arange(n_directions) + 0.5) * (2.0 * np.pi / n_directions)
        dirs = np.column_stack([np.cos(theta), np.sin(theta)])
    else:
        dirs = direction_set(A.dim, n_directions, seed)

    def expose(P: Polytope):
        dots = dirs @ P.vertices.T
        best = np.argmax(dots, axis=1)
        top = dots[np.arange(dots.shape[0]), best]
        if P.nvertices == 1:
            tie = np.zeros(dots.shape[0], dtype=bool)
        else:
            second = np.partition(dots, -2, axis=1)[:, -2]
            tie = top - second <= tie_tol * (1.0 + np.abs(top))
        return best, tie

    ia, tie_a = expose(A)
    ib, tie_b = expose(B)
    ok = ~(tie_a | tie_b)
    skipped = int(np.count_nonzero(~ok))
    if not np.any(ok):
        # every direction tied; fall back to the raw difference of barycenters
        center = A.vertices.mean(axis=0) - B.vertices.mean(axis=0)
        return Polytope(center.reshape(1, -1), canonical=True), skipped
    diffs = np.unique(A.vertices[ia[ok]] - B.vertices[ib[ok]], axis=0)
    return canonicalize(Polytope(diffs)), skipped


def demyanov_diff(
    A: Polytope,
    B: Polytope,
    backend: str = "auto",
    n_directions: int = 4096,
    tie_tol: float = TIE_TOL,
    seed: int = DEFAULT_SEED,
) -> DemyanovResult:
    """Demyanov difference A (-) B.

    ``backend="auto"`` picks the exact construction in dimensions 1 and 2
    and direction sampling above; "sampled" can be forced in any dimension.
    """
    if A.dim != B.dim:
        raise ValueError(f"dimension mismatch: {A.dim} vs {B.dim}")
    A = canonicalize(A)
    B = canonicalize(B)
    if backend == "auto":
        backend = "exact1d" if A.dim == 1 else ("exact2d" if A.dim == 2 else "sampled")
    if backend == "exact1d":
        if A.dim != 1:
            raise ValueError("exact1d backend needs dimension 1")
        return DemyanovResult(_exact_1d(A, B), "exact1d")
    if backend == "exact2d":
        if A.dim != 2:
            raise ValueError("exact2d backend needs dimension 2")
        return DemyanovResult(_exact_2d(A, B), "exact2d")
    if backend == "sampled":
        set_, skipped = _sampled(A, B, n_directions, tie_tol, seed)
        return DemyanovResult(set_, "sampled", sample_count=n_directions, tie_skipped=skipped)
    raise ValueError(f"unknown backend {backend!r}")


def pair_diff(q: QuasiDiff, **kw) -> DemyanovResult:
    """Demyanov difference sub (-) (-sup) of a quasidifferential pair."""
    return demyanov_diff(q.sub, reflect(q.sup), **kw)


def pair_outer_bound(q: QuasiDiff) -> Polytope:
    """Representative-dependent outer bound sub + sup (contains the
    Demyanov set); distances to it soundly bound the true distance below."""
    return minkowski_sum(q.sub, q.sup)


def demcoqd(e: FuncExpr, x, active_tol: float = ACTIVE_TOL, **kw) -> DemyanovResult:
    """Generalized gradient demcoqd f(x) = sub (-) (-sup) of an expression."""
    return pair_diff(quasidiff(e, x, active_tol), **kw)


def demcoqd_outer(e: FuncExpr, x, active_tol: float = ACTIVE_TOL) -> Polytope:
    return pair_outer_bound(quasidiff(e, x, active_tol))
