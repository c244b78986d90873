"""Convex polytopes of R^n in V-representation.

Everything downstream (quasidifferential pairs, Demyanov differences,
exhausters, certificates) manipulates compact convex sets exclusively
through the vertex list and the support function

    s(v | P) = max_{p in P} <p, v>,

so no facet enumeration is ever performed.  Canonicalization reduces a
vertex list to the extreme points: exact convex hull in dimensions 1 and 2,
a per-vertex convex-combination feasibility solve (NNLS) in dimension >= 3.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import nnls

__all__ = [
    "Polytope",
    "SetComparison",
    "as_vector",
    "canonicalize",
    "conv_union",
    "exposed_vertices",
    "in_hull",
    "interval",
    "minkowski_sum",
    "point_polytope",
    "polytope",
    "reflect",
    "scale",
    "set_compare",
    "support_value",
    "support_values",
    "translate",
]

#: merge tolerance for coincident vertices (relative to coordinate scale)
_MERGE_TOL = 1e-12
#: residual tolerance for the NNLS convex-combination test
_HULL_TOL = 1e-9


def as_vector(x, dim: int | None = None) -> np.ndarray:
    """Validate and return ``x`` as a finite 1-D float array."""
    v = np.asarray(x, dtype=float)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise ValueError(f"dimension mismatch: expected {dim}, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector entries must be finite")
    return v


@dataclass(frozen=True, eq=False)
class Polytope:
    """Compact convex polytope stored as a finite vertex list.

    Parameters
    ----------
    vertices : array, shape (m, n)
        Vertex coordinates, one row per vertex.  Must be nonempty and finite.
    canonical : bool
        True when the rows are exactly the extreme points.
    approx : bool
        True when the polytope is a flagged stand-in for a non-polytopal set
        (currently only the Euclidean unit ball).
    """

    vertices: np.ndarray
    canonical: bool = False
    approx: bool = False

    def __post_init__(self):
        arr = np.array(self.vertices, dtype=float, copy=True)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        if arr.ndim != 2 or arr.shape[0] == 0:
            raise ValueError("polytope needs a nonempty (m, n) vertex array")
        if not np.all(np.isfinite(arr)):
            raise ValueError("polytope vertices must be finite")
        arr += 0.0  # normalize -0.0
        arr.setflags(write=False)
        object.__setattr__(self, "vertices", arr)

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def nvertices(self) -> int:
        return self.vertices.shape[0]

    def scale_hint(self) -> float:
        return float(np.max(np.abs(self.vertices), initial=0.0))

    def to_vertex_list(self) -> list[list[float]]:
        return [[float(c) for c in row] for row in self.vertices]

    @classmethod
    def from_vertex_list(cls, rows: Sequence[Sequence[float]], **kw) -> "Polytope":
        return cls(np.asarray(rows, dtype=float), **kw)

    def __repr__(self):
        flags = []
        if self.canonical:
            flags.append("canonical")
        if self.approx:
            flags.append("approx")
        tag = f" [{','.join(flags)}]" if flags else ""
        return f"Polytope({self.nvertices} vertices, dim {self.dim}{tag})"


def polytope(points: Iterable, canonical: bool = False, approx: bool = False) -> Polytope:
    return Polytope(np.asarray(list(points) if not isinstance(points, np.ndarray) else points, dtype=float), canonical, approx)


def point_polytope(x) -> Polytope:
    return Polytope(as_vector(x).reshape(1, -1), canonical=True)


def interval(lo: float, hi: float) -> Polytope:
    """One-dimensional polytope [lo, hi]."""
    if lo > hi:
        lo, hi = hi, lo
    verts = [[lo]] if lo == hi else [[lo], [hi]]
    return Polytope(np.asarray(verts, dtype=float), canonical=True)


def _check_dims(P: Polytope, Q: Polytope):
    if P.dim != Q.dim:
        raise ValueError(f"dimension mismatch: {P.dim} vs {Q.dim}")


def support_value(P: Polytope, v) -> float:
    """Support function s(v|P) = max over vertices of <p, v>."""
    v = as_vector(v, dim=P.dim)
    return float(np.max(P.vertices @ v))


def support_values(P: Polytope, dirs: np.ndarray) -> np.ndarray:
    """Vectorized support values for a (k, n) array of directions."""
    if dirs.shape[1] != P.dim:
        raise ValueError(f"dimension mismatch: {P.dim} vs {dirs.shape[1]}")
    return np.max(dirs @ P.vertices.T, axis=1)


def exposed_vertices(P: Polytope, v, tie_tol: float = 0.0) -> tuple[np.ndarray, bool]:
    """Vertices attaining the support value within ``tie_tol``.

    Returns the qualifying vertex rows and a tie flag that is true when the
    max-face generated by ``v`` holds more than one distinct vertex.
    """
    if tie_tol < 0:
        raise ValueError("tie_tol must be nonnegative")
    v = as_vector(v, dim=P.dim)
    dots = P.vertices @ v
    s = np.max(dots)
    sel = P.vertices[dots >= s - tie_tol]
    distinct = _dedupe(sel)
    return sel, distinct.shape[0] > 1


def minkowski_sum(P: Polytope, Q: Polytope) -> Polytope:
    """Minkowski sum; supports add: s(v|P+Q) = s(v|P) + s(v|Q)."""
    _check_dims(P, Q)
    sums = (P.vertices[:, None, :] + Q.vertices[None, :, :]).reshape(-1, P.dim)
    return canonicalize(Polytope(sums, approx=P.approx or Q.approx))


def scale(alpha: float, P: Polytope) -> Polytope:
    """Scalar multiple alpha*P; negative alpha reflects the set."""
    alpha = float(alpha)
    if not np.isfinite(alpha):
        raise ValueError("scale factor must be finite")
    if alpha == 0.0:
        return Polytope(np.zeros((1, P.dim)), canonical=True)
    # reflection reverses the canonical vertex ordering, so drop the flag
    keep_canonical = P.canonical and alpha > 0.0
    return Polytope(alpha * P.vertices, canonical=keep_canonical, approx=P.approx)


def reflect(P: Polytope) -> Polytope:
    return scale(-1.0, P)


def translate(P: Polytope, t) -> Polytope:
    t = as_vector(t, dim=P.dim)
    return Polytope(P.vertices + t, canonical=P.canonical, approx=P.approx)


def conv_union(Ps: Sequence[Polytope]) -> Polytope:
    """Convex hull of the union of a nonempty polytope family."""
    if len(Ps) == 0:
        raise ValueError("conv_union of an empty family")
    dim = Ps[0].dim
    for P in Ps[1:]:
        if P.dim != dim:
            raise ValueError("conv_union over mismatched dimensions")
    stacked = np.vstack([P.vertices for P in Ps])
    return canonicalize(Polytope(stacked, approx=any(P.approx for P in Ps)))


def _dedupe(arr: np.ndarray) -> np.ndarray:
    """Merge rows that coincide up to _MERGE_TOL (keeps first in lex order)."""
    if arr.shape[0] <= 1:
        return arr
    order = np.lexsort(arr.T[::-1])
    srt = arr[order]
    tol = _MERGE_TOL * (1.0 + np.max(np.abs(arr)))
    keep = [0]
    for i in range(1, srt.shape[0]):
        if np.max(np.abs(srt[i] - srt[keep[-1]])) > tol:
            keep.append(i)
    return srt[keep]


def _hull_1d(arr: np.ndarray) -> np.ndarray:
    lo, hi = float(np.min(arr)), float(np.max(arr))
    if hi - lo <= _MERGE_TOL * (1.0 + abs(lo) + abs(hi)):
        return np.array([[lo]])
    return np.array([[lo], [hi]])


def _hull_2d(arr: np.ndarray) -> np.ndarray:
    """Andrew monotone chain; CCW order starting at the lex-min vertex."""
    pts = _dedupe(arr)
    if pts.shape[0] <= 2:
        return pts

    def not_left_turn(o, a, b):
        # collinearity threshold relative to the edge lengths (sine test),
        # so sliver triangles with one tiny side are not collapsed
        cross = (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
        la = np.hypot(a[0] - o[0], a[1] - o[1])
        lb = np.hypot(b[0] - o[0], b[1] - o[1])
        return cross <= _MERGE_TOL * la * lb

    lower: list[np.ndarray] = []
    for p in pts:
        while len(lower) >= 2 and not_left_turn(lower[-2], lower[-1], p):
            lower.pop()
        lower.append(p)
    upper: list[np.ndarray] = []
    for p in pts[::-1]:
        while len(upper) >= 2 and not_left_turn(upper[-2], upper[-1], p):
            upper.pop()
        upper.append(p)
    hull = np.asarray(lower[:-1] + upper[:-1])
    if hull.shape[0] == 0:
        hull = pts[:1]
    return hull


def _extreme_mask_nd(arr: np.ndarray) -> np.ndarray:
    """Flag extreme rows in dim >= 3 by a per-vertex NNLS feasibility solve."""
    m = arr.shape[0]
    if m <= 2:
        return np.ones(m, dtype=bool)
    from .directions import direction_set  # local import, avoids cycle at load

    # cheap prefilter: a strict unique argmax over sampled directions is extreme
    dirs = direction_set(arr.shape[1], min(512, 64 * arr.shape[1]))
    dots = dirs @ arr.T
    best = np.argmax(dots, axis=1)
    part = np.partition(dots, -2, axis=1)
    strict = part[:, -1] - part[:, -2] > _MERGE_TOL * (1.0 + np.abs(part[:, -1]))
    surely = np.zeros(m, dtype=bool)
    surely[np.unique(best[strict])] = True

    keep = surely.copy()
    scale_ = 1.0 + float(np.max(np.abs(arr)))
    for i in range(m):
        if surely[i]:
            continue
        others = arr[np.arange(m) != i]
        keep[i] = not _point_in_hull_nnls(arr[i], others, _HULL_TOL * scale_)
    return keep


def _point_in_hull_nnls(x: np.ndarray, verts: np.ndarray, tol: float) -> bool:
    A = np.vstack([verts.T, np.ones(verts.shape[0])])
    b = np.concatenate([x, [1.0]])
    try:
        w, _ = nnls(A, b)
    except RuntimeError:
        return False
    # the residual norm reported by scipy's nnls is unreliable in some
    # versions; recompute it from the solution
    return float(np.linalg.norm(A @ w - b)) <= tol


def canonicalize(P: Polytope) -> Polytope:
    """Reduce the vertex list to the extreme points.

    Exact in dimensions 1 and 2; in dimension >= 3 each candidate is tested
    for membership in the hull of the others (NNLS feasibility).
    """
    if P.canonical:
        return P
    if P.dim == 1:
        hull = _hull_1d(P.vertices)
    elif P.dim == 2:
        hull = _hull_2d(P.vertices)
    else:
        pts = _dedupe(P.vertices)
        pts = pts[_extreme_mask_nd(pts)] if pts.shape[0] > 2 else pts
        order = np.lexsort(pts.T[::-1])
        hull = pts[order]
    return Polytope(hull, canonical=True, approx=P.approx)


def in_hull(x, P: Polytope, tol: float = _HULL_TOL) -> bool:
    """Membership test x in P, within an absolute slack ``tol``."""
    x = as_vector(x, dim=P.dim)
    if P.dim == 1:
        flat = P.vertices[:, 0]
        return float(np.min(flat)) - tol <= x[0] <= float(np.max(flat)) + tol
    if P.dim == 2:
        return _dist_point_polygon(x, canonicalize(P).vertices) <= tol
    return _point_in_hull_nnls(x, P.vertices, tol)


def _dist_point_segment(x: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    d = b - a
    den = float(d @ d)
    t = 0.0 if den == 0.0 else float(np.clip((x - a) @ d / den, 0.0, 1.0))
    return float(np.linalg.norm(x - (a + t * d)))


def _dist_point_polygon(x: np.ndarray, hull: np.ndarray) -> float:
    """Euclidean distance from x to a CCW-ordered convex polygon (0 inside)."""
    m = hull.shape[0]
    if m == 1:
        return float(np.linalg.norm(x - hull[0]))
    if m == 2:
        return _dist_point_segment(x, hull[0], hull[1])
    inside = True
    for i in range(m):
        a, b = hull[i], hull[(i + 1) % m]
        crossv = (b[0] - a[0]) * (x[1] - a[1]) - (b[1] - a[1]) * (x[0] - a[0])
        if crossv < 0.0:
            inside = False
            break
    if inside:
        return 0.0
    return min(_dist_point_segment(x, hull[i], hull[(i + 1) % m]) for i in range(m))


@dataclass(frozen=True)
class SetComparison:
    relation: str  # "equal" | "subset" | "superset" | "incomparable"
    hausdorff: float


def _contains(P: Polytope, Q: Polytope, tol: float) -> bool:
    """True when Q is inside P (within tol), exact in dims 1-2."""
    if P.dim == 1:
        pf, qf = P.vertices[:, 0], Q.vertices[:, 0]
        return np.min(qf) >= np.min(pf) - tol and np.max(qf) <= np.max(pf) + tol
    hullP = canonicalize(P)
    if P.dim == 2:
        return all(_dist_point_polygon(q, hullP.vertices) <= tol for q in Q.vertices)
    return all(_point_in_hull_nnls(q, hullP.vertices, tol) for q in Q.vertices)


def _hausdorff_low_dim(P: Polytope, Q: Polytope) -> float:
    Pc, Qc = canonicalize(P), canonicalize(Q)
    if P.dim == 1:
        pl, ph = float(np.min(Pc.vertices)), float(np.max(Pc.vertices))
        ql, qh = float(np.min(Qc.vertices)), float(np.max(Qc.vertices))
        return max(abs(pl - ql), abs(ph - qh))
    a = max(_dist_point_polygon(p, Qc.vertices) for p in Pc.vertices)
    b = max(_dist_point_polygon(q, Pc.vertices) for q in Qc.vertices)
    return max(a, b)


def set_compare(P: Polytope, Q: Polytope, tol: float = 1e-9) -> SetComparison:
    """Set relation between two polytopes plus a Hausdorff estimate.

    Dimensions 1 and 2 are decided exactly from canonical hulls.  In
    dimension >= 3 the decision is made from support values over the fixed
    deterministic direction set; the Hausdorff figure is then the maximum
    support gap over that set (a lower estimate of the true distance).
    """
    _check_dims(P, Q)
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    if P.dim <= 2:
        p_in_q = _contains(Q, P, tol)
        q_in_p = _contains(P, Q, tol)
        h = _hausdorff_low_dim(P, Q)
    else:
        from .directions import direction_set

        dirs = direction_set(P.dim, 4096)
        sp = support_values(P, dirs)
        sq = support_values(Q, dirs)
        p_in_q = bool(np.max(sp - sq) <= tol)
        q_in_p = bool(np.max(sq - sp) <= tol)
        h = float(np.max(np.abs(sp - sq)))
    if p_in_q and q_in_p:
        return SetComparison("equal", h)
    if p_in_q:
        return SetComparison("subset", h)
    if q_in_p:
        return SetComparison("superset", h)
    return SetComparison("incomparable", h)
