"""Lower exhausters and numerical Hadamard derivative estimators.

A lower exhauster of a positively homogeneous function h is a family of
compact convex sets E with h(v) = inf over the family of s(v|E).  Its
"norm" sup_E dist(0, E) drives the exhauster-based nondegeneracy
certificates.  For expression-defined functions the family is constructed
symbolically at a point: a min node of locally convex pieces contributes
one member per active piece, and in general the quasidifferential pair
(sub, sup) yields the family {sub + w : w vertex of sup}, since

    f'(x; v) = s(v|sub) + min_{w in sup} <w, v> = min_w s(v | sub + w).

The Hadamard lower/upper derivative estimators are fixed-schedule sampling
surrogates for the liminf/limsup difference quotients.  They are
estimators, not certificates; reports must mark quantities derived from
them as numerical.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .geometry import (
    Polytope,
    as_vector,
    canonicalize,
    origin_distance,
    stencil,
    support_value,
    translate,
)
from .qdcalc import ACTIVE_TOL, FuncExpr, Min, evaluate, quasidiff

__all__ = [
    "HadamardSchedule",
    "LowerExhauster",
    "exhauster_eval",
    "exhauster_from_minmax",
    "exhauster_norm",
    "hadamard_lower_estimate",
    "hadamard_upper_estimate",
    "symbolic_lower_exhauster",
]

#: quotients beyond this magnitude at the finest scales are reported as +-inf
BLOWUP = 1e12


@dataclass(frozen=True)
class LowerExhauster:
    """Finite family of polytopes representing h = inf of member supports."""

    members: tuple[Polytope, ...]

    def __post_init__(self):
        members = tuple(self.members)
        if len(members) == 0:
            raise ValueError("exhauster needs at least one member")
        dims = {m.dim for m in members}
        if len(dims) != 1:
            raise ValueError("exhauster members disagree on dimension")
        object.__setattr__(self, "members", members)

    @property
    def dim(self) -> int:
        return self.members[0].dim

    def to_json(self) -> list:
        return [m.to_vertex_list() for m in self.members]

    @classmethod
    def from_json(cls, rows: Sequence) -> "LowerExhauster":
        return cls(tuple(Polytope.from_vertex_list(r) for r in rows))


def exhauster_eval(E: LowerExhauster, v) -> float:
    """Represented function value: min over members of the support value."""
    v = as_vector(v, dim=E.dim)
    return min(support_value(m, v) for m in E.members)


def exhauster_norm(E: LowerExhauster, tol: float = 1e-10) -> float:
    """Family norm: max over members of the distance from the origin."""
    return max(origin_distance(m, tol) for m in E.members)


def exhauster_from_minmax(pieces: Sequence[Sequence]) -> LowerExhauster:
    """Exhauster of h = min_i max_j <a_ij, .>: member i = conv of row i."""
    if len(pieces) == 0:
        raise ValueError("need at least one row")
    members = []
    for i, row in enumerate(pieces):
        if len(row) == 0:
            raise ValueError(f"row {i} is empty")
        rows = np.atleast_2d(np.asarray(row, dtype=float))
        members.append(canonicalize(Polytope(rows)))
    return LowerExhauster(tuple(members))


def symbolic_lower_exhauster(e: FuncExpr, x, active_tol: float = ACTIVE_TOL) -> LowerExhauster:
    """Lower exhauster of the directional derivative of ``e`` at ``x``.

    A min of locally convex pieces maps to one member per active piece;
    any other expression goes through its quasidifferential pair.
    """
    x = as_vector(x, dim=e.dim)
    if isinstance(e, Min):
        values = np.array([float(evaluate(c, x)) for c in e.children])
        best = float(np.min(values))
        band = active_tol * (1.0 + abs(best))
        active = [c for c, v in zip(e.children, values) if v <= best + band]
        pairs = [quasidiff(c, x, active_tol) for c in active]
        if all(_is_zero_set(q.sup) for q in pairs):
            return LowerExhauster(tuple(q.sub for q in pairs))
    q = quasidiff(e, x, active_tol)
    members = tuple(canonicalize(translate(q.sub, w)) for w in q.sup.vertices)
    return LowerExhauster(members)


def _is_zero_set(P: Polytope, tol: float = 1e-12) -> bool:
    return bool(np.all(np.abs(P.vertices) <= tol))


@dataclass(frozen=True)
class HadamardSchedule:
    """Versioned sampling schedule for the Hadamard derivative estimators.

    Scales t_k = 2^-k for k in [k_min, k_max]; per scale, t runs over
    ``t_samples`` points of [t_k, 2 t_k] and the direction is perturbed by
    delta * u with delta in {0, t_k/2, t_k} and u in the fixed stencil.
    """

    k_min: int = 6
    k_max: int = 20
    t_samples: int = 5
    stencil_size: int = 8


DEFAULT_SCHEDULE = HadamardSchedule()


def _as_batch_fn(f) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(f, FuncExpr):
        return lambda X: np.asarray(evaluate(f, X), dtype=float)
    if callable(f):
        return lambda X: np.asarray(f(X), dtype=float)
    raise TypeError("expected a FuncExpr or a batch callable")


def _band_quotients(fn, x: np.ndarray, v: np.ndarray, k: int, sched: HadamardSchedule):
    """All sampled difference quotients of one scale band, as a flat array."""
    dim = x.shape[0]
    tk = 2.0 ** (-k)
    ts = np.linspace(tk, 2.0 * tk, sched.t_samples)
    st = stencil(dim, sched.stencil_size)
    vprimes = [v]
    for delta in (0.5 * tk, tk):
        vprimes.extend(v + delta * u for u in st)
    V = np.asarray(vprimes)
    pts = x[None, None, :] + ts[:, None, None] * V[None, :, :]
    f0 = float(fn(x.reshape(1, -1))[0])
    vals = fn(pts.reshape(-1, dim)).reshape(len(ts), len(vprimes))
    return ((vals - f0) / ts[:, None]).ravel()


def _hadamard_estimate(f, x, v, sched: HadamardSchedule, lower: bool) -> float:
    fn = _as_batch_fn(f)
    x = as_vector(x)
    v = as_vector(v, dim=x.shape[0])
    band_vals = []
    for k in range(sched.k_min, sched.k_max + 1):
        q = _band_quotients(fn, x, v, k, sched)
        if not np.all(np.isfinite(q)):
            return -np.inf if lower else np.inf
        band_vals.append(float(np.min(q)) if lower else float(np.max(q)))
    # the limit is read off the finest band; earlier bands only feed the
    # blow-up sentinel (taking an extremum across all bands would let a
    # coarse band's curvature bias win over the limit)
    est = band_vals[-1]
    if abs(est) > BLOWUP or abs(band_vals[0]) > BLOWUP:
        blow = est if abs(est) >= abs(band_vals[0]) else band_vals[0]
        return np.inf if blow > 0 else -np.inf
    return est


def hadamard_lower_estimate(f, x, v, schedule: HadamardSchedule = DEFAULT_SCHEDULE) -> float:
    """Numerical Hadamard lower derivative (liminf over v' -> v, t -> 0+).

    Per scale band the minimum sampled quotient is taken; the estimate is
    the finest band's minimum.
    """
    return _hadamard_estimate(f, x, v, schedule, lower=True)


def hadamard_upper_estimate(f, x, v, schedule: HadamardSchedule = DEFAULT_SCHEDULE) -> float:
    """Numerical Hadamard upper derivative; swaps min and max."""
    return _hadamard_estimate(f, x, v, schedule, lower=False)
