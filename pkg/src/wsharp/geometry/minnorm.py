"""Min-norm-point solver with compiled/pure-Python kernel selection.

At import time the Cython kernel ``wsharp._kernels`` is preferred; when it
is not built (or ``WSHARP_PURE_PYTHON`` is set) the numpy twin in
``_minnorm_py`` is used.  Both implement the same Wolfe corral algorithm
and agree to solver tolerance; ``benchmarks/bench_minnorm.py`` compares
their speed.
"""

from __future__ import annotations

import os

import numpy as np

from ._minnorm_py import STATUS_ITER_CAP, wolfe_min_norm as _py_wolfe
from .polytope import Polytope, canonicalize, translate

__all__ = [
    "KERNEL",
    "MinNormNonConvergence",
    "hausdorff_distance",
    "min_norm_point",
    "origin_distance",
]

_compiled = None
if not os.environ.get("WSHARP_PURE_PYTHON"):
    try:
        from wsharp import _kernels as _compiled  # type: ignore[no-redef]
    except ImportError:
        _compiled = None

#: selected kernel, "compiled" or "python"
KERNEL = "compiled" if _compiled is not None else "python"


class MinNormNonConvergence(RuntimeError):
    """Wolfe iteration cap exceeded (reported, never silently ignored)."""


def _run_kernel(verts: np.ndarray, tol: float, max_iter: int):
    if _compiled is not None:
        x = np.empty(verts.shape[1])
        status, iters = _compiled.wolfe_min_norm(
            np.ascontiguousarray(verts, dtype=float), tol, max_iter, x
        )
        if status < 0:
            # numerical breakdown in the C path: retry with the numpy twin
            return _py_wolfe(verts, tol, max_iter)
        return x, status, iters
    return _py_wolfe(verts, tol, max_iter)


def min_norm_point(P: Polytope, tol: float = 1e-10, max_iter: int | None = None) -> tuple[np.ndarray, float]:
    """Euclidean projection of the origin onto ``P`` and its norm.

    The default iteration cap is ``10 * nvertices * dim``.  Non-convergence
    raises :class:`MinNormNonConvergence`.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    verts = P.vertices
    if max_iter is None:
        max_iter = max(10 * verts.shape[0] * verts.shape[1], 10)
    x, status, iters = _run_kernel(verts, tol, max_iter)
    if status == STATUS_ITER_CAP:
        raise MinNormNonConvergence(
            f"min-norm point did not converge in {iters} iterations "
            f"({verts.shape[0]} vertices, dim {verts.shape[1]}, tol {tol})"
        )
    return x, float(np.linalg.norm(x))


def origin_distance(P: Polytope, tol: float = 1e-10) -> float:
    return min_norm_point(P, tol)[1]


def hausdorff_distance(P: Polytope, Q: Polytope, tol: float = 1e-10) -> float:
    """Exact Hausdorff distance between convex polytopes.

    For convex sets the supremum of the point-to-set distance is attained at
    a vertex, so it reduces to min-norm solves on translated copies.
    """
    if P.dim != Q.dim:
        raise ValueError(f"dimension mismatch: {P.dim} vs {Q.dim}")
    Pc, Qc = canonicalize(P), canonicalize(Q)
    a = max(origin_distance(translate(Qc, -p), tol) for p in Pc.vertices)
    b = max(origin_distance(translate(Pc, -q), tol) for q in Qc.vertices)
    return max(a, b)
