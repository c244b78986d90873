"""Convex-polytope kernel: support functions, Minkowski arithmetic,
canonical hulls, set comparison, and the min-norm point."""

from .directions import DEFAULT_SEED, direction_set, stencil
from .minnorm import (
    KERNEL,
    MinNormNonConvergence,
    hausdorff_distance,
    min_norm_point,
    origin_distance,
)
from .polytope import (
    Polytope,
    SetComparison,
    as_vector,
    canonicalize,
    conv_union,
    exposed_vertices,
    in_hull,
    interval,
    minkowski_sum,
    point_polytope,
    polytope,
    reflect,
    scale,
    set_compare,
    support_value,
    support_values,
    translate,
)

__all__ = [
    "DEFAULT_SEED",
    "KERNEL",
    "MinNormNonConvergence",
    "Polytope",
    "SetComparison",
    "as_vector",
    "canonicalize",
    "conv_union",
    "direction_set",
    "exposed_vertices",
    "hausdorff_distance",
    "in_hull",
    "interval",
    "min_norm_point",
    "minkowski_sum",
    "origin_distance",
    "point_polytope",
    "polytope",
    "reflect",
    "scale",
    "set_compare",
    "stencil",
    "support_value",
    "support_values",
    "translate",
]
