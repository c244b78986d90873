"""Expression language with exact quasidifferential calculus.

A function f is assembled from atoms (affine forms, the Euclidean norm,
smooth polynomials, registered built-ins) and combinators (sum, scalar
multiple, negation, pointwise max/min, positive part, absolute value).
Every expression is evaluated exactly and carries a quasidifferential
oracle: at a point x it produces a pair of polytopes (sub, sup) such that
the directional derivative satisfies

    f'(x; v) = s(v | sub) - s(v | -sup)      for all v,

where s is the support function.  The pair is one representative of the
equivalence class [(A, B) ~ (C, D) iff A + D = B + C]; the calculus
returns the canonical textbook representative and never tries to shrink it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .geometry import (
    Polytope,
    as_vector,
    canonicalize,
    conv_union,
    direction_set,
    interval,
    minkowski_sum,
    point_polytope,
    reflect,
    scale,
    support_value,
    support_values,
)

__all__ = [
    "Abs",
    "Affine",
    "BuiltinFn",
    "ExprFormatError",
    "FuncExpr",
    "Max",
    "Min",
    "Neg",
    "Norm2",
    "PosPart",
    "QuasiDiff",
    "Scale",
    "SmoothPoly",
    "Sum",
    "builtin_names",
    "constant",
    "dir_derivative",
    "evaluate",
    "expr_from_json",
    "expr_to_json",
    "qd_abs",
    "qd_equiv",
    "qd_pospart",
    "quasidiff",
    "register_builtin",
    "unit_ball_polytope",
]

#: default activity band at max/min nodes: branch i is active iff
#: value_i >= max - ACTIVE_TOL * (1 + |max|)
ACTIVE_TOL = 1e-9


# ---------------------------------------------------------------------------
# quasidifferential pairs


@dataclass(frozen=True)
class QuasiDiff:
    """Representative pair (sub, sup) of a quasidifferential class."""

    sub: Polytope
    sup: Polytope

    def __post_init__(self):
        if self.sub.dim != self.sup.dim:
            raise ValueError("sub/sup dimension mismatch")

    @property
    def dim(self) -> int:
        return self.sub.dim

    @property
    def approx(self) -> bool:
        return self.sub.approx or self.sup.approx


def dir_derivative(q: QuasiDiff, v) -> float:
    """Directional derivative s(v|sub) - s(v|-sup) encoded by the pair."""
    v = as_vector(v, dim=q.dim)
    return support_value(q.sub, v) - support_value(reflect(q.sup), v)


def qd_equiv(q1: QuasiDiff, q2: QuasiDiff, tol: float = 1e-9) -> bool:
    """Class equality test: equal directional derivatives on the fixed
    direction set, within ``tol`` relative to the derivative scale."""
    if q1.dim != q2.dim:
        raise ValueError("dimension mismatch")
    if q1.dim == 1:
        dirs = np.array([[1.0], [-1.0]])
    else:
        dirs = direction_set(q1.dim, 4096)
    d1 = support_values(q1.sub, dirs) - support_values(reflect(q1.sup), dirs)
    d2 = support_values(q2.sub, dirs) - support_values(reflect(q2.sup), dirs)
    scale_ = 1.0 + max(np.max(np.abs(d1)), np.max(np.abs(d2)))
    return bool(np.max(np.abs(d1 - d2)) <= tol * scale_)


def _negate_pair(q: QuasiDiff) -> QuasiDiff:
    # D(-f) swaps the pair with reflection: sub(-f) = -sup(f), sup(-f) = -sub(f)
    return QuasiDiff(reflect(q.sup), reflect(q.sub))


def qd_pospart(qg: QuasiDiff, g_at_x: float, tol: float = ACTIVE_TOL) -> QuasiDiff:
    """Quasidifferential of [g]_+ from that of g, by the sign of g(x).

    On the boundary band |g(x)| <= tol*(1+|g(x)|) the max-with-zero rule
    applies: sub = clco[sub_g u (-sup_g)], sup = sup_g.
    """
    band = tol * (1.0 + abs(g_at_x))
    if g_at_x > band:
        return qg
    if g_at_x < -band:
        zero = point_polytope(np.zeros(qg.dim))
        return QuasiDiff(zero, zero)
    sub = conv_union([qg.sub, reflect(qg.sup)])
    return QuasiDiff(sub, qg.sup)


def qd_abs(qh: QuasiDiff, h_at_x: float, tol: float = ACTIVE_TOL) -> QuasiDiff:
    """Quasidifferential of |h| from that of h, by the sign of h(x).

    On the boundary band the max rule for h v (-h) gives
    sub = 2 clco[sub_h u (-sup_h)] and sup = sup_h - sub_h (Minkowski).
    """
    band = tol * (1.0 + abs(h_at_x))
    if h_at_x > band:
        return qh
    if h_at_x < -band:
        return _negate_pair(qh)
    sub = scale(2.0, conv_union([qh.sub, reflect(qh.sup)]))
    sup = minkowski_sum(qh.sup, reflect(qh.sub))
    return QuasiDiff(sub, sup)


def unit_ball_polytope(dim: int) -> Polytope:
    """Polytope stand-in for the Euclidean unit ball.

    Exact in dimension 1.  Dimension 2 uses a regular 32-gon, dimension >= 3
    the hull of the cross-polytope and the sphere-scaled box corners; both
    are inner approximations flagged ``approx=True``.
    """
    if dim == 1:
        return interval(-1.0, 1.0)
    if dim == 2:
        ang = 2.0 * np.pi * np.arange(32) / 32
        verts = np.column_stack([np.cos(ang), np.sin(ang)])
        return Polytope(verts, canonical=True, approx=True)
    cross = np.vstack([np.eye(dim), -np.eye(dim)])
    corners = np.array(np.meshgrid(*([[-1.0, 1.0]] * dim))).T.reshape(-1, dim)
    verts = np.vstack([cross, corners / np.sqrt(dim)])
    return canonicalize(Polytope(verts, approx=True))


# ---------------------------------------------------------------------------
# expression nodes


class FuncExpr:
    """Base class of expression nodes; ``dim`` is the ambient dimension."""

    dim: int

    def __call__(self, x):
        return evaluate(self, x)


@dataclass(frozen=True)
class Affine(FuncExpr):
    a: tuple[float, ...]
    b: float

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(float(c) for c in self.a))
        object.__setattr__(self, "b", float(self.b))
        if len(self.a) == 0:
            raise ValueError("affine atom needs a nonempty gradient")

    @property
    def dim(self) -> int:
        return len(self.a)


@dataclass(frozen=True)
class Norm2(FuncExpr):
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("norm2 needs a positive dimension")


@dataclass(frozen=True)
class SmoothPoly(FuncExpr):
    """Multivariate polynomial, terms = ((coeff, powers), ...)."""

    terms: tuple[tuple[float, tuple[int, ...]], ...]

    def __post_init__(self):
        if len(self.terms) == 0:
            raise ValueError("polynomial needs at least one term")
        norm = tuple((float(c), tuple(int(p) for p in pw)) for c, pw in self.terms)
        dims = {len(pw) for _, pw in norm}
        if len(dims) != 1:
            raise ValueError("polynomial terms disagree on dimension")
        if any(p < 0 for _, pw in norm for p in pw):
            raise ValueError("polynomial powers must be nonnegative")
        object.__setattr__(self, "terms", norm)

    @property
    def dim(self) -> int:
        return len(self.terms[0][1])


@dataclass(frozen=True)
class BuiltinFn(FuncExpr):
    name: str

    def __post_init__(self):
        if self.name not in _BUILTINS:
            raise ValueError(f"unknown builtin function {self.name!r}")

    @property
    def dim(self) -> int:
        return _BUILTINS[self.name].dim


def _common_dim(children: Sequence[FuncExpr]) -> int:
    if len(children) == 0:
        raise ValueError("combinator needs at least one child")
    dims = {c.dim for c in children}
    if len(dims) != 1:
        raise ValueError(f"children disagree on dimension: {sorted(dims)}")
    return dims.pop()


@dataclass(frozen=True)
class Sum(FuncExpr):
    children: tuple[FuncExpr, ...]

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        _common_dim(self.children)

    @property
    def dim(self) -> int:
        return self.children[0].dim


@dataclass(frozen=True)
class Scale(FuncExpr):
    alpha: float
    child: FuncExpr

    def __post_init__(self):
        object.__setattr__(self, "alpha", float(self.alpha))
        if not np.isfinite(self.alpha):
            raise ValueError("scale factor must be finite")

    @property
    def dim(self) -> int:
        return self.child.dim


@dataclass(frozen=True)
class Neg(FuncExpr):
    child: FuncExpr

    @property
    def dim(self) -> int:
        return self.child.dim


@dataclass(frozen=True)
class Max(FuncExpr):
    children: tuple[FuncExpr, ...]

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        _common_dim(self.children)

    @property
    def dim(self) -> int:
        return self.children[0].dim


@dataclass(frozen=True)
class Min(FuncExpr):
    children: tuple[FuncExpr, ...]

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        _common_dim(self.children)

    @property
    def dim(self) -> int:
        return self.children[0].dim


@dataclass(frozen=True)
class PosPart(FuncExpr):
    child: FuncExpr

    @property
    def dim(self) -> int:
        return self.child.dim


@dataclass(frozen=True)
class Abs(FuncExpr):
    child: FuncExpr

    @property
    def dim(self) -> int:
        return self.child.dim


def constant(value: float, dim: int) -> Affine:
    return Affine(a=(0.0,) * dim, b=float(value))


# ---------------------------------------------------------------------------
# evaluation (batched: x of shape (dim,) or (N, dim))


def evaluate(e: FuncExpr, x) -> float | np.ndarray:
    """Exact recursive evaluation; broadcasts over leading axes of ``x``."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.shape[-1] != e.dim:
        raise ValueError(f"dimension mismatch: expression dim {e.dim}, point dim {arr.shape[-1]}")
    out = _eval(e, arr)
    if arr.ndim == 1:
        return float(out)
    return out


def _eval(e: FuncExpr, X: np.ndarray) -> np.ndarray:
    if isinstance(e, Affine):
        return X @ np.asarray(e.a) + e.b
    if isinstance(e, Norm2):
        return np.linalg.norm(X, axis=-1)
    if isinstance(e, SmoothPoly):
        out = np.zeros(X.shape[:-1])
        for coeff, powers in e.terms:
            out = out + coeff * np.prod(X ** np.asarray(powers), axis=-1)
        return out
    if isinstance(e, BuiltinFn):
        return _BUILTINS[e.name].evaluate(X)
    if isinstance(e, Sum):
        return sum(_eval(c, X) for c in e.children)
    if isinstance(e, Scale):
        return e.alpha * _eval(e.child, X)
    if isinstance(e, Neg):
        return -_eval(e.child, X)
    if isinstance(e, Max):
        return np.max(np.stack([_eval(c, X) for c in e.children]), axis=0)
    if isinstance(e, Min):
        return np.min(np.stack([_eval(c, X) for c in e.children]), axis=0)
    if isinstance(e, PosPart):
        return np.maximum(_eval(e.child, X), 0.0)
    if isinstance(e, Abs):
        return np.abs(_eval(e.child, X))
    raise TypeError(f"unknown expression node {type(e).__name__}")


# ---------------------------------------------------------------------------
# quasidifferential calculus


def quasidiff(e: FuncExpr, x, active_tol: float = ACTIVE_TOL) -> QuasiDiff:
    """Quasidifferential pair of ``e`` at ``x`` (canonicalized representative).

    Sum and scalar rules are exact; max/min nodes use the activity band
    ``active_tol`` to decide which branches join the pointwise max rule.
    """
    x = as_vector(x, dim=e.dim)
    q = _qd(e, x, active_tol)
    return QuasiDiff(canonicalize(q.sub), canonicalize(q.sup))


def _pack(sub_vertices, sup_vertices, approx=False) -> QuasiDiff:
    return QuasiDiff(
        Polytope(np.atleast_2d(np.asarray(sub_vertices, dtype=float)), approx=approx),
        Polytope(np.atleast_2d(np.asarray(sup_vertices, dtype=float))),
    )


def _smooth_pair(grad: np.ndarray) -> QuasiDiff:
    zero = np.zeros_like(grad)
    return _pack(grad.reshape(1, -1), zero.reshape(1, -1))


def _poly_gradient(e: SmoothPoly, x: np.ndarray) -> np.ndarray:
    g = np.zeros(e.dim)
    for coeff, powers in e.terms:
        for i, p in enumerate(powers):
            if p == 0:
                continue
            mono = coeff * p
            for j, pj in enumerate(powers):
                pw = pj - 1 if j == i else pj
                if pw:
                    mono = mono * x[j] ** pw
            g[i] += mono
    return g


def _maybe_shrink(P: Polytope) -> Polytope:
    # keep intermediate vertex lists from exploding in deep trees
    if P.nvertices > 48:
        return canonicalize(P)
    return P


def _qd(e: FuncExpr, x: np.ndarray, tol: float) -> QuasiDiff:
    if isinstance(e, Affine):
        return _smooth_pair(np.asarray(e.a))
    if isinstance(e, SmoothPoly):
        return _smooth_pair(_poly_gradient(e, x))
    if isinstance(e, Norm2):
        nrm = float(np.linalg.norm(x))
        if nrm > 1e-12:
            return _smooth_pair(x / nrm)
        zero = point_polytope(np.zeros(e.dim))
        return QuasiDiff(unit_ball_polytope(e.dim), zero)
    if isinstance(e, BuiltinFn):
        return _BUILTINS[e.name].quasidiff(x)
    if isinstance(e, Sum):
        pairs = [_qd(c, x, tol) for c in e.children]
        sub = pairs[0].sub
        sup = pairs[0].sup
        for q in pairs[1:]:
            sub = _maybe_shrink(minkowski_sum(sub, q.sub))
            sup = _maybe_shrink(minkowski_sum(sup, q.sup))
        return QuasiDiff(sub, sup)
    if isinstance(e, Scale):
        q = _qd(e.child, x, tol)
        if e.alpha >= 0.0:
            return QuasiDiff(scale(e.alpha, q.sub), scale(e.alpha, q.sup))
        return QuasiDiff(scale(e.alpha, q.sup), scale(e.alpha, q.sub))
    if isinstance(e, Neg):
        return _negate_pair(_qd(e.child, x, tol))
    if isinstance(e, (Max, Min)):
        values = np.array([float(_eval(c, x)) for c in e.children])
        best = np.max(values) if isinstance(e, Max) else np.min(values)
        band = tol * (1.0 + abs(best))
        if isinstance(e, Max):
            active = [i for i, v in enumerate(values) if v >= best - band]
        else:
            active = [i for i, v in enumerate(values) if v <= best + band]
        pairs = [_qd(e.children[i], x, tol) for i in active]
        if len(pairs) == 1:
            return pairs[0]
        if isinstance(e, Max):
            return _max_rule(pairs)
        return _negate_pair(_max_rule([_negate_pair(q) for q in pairs]))
    if isinstance(e, PosPart):
        val = float(_eval(e.child, x))
        return qd_pospart(_qd(e.child, x, tol), val, tol)
    if isinstance(e, Abs):
        val = float(_eval(e.child, x))
        return qd_abs(_qd(e.child, x, tol), val, tol)
    raise TypeError(f"unknown expression node {type(e).__name__}")


def _max_rule(pairs: Sequence[QuasiDiff]) -> QuasiDiff:
    """Pointwise max rule for branches active at equal values:
    sub = clco over i of [sub_i + sum_{j != i} (-sup_j)], sup = sum sup_i."""
    hull_parts = []
    for i, qi in enumerate(pairs):
        part = qi.sub
        for j, qj in enumerate(pairs):
            if j != i:
                part = _maybe_shrink(minkowski_sum(part, reflect(qj.sup)))
        hull_parts.append(part)
    sub = conv_union(hull_parts)
    sup = pairs[0].sup
    for q in pairs[1:]:
        sup = _maybe_shrink(minkowski_sum(sup, q.sup))
    return QuasiDiff(sub, sup)


# ---------------------------------------------------------------------------
# builtin registry (named scenario functions with exact oracles)


@dataclass(frozen=True)
class _Builtin:
    name: str
    dim: int
    evaluate: Callable[[np.ndarray], np.ndarray]
    quasidiff: Callable[[np.ndarray], QuasiDiff]
    description: str


_BUILTINS: dict[str, _Builtin] = {}


def register_builtin(name, dim, evaluate_fn, quasidiff_fn, description=""):
    """Register a named function usable as a ``builtin`` atom."""
    _BUILTINS[name] = _Builtin(name, dim, evaluate_fn, quasidiff_fn, description)


def builtin_names() -> list[str]:
    return sorted(_BUILTINS)


def _ramp_recip_eval(X: np.ndarray) -> np.ndarray:
    t = X[..., 0]
    pos = t > 0.0
    safe = np.where(pos, t + 1.0, 1.0)
    return np.where(pos, t + 1.0 / safe, 0.0)


def _ramp_recip_qd(x: np.ndarray) -> QuasiDiff:
    t = float(x[0])
    if t > 1e-12:
        return _smooth_pair(np.array([1.0 - 1.0 / (t + 1.0) ** 2]))
    if t < -1e-12:
        return _smooth_pair(np.array([0.0]))
    raise ValueError("ramp_recip has no finite directional derivative at 0")


register_builtin(
    "ramp_recip",
    1,
    _ramp_recip_eval,
    _ramp_recip_qd,
    "lower semicontinuous scenario function: 0 on (-inf, 0], x + 1/(1+x) on (0, inf)",
)


# ---------------------------------------------------------------------------
# JSON (de)serialization


class ExprFormatError(ValueError):
    """Raised on malformed expression JSON; carries the node path."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def expr_to_json(e: FuncExpr) -> dict:
    if isinstance(e, Affine):
        return {"op": "affine", "a": list(e.a), "b": e.b}
    if isinstance(e, Norm2):
        return {"op": "norm2"}
    if isinstance(e, SmoothPoly):
        return {"op": "poly", "terms": [{"coeff": c, "powers": list(p)} for c, p in e.terms]}
    if isinstance(e, BuiltinFn):
        return {"op": "builtin", "name": e.name}
    if isinstance(e, Sum):
        return {"op": "sum", "args": [expr_to_json(c) for c in e.children]}
    if isinstance(e, Scale):
        return {"op": "scale", "alpha": e.alpha, "arg": expr_to_json(e.child)}
    if isinstance(e, Neg):
        return {"op": "neg", "arg": expr_to_json(e.child)}
    if isinstance(e, Max):
        return {"op": "max", "args": [expr_to_json(c) for c in e.children]}
    if isinstance(e, Min):
        return {"op": "min", "args": [expr_to_json(c) for c in e.children]}
    if isinstance(e, PosPart):
        return {"op": "pospart", "arg": expr_to_json(e.child)}
    if isinstance(e, Abs):
        return {"op": "abs", "arg": expr_to_json(e.child)}
    raise TypeError(f"unknown expression node {type(e).__name__}")


_NARY = {"sum": Sum, "max": Max, "min": Min}
_UNARY = {"neg": Neg, "pospart": PosPart, "abs": Abs}


def expr_from_json(obj, dim: int, path: str = "/objective") -> FuncExpr:
    """Parse an expression tree, reporting errors with JSON-pointer paths."""
    if not isinstance(obj, dict):
        raise ExprFormatError(path, "expression node must be a JSON object")
    op = obj.get("op")
    if not isinstance(op, str):
        raise ExprFormatError(path, "missing string field 'op'")
    try:
        if op == "affine":
            a = obj.get("a")
            if not isinstance(a, list) or len(a) != dim:
                raise ExprFormatError(f"{path}/a", f"expected a list of {dim} numbers")
            return Affine(tuple(a), float(obj.get("b", 0.0)))
        if op == "norm2":
            return Norm2(dim)
        if op == "poly":
            terms = obj.get("terms")
            if not isinstance(terms, list) or not terms:
                raise ExprFormatError(f"{path}/terms", "expected a nonempty list of terms")
            parsed = []
            for i, t in enumerate(terms):
                powers = t.get("powers") if isinstance(t, dict) else None
                if not isinstance(powers, list) or len(powers) != dim:
                    raise ExprFormatError(f"{path}/terms/{i}/powers", f"expected {dim} powers")
                parsed.append((float(t.get("coeff", 0.0)), tuple(powers)))
            return SmoothPoly(tuple(parsed))
        if op == "builtin":
            name = obj.get("name")
            if name not in _BUILTINS:
                raise ExprFormatError(f"{path}/name", f"unknown builtin {name!r}; known: {builtin_names()}")
            if _BUILTINS[name].dim != dim:
                raise ExprFormatError(f"{path}/name", f"builtin {name!r} has dim {_BUILTINS[name].dim}, problem has dim {dim}")
            return BuiltinFn(name)
        if op in _NARY:
            args = obj.get("args")
            if not isinstance(args, list) or not args:
                raise ExprFormatError(f"{path}/args", "expected a nonempty list of expressions")
            children = tuple(expr_from_json(a, dim, f"{path}/args/{i}") for i, a in enumerate(args))
            return _NARY[op](children)
        if op == "scale":
            if "alpha" not in obj:
                raise ExprFormatError(f"{path}/alpha", "missing scale factor")
            return Scale(float(obj["alpha"]), expr_from_json(obj.get("arg"), dim, f"{path}/arg"))
        if op in _UNARY:
            return _UNARY[op](expr_from_json(obj.get("arg"), dim, f"{path}/arg"))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ExprFormatError):
            raise
        raise ExprFormatError(path, str(exc)) from exc
    raise ExprFormatError(f"{path}/op", f"unknown op {op!r}")
