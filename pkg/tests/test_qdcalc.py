import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wsharp.geometry import interval, minkowski_sum, point_polytope, polytope, reflect, set_compare
from wsharp.qdcalc import (
    Abs,
    Affine,
    BuiltinFn,
    ExprFormatError,
    Max,
    Min,
    Neg,
    Norm2,
    PosPart,
    QuasiDiff,
    Scale,
    SmoothPoly,
    Sum,
    constant,
    dir_derivative,
    evaluate,
    expr_from_json,
    expr_to_json,
    qd_abs,
    qd_equiv,
    qd_pospart,
    quasidiff,
    unit_ball_polytope,
)

from _corpus import CORPUS, grid_points

ABS_X = Abs(Affine((1.0,), 0.0))


# ---------------------------------------------------------------- evaluate


def test_evaluate_abs():
    assert evaluate(ABS_X, [-2.0]) == 2.0


def test_evaluate_max_is_abs():
    e = Max((Affine((1.0,), 0.0), Affine((-1.0,), 0.0)))
    assert evaluate(e, [3.0]) == 3.0
    assert evaluate(e, [-3.0]) == 3.0


def test_evaluate_cancellation():
    e = Sum((Norm2(2), Scale(-1.0, Norm2(2))))
    assert evaluate(e, [1.3, -0.7]) == 0.0


def test_evaluate_batched():
    X = np.array([[-2.0], [0.0], [1.5]])
    np.testing.assert_allclose(evaluate(ABS_X, X), [2.0, 0.0, 1.5])


def test_evaluate_dim_mismatch():
    with pytest.raises(ValueError):
        evaluate(ABS_X, [1.0, 2.0])


# ---------------------------------------------------------------- quasidiff atoms


def test_quasidiff_affine():
    q = quasidiff(Affine((2.0, -1.0), 3.0), [0.3, 0.7])
    assert q.sub.vertices.tolist() == [[2.0, -1.0]]
    assert q.sup.vertices.tolist() == [[0.0, 0.0]]


def test_quasidiff_abs_at_kink():
    q = quasidiff(ABS_X, [0.0])
    assert sorted(q.sub.vertices.ravel()) == [0.0, 2.0]
    assert q.sup.vertices.tolist() == [[-1.0]]
    assert dir_derivative(q, [1.0]) == 1.0
    assert dir_derivative(q, [-1.0]) == 1.0


def test_quasidiff_norm2():
    q = quasidiff(Norm2(2), [3.0, 4.0])
    np.testing.assert_allclose(q.sub.vertices, [[0.6, 0.8]])
    q0 = quasidiff(Norm2(2), [0.0, 0.0])
    assert q0.sub.approx
    assert q0.sup.vertices.tolist() == [[0.0, 0.0]]
    # the 32-gon stand-in reproduces |v| within its sagitta
    for v in ([1.0, 0.0], [0.3, -0.8]):
        err = abs(dir_derivative(q0, v) - np.linalg.norm(v))
        assert err <= (1 - np.cos(np.pi / 32)) * np.linalg.norm(v) + 1e-12


def test_unit_ball_dim3_inscribed():
    B = unit_ball_polytope(3)
    assert B.approx
    norms = np.linalg.norm(B.vertices, axis=1)
    assert np.max(norms) <= 1.0 + 1e-12
    assert np.min(norms) >= 1.0 - 1e-12  # vertices sit on the sphere


# ---------------------------------------------------------------- dir_derivative


def test_dir_derivative_examples():
    q = QuasiDiff(interval(-1, 1), point_polytope([0.0]))
    assert dir_derivative(q, [1.0]) == 1.0
    q2 = QuasiDiff(point_polytope([0.0]), interval(-1, 1))
    assert dir_derivative(q2, [2.0]) == -2.0
    q3 = QuasiDiff(point_polytope([3.0]), point_polytope([0.0]))
    assert dir_derivative(q3, [-1.0]) == -3.0


# ---------------------------------------------------------------- equivalence


def test_qd_equiv_reflexive():
    q = quasidiff(ABS_X, [0.0])
    assert qd_equiv(q, q)


def test_qd_equiv_class_shift():
    q = quasidiff(ABS_X, [0.0])
    E = interval(0.0, 1.0)
    shifted = QuasiDiff(minkowski_sum(q.sub, E), minkowski_sum(q.sup, reflect(E)))
    assert qd_equiv(q, shifted)


def test_qd_equiv_distinguishes():
    q1 = QuasiDiff(interval(0, 1), point_polytope([0.0]))
    q2 = QuasiDiff(interval(0, 2), point_polytope([0.0]))
    assert not qd_equiv(q1, q2)


# ---------------------------------------------------------------- pospart / abs rules


def test_qd_pospart_boundary():
    qg = quasidiff(Affine((1.0,), 0.0), [0.0])
    qp = qd_pospart(qg, 0.0)
    assert sorted(qp.sub.vertices.ravel()) == [0.0, 1.0]
    assert qp.sup.vertices.tolist() == [[0.0]]


def test_qd_pospart_negative_is_zero():
    qg = quasidiff(Affine((1.0,), 0.0), [-5.0])
    qp = qd_pospart(qg, -5.0)
    assert qp.sub.vertices.tolist() == [[0.0]]
    assert qp.sup.vertices.tolist() == [[0.0]]


def test_qd_pospart_positive_identity():
    qg = quasidiff(Affine((1.0,), 0.0), [5.0])
    assert qd_pospart(qg, 5.0) is qg


def test_qd_abs_boundary():
    qh = quasidiff(Affine((1.0,), 0.0), [0.0])
    qa = qd_abs(qh, 0.0)
    assert sorted(qa.sub.vertices.ravel()) == [0.0, 2.0]
    assert qa.sup.vertices.tolist() == [[-1.0]]


def test_qd_abs_negative_swaps():
    qh = quasidiff(Affine((1.0,), 0.0), [-3.0])
    qa = qd_abs(qh, -3.0)
    assert qa.sub.vertices.tolist() == [[0.0]]
    assert qa.sup.vertices.tolist() == [[-1.0]]
    assert dir_derivative(qa, [1.0]) == -1.0


def test_qd_abs_positive_identity():
    qh = quasidiff(Affine((1.0,), 0.0), [3.0])
    assert qd_abs(qh, 3.0) is qh


# ---------------------------------------------------------------- calculus properties


def _richardson_dir_derivative(e, x, v):
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    f0 = evaluate(e, x)
    t1, t2 = 1e-4, 1e-5
    d1 = (evaluate(e, x + t1 * v) - f0) / t1
    d2 = (evaluate(e, x + t2 * v) - f0) / t2
    return (t1 * d2 - t2 * d1) / (t1 - t2)


def test_derivative_consistency_corpus():
    rng = np.random.default_rng(20240608)
    for entry in CORPUS:
        grid = grid_points(entry)
        sample = grid[:: max(1, grid.shape[0] // 25)]
        for x in sample:
            q = quasidiff(entry.expr, x)
            if q.approx:
                continue  # ball stand-in points are flagged, not exact
            for _ in range(20):
                v = rng.normal(size=entry.expr.dim)
                got = dir_derivative(q, v)
                want = _richardson_dir_derivative(entry.expr, x, v)
                assert abs(got - want) <= 1e-5 * (1.0 + abs(want)), (entry.name, x, v)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-1, 1).map(lambda v: round(v, 4)), min_size=2, max_size=6))
def test_class_invariance_random_shift(coords):
    E = polytope(np.asarray(coords).reshape(-1, 1))
    q = quasidiff(ABS_X, [0.0])
    shifted = QuasiDiff(minkowski_sum(q.sub, E), minkowski_sum(q.sup, reflect(E)))
    assert qd_equiv(q, shifted)


def test_max_min_duality():
    fs = (Affine((1.0,), 0.0), Affine((-1.0,), 0.0), SmoothPoly(((0.5, (2,)),)))
    neg_fs = tuple(Neg(f) for f in fs)
    for x in ([0.0], [0.4], [-1.0]):
        qmin = quasidiff(Min(fs), x)
        qmax = quasidiff(Max(neg_fs), x)
        swapped = QuasiDiff(reflect(qmax.sup), reflect(qmax.sub))
        assert qd_equiv(qmin, swapped, 1e-9)


def test_convex_specialization_max_of_affine():
    e = Max((Affine((1.0, 1.0), 0.0), Affine((-1.0, 1.0), 0.0), Affine((0.0, -1.0), -10.0)))
    q = quasidiff(e, [0.0, 1.0])
    got = {tuple(v) for v in q.sub.vertices}
    assert got == {(1.0, 1.0), (-1.0, 1.0)}
    assert q.sup.vertices.tolist() == [[0.0, 0.0]]


def test_scale_negative_swaps_pair():
    q = quasidiff(Scale(-2.0, ABS_X), [0.0])
    # -2|x| has sub {0}-ish and sup the reflected doubled interval
    assert dir_derivative(q, [1.0]) == -2.0
    assert dir_derivative(q, [-1.0]) == -2.0


def test_sum_rule_exactness():
    e = Sum((ABS_X, SmoothPoly(((1.0, (2,)),))))
    q = quasidiff(e, [0.0])
    assert dir_derivative(q, [1.0]) == 1.0
    assert dir_derivative(q, [-1.0]) == 1.0


# ---------------------------------------------------------------- builtins


def test_builtin_ramp_recip_values():
    e = BuiltinFn("ramp_recip")
    X = np.array([[-2.0], [-1.0], [0.0], [1.0]])
    np.testing.assert_allclose(evaluate(e, X), [0.0, 0.0, 0.0, 1.5])


def test_builtin_ramp_recip_quasidiff():
    e = BuiltinFn("ramp_recip")
    q = quasidiff(e, [1.0])
    np.testing.assert_allclose(q.sub.vertices, [[0.75]])
    with pytest.raises(ValueError):
        quasidiff(e, [0.0])


def test_builtin_unknown_name():
    with pytest.raises(ValueError):
        BuiltinFn("no_such_fn")


# ---------------------------------------------------------------- JSON


def test_expr_json_roundtrip():
    e = Max(
        (
            Abs(Affine((1.0, 0.0), 0.0)),
            Sum((SmoothPoly(((1.0, (2, 0)), (0.5, (0, 1)))), constant(-1.0, 2))),
            PosPart(Scale(0.5, Norm2(2))),
        )
    )
    j = expr_to_json(e)
    assert expr_to_json(expr_from_json(j, 2)) == j


def test_expr_json_unknown_op_path():
    with pytest.raises(ExprFormatError) as exc:
        expr_from_json({"op": "max", "args": [{"op": "sqrt"}]}, 1)
    assert "/args/0" in str(exc.value)


def test_expr_json_bad_affine_length():
    with pytest.raises(ExprFormatError) as exc:
        expr_from_json({"op": "affine", "a": [1.0], "b": 0.0}, 2)
    assert "/a" in str(exc.value)
