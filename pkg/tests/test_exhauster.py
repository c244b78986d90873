import numpy as np
import pytest

from wsharp.exhauster import (
    LowerExhauster,
    exhauster_eval,
    exhauster_from_minmax,
    exhauster_norm,
    hadamard_lower_estimate,
    hadamard_upper_estimate,
    symbolic_lower_exhauster,
)
from wsharp.geometry import interval, point_polytope
from wsharp.qdcalc import Abs, Affine, Min, Neg, Norm2, SmoothPoly, Sum, constant, evaluate

from _corpus import CORPUS_1D, grid_points

ABS_X = Abs(Affine((1.0,), 0.0))
DOUBLE_KINK = Abs(Sum((ABS_X, constant(-1.0, 1))))


# ---------------------------------------------------------------- eval / norm


def test_eval_min_of_singletons_is_neg_abs():
    E = exhauster_from_minmax([[[1.0]], [[-1.0]]])
    assert exhauster_eval(E, [2.0]) == -2.0
    assert exhauster_eval(E, [-2.0]) == -2.0


def test_eval_single_interval_is_abs():
    E = LowerExhauster((interval(-1, 1),))
    assert exhauster_eval(E, [3.0]) == 3.0


def test_eval_singleton_family_is_linear():
    E = LowerExhauster((point_polytope([2.0, -1.0]),))
    assert exhauster_eval(E, [1.0, 1.0]) == 1.0


def test_norm_of_singleton_pair():
    E = exhauster_from_minmax([[[1.0]], [[-1.0]]])
    assert exhauster_norm(E) == 1.0


def test_norm_zero_with_origin_inside():
    assert exhauster_norm(LowerExhauster((interval(-1, 1),))) <= 1e-10


def test_norm_point_family():
    assert abs(exhauster_norm(LowerExhauster((point_polytope([3.0, 4.0]),))) - 5.0) < 1e-12


def test_norm_zero_iff_every_member_contains_origin():
    E = LowerExhauster((interval(-1, 1), interval(-0.5, 2)))
    assert exhauster_norm(E) <= 1e-10
    E2 = LowerExhauster((interval(-1, 1), interval(0.5, 2)))
    assert exhauster_norm(E2) == 0.5


# ---------------------------------------------------------------- construction


def test_from_minmax_reproduces_minmax():
    rows = [[[1.0, 0.0], [0.0, 1.0]], [[-1.0, -1.0]]]
    E = exhauster_from_minmax(rows)
    rng = np.random.default_rng(0)
    for _ in range(20):
        v = rng.normal(size=2)
        direct = min(max(np.dot(a, v) for a in row) for row in rows)
        assert abs(exhauster_eval(E, v) - direct) <= 1e-14


def test_from_minmax_rejects_empty_row():
    with pytest.raises(ValueError):
        exhauster_from_minmax([[]])


def test_from_minmax_max_vs_min_distinction():
    as_max = exhauster_from_minmax([[[1.0], [-1.0]]])  # single member: |v|
    as_min = exhauster_from_minmax([[[1.0]], [[-1.0]]])  # two members: -|v|
    assert exhauster_eval(as_max, [2.0]) == 2.0
    assert exhauster_eval(as_min, [2.0]) == -2.0


def test_symbolic_exhauster_double_kink():
    E0 = symbolic_lower_exhauster(DOUBLE_KINK, [0.0])
    members = sorted(m.vertices.ravel().tolist() for m in E0.members)
    assert members == [[-1.0], [1.0]]
    assert exhauster_norm(E0) == 1.0
    E2 = symbolic_lower_exhauster(DOUBLE_KINK, [2.0])
    assert exhauster_norm(E2) == 1.0


def test_symbolic_exhauster_min_node_uses_pieces():
    e = Min((Abs(Affine((1.0,), -1.0)), Abs(Affine((1.0,), 1.0))))
    E = symbolic_lower_exhauster(e, [1.0])
    # only the |x-1| piece is active at its kink
    assert len(E.members) == 1
    assert sorted(E.members[0].vertices.ravel()) == [-1.0, 1.0]


def test_symbolic_exhauster_matches_directional_derivative():
    rng = np.random.default_rng(1)
    for entry in CORPUS_1D:
        grid = grid_points(entry)[::8]
        for x in grid:
            try:
                E = symbolic_lower_exhauster(entry.expr, x)
            except ValueError:
                continue
            if any(m.approx for m in E.members):
                continue
            from wsharp.qdcalc import dir_derivative, quasidiff

            q = quasidiff(entry.expr, x)
            for _ in range(5):
                v = rng.normal(size=1)
                assert abs(exhauster_eval(E, v) - dir_derivative(q, v)) <= 1e-10


# ---------------------------------------------------------------- Hadamard estimates


def test_hadamard_lower_abs_kink():
    est = hadamard_lower_estimate(ABS_X, [0.0], [1.0])
    assert abs(est - 1.0) <= 1e-6


def test_hadamard_lower_neg_abs():
    est = hadamard_lower_estimate(Neg(ABS_X), [0.0], [1.0])
    assert abs(est + 1.0) <= 1e-6


def test_hadamard_upper_abs_kink():
    est = hadamard_upper_estimate(ABS_X, [0.0], [1.0])
    assert abs(est - 1.0) <= 1e-6


def test_hadamard_smooth_matches_gradient():
    e = SmoothPoly(((1.0, (2, 0)), (2.0, (0, 3)), (1.0, (1, 1))))
    x = np.array([0.7, -0.4])
    grad = np.array([2 * 0.7 + (-0.4), 6 * (-0.4) ** 2 + 0.7])
    for v in ([1.0, 0.0], [0.6, 0.8], [-1.0, 0.2]):
        est = hadamard_lower_estimate(e, x, v)
        assert abs(est - grad @ np.asarray(v)) <= 1e-4


def test_hadamard_matches_ray_derivative_on_lipschitz_corpus():
    rng = np.random.default_rng(2)
    for entry in CORPUS_1D:
        if entry.name == "cubic_drift":
            continue  # fine as well, just keep the loop short
        grid = grid_points(entry)[::10]
        for x in grid:
            v = np.array([rng.choice([-1.0, 1.0])])
            t = 1e-7
            ray = (evaluate(entry.expr, x + t * v) - evaluate(entry.expr, x)) / t
            est = hadamard_lower_estimate(entry.expr, x, v)
            assert abs(est - ray) <= 1e-4, (entry.name, x, v)


def test_hadamard_blackbox_callable():
    est = hadamard_lower_estimate(lambda X: np.abs(X[..., 0]), [0.0], [1.0])
    assert abs(est - 1.0) <= 1e-6


def test_hadamard_norm2_vs_norm_derivative():
    est = hadamard_lower_estimate(Norm2(2), [0.0, 0.0], [0.6, 0.8])
    assert abs(est - 1.0) <= 1e-4


def test_exhauster_json_roundtrip():
    E = exhauster_from_minmax([[[1.0, 0.0], [0.0, 1.0]], [[-1.0, -1.0]]])
    E2 = LowerExhauster.from_json(E.to_json())
    assert len(E2.members) == len(E.members)
    for a, b in zip(E.members, E2.members):
        assert a.vertices.tolist() == b.vertices.tolist()
