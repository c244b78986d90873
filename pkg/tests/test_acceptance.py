"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines.
"""

import json
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from wsharp.certify import (
    ProblemInstance,
    capped_cone_distance,
    certify_constrained,
    certify_exhauster,
    certify_qd,
    detect_argmin,
    strong_slope_estimate,
    verify_wsharp_inequality,
)
from wsharp.certify.qd_cert import point_demcoqd_distances
from wsharp.cli import main
from wsharp.demyanov import demcoqd, demyanov_diff
from wsharp.geometry import (
    canonicalize,
    hausdorff_distance,
    interval,
    min_norm_point,
    minkowski_sum,
    point_polytope,
    polytope,
    reflect,
    set_compare,
)
from wsharp.qdcalc import Abs, Affine, BuiltinFn, Max, SmoothPoly, Sum, constant, evaluate

from _corpus import CORPUS, FOUR_MAX

ROOT = Path(__file__).resolve().parent.parent
PROBLEMS = ROOT / "problems"

RAMP = BuiltinFn("ramp_recip")
DOUBLE_KINK = Abs(Sum((Abs(Affine((1.0,), 0.0)), constant(-1.0, 1))))


def _ok(n, msg):
    print(f"ACCEPTANCE {n} PASS: {msg}")


# -------------------------------------------------------------------- 1


def test_criterion_1_plateau_ramp_reproduction(capsys):
    t0 = time.perf_counter()
    code = main(["wsharp-check", "--problem", str(PROBLEMS / "plateau_ramp.json"), "--sigma", "1"])
    assert code == 0
    check_out = capsys.readouterr().out
    assert "verdict: certified-empirical" in check_out

    for x, want in ((0.5, 1 - 1 / 1.5**2), (1.0, 0.75), (2.0, 1 - 1 / 9)):
        est = strong_slope_estimate(RAMP, [x])
        assert abs(est - want) <= 1e-3, (x, est, want)

    code = main(["certify-qd", "--problem", str(PROBLEMS / "plateau_ramp.json"), "--format", "json"])
    payload = json.loads(capsys.readouterr().out)
    assert code == 0
    assert payload["tau_sharp"] < 0.05
    assert payload["violations"] == []
    assert any("sufficient condition violated, property holds" in n for n in payload["notes"])
    elapsed = time.perf_counter() - t0
    assert elapsed < 5.0, f"criterion 1 took {elapsed:.2f}s"
    with capsys.disabled():
        _ok(1, f"plateau-ramp scenario reproduced in {elapsed:.2f}s (tau={payload['tau_sharp']:.3g})")


# -------------------------------------------------------------------- 2, 3


def _generic_pair(A, B, min_gap=1.5e-3) -> bool:
    """True when the merged edge-normal fan of (A, B) has no angular gap
    below ``min_gap``.  The sampled backend is an inner approximation: an
    exposure arc narrower than its angular resolution (2 pi / 10000 here)
    can be missed entirely, so the agreement criterion draws pairs in
    generic position."""
    from wsharp.demyanov import _edge_normal_angles

    ang = np.sort(
        np.concatenate([_edge_normal_angles(canonicalize(A)), _edge_normal_angles(canonicalize(B))])
    )
    gaps = np.diff(np.append(ang, ang[0] + 2.0 * np.pi))
    return bool(np.min(gaps) >= min_gap)


def _seeded_pairs(n=200, seed=20240608):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        A = polytope(rng.uniform(-2, 2, size=(int(rng.integers(3, 13)), 2)))
        B = polytope(rng.uniform(-2, 2, size=(int(rng.integers(3, 13)), 2)))
        E = polytope(rng.uniform(-1, 1, size=(int(rng.integers(1, 6)), 2)))
        C = polytope(rng.uniform(-2, 2, size=(int(rng.integers(1, 8)), 2)))
        D = polytope(rng.uniform(-2, 2, size=(int(rng.integers(1, 8)), 2)))
        lam = rng.uniform(0, 1, size=(5, A.nvertices))
        lam /= lam.sum(axis=1, keepdims=True)
        B_sub = polytope(lam @ A.vertices)
        if _generic_pair(A, B):
            out.append((A, B, E, C, D, B_sub))
    return out


PAIRS = _seeded_pairs()


def test_criterion_2_demyanov_law_suite(capsys):
    t0 = time.perf_counter()
    origin = point_polytope([0.0, 0.0])
    tol = 1e-9
    for A, B, E, C, D, B_sub in PAIRS:
        d_ab = demyanov_diff(A, B, backend="exact2d").set
        # (1) class invariance under a common Minkowski shift
        shifted = demyanov_diff(minkowski_sum(A, E), minkowski_sum(B, E), backend="exact2d").set
        assert set_compare(shifted, d_ab, tol).relation == "equal"
        # (2) A - A = {0}
        self_diff = demyanov_diff(A, A, backend="exact2d").set
        assert set_compare(self_diff, origin, tol).relation == "equal"
        # (3) B inside A implies 0 in A - B
        _, dist = min_norm_point(demyanov_diff(A, B_sub, backend="exact2d").set)
        assert dist <= tol
        # (4) (A+B) - (C+D) inside (A-C) + (B-D)
        lhs = demyanov_diff(minkowski_sum(A, B), minkowski_sum(C, D), backend="exact2d").set
        rhs = minkowski_sum(
            demyanov_diff(A, C, backend="exact2d").set, demyanov_diff(B, D, backend="exact2d").set
        )
        assert set_compare(lhs, rhs, tol).relation in ("equal", "subset")
        # (5) A - {0} = A
        ident = demyanov_diff(A, origin, backend="exact2d").set
        assert set_compare(ident, canonicalize(A), tol).relation == "equal"
        # (6) A - B inside A + (-B)
        assert set_compare(d_ab, minkowski_sum(A, reflect(B)), tol).relation in ("equal", "subset")
    elapsed = time.perf_counter() - t0
    assert elapsed < 30.0, f"law suite took {elapsed:.2f}s"
    with capsys.disabled():
        _ok(2, f"all six Demyanov laws on 200 seeded pairs in {elapsed:.2f}s")


def test_criterion_3_backend_agreement(capsys):
    worst = 0.0
    for A, B, *_ in PAIRS:
        exact = demyanov_diff(A, B, backend="exact2d").set
        samp = demyanov_diff(A, B, backend="sampled", n_directions=10000).set
        worst = max(worst, hausdorff_distance(exact, samp))
    assert worst <= 0.05, worst
    with capsys.disabled():
        _ok(3, f"sampled(10k) vs exact2d Hausdorff <= {worst:.3g}")


# -------------------------------------------------------------------- 4


def test_criterion_4_clarke_oracle_equivalence(capsys):
    rng = np.random.default_rng(424242)
    for _ in range(50):
        a = np.sort(rng.uniform(-5, 5, size=2))
        b = np.sort(rng.uniform(-5, 5, size=2))
        A, B = interval(a[0], a[1]), interval(b[0], b[1])
        # independent oracle: slopes of the piecewise-linear support
        # difference by breakpoint enumeration (one breakpoint, at 0)
        slope_pos = max(a[0], a[1]) - max(b[0], b[1])
        slope_neg = -(max(-a[0], -a[1]) - max(-b[0], -b[1]))
        lo, hi = min(slope_pos, slope_neg), max(slope_pos, slope_neg)
        want = [lo] if lo == hi else [lo, hi]
        got = demyanov_diff(A, B).set.vertices.ravel().tolist()
        assert got == want
    with capsys.disabled():
        _ok(4, "exact1d equals the Clarke breakpoint oracle on 50 random interval pairs")


# -------------------------------------------------------------------- 5


def test_criterion_5_slope_dominates_demcoqd_distance(capsys):
    assert len(CORPUS) >= 20
    checked = 0
    for entry in CORPUS:
        inst = ProblemInstance(
            dim=entry.expr.dim,
            objective=entry.expr,
            box=list(entry.box),
            grid_resolution=entry.resolution,
        )
        grid = inst.grid_points()
        fv = np.asarray(evaluate(entry.expr, grid))
        res = detect_argmin(inst, grid, fv)
        for i in np.flatnonzero(~res.argmin_mask):
            d_inner, _, _ = point_demcoqd_distances(inst, grid[i])
            slope = strong_slope_estimate(entry.expr, grid[i])
            assert slope >= d_inner - 1e-3, (entry.name, grid[i], slope, d_inner)
            checked += 1
    with capsys.disabled():
        _ok(5, f"slope >= demcoqd distance - 1e-3 at {checked} non-argmin points over {len(CORPUS)} functions")


# -------------------------------------------------------------------- 6


def _oracle_dist_to_hull_2d(points: np.ndarray) -> float:
    """Independent 2D min-norm oracle: edge/vertex enumeration."""
    pts = np.unique(points, axis=0)
    if pts.shape[0] == 1:
        return float(np.hypot(*pts[0]))
    best = np.inf
    for i in range(pts.shape[0]):
        for j in range(i + 1, pts.shape[0]):
            a, b = pts[i], pts[j]
            d = b - a
            den = float(d @ d)
            t = 0.0 if den == 0 else float(np.clip(-(a @ d) / den, 0.0, 1.0))
            best = min(best, float(np.linalg.norm(a + t * d)))
    if pts.shape[0] >= 3:
        # origin interior test: origin on the same side of every hull edge
        import itertools

        for tri in itertools.combinations(range(pts.shape[0]), 3):
            p0, p1, p2 = pts[list(tri)]
            s0 = np.cross(p1 - p0, -p0)
            s1 = np.cross(p2 - p1, -p1)
            s2 = np.cross(p0 - p2, -p2)
            if (s0 >= 0 and s1 >= 0 and s2 >= 0) or (s0 <= 0 and s1 <= 0 and s2 <= 0):
                return 0.0
    return best


def test_criterion_6_convex_reduction(capsys):
    instances = [
        (FOUR_MAX, [[-2.0, 2.0], [-2.0, 2.0]], 41),
        (
            Max((Affine((1.0, 2.0), -1.0), Affine((-3.0, 0.5), 0.0), Affine((0.25, -1.0), -0.5))),
            [[-1.5, 1.5], [-1.5, 1.5]],
            31,
        ),
    ]
    for expr, box, res in instances:
        inst = ProblemInstance(dim=2, objective=expr, box=box, grid_resolution=res)
        grid = inst.grid_points()
        fv = np.asarray(evaluate(expr, grid))
        am = detect_argmin(inst, grid, fv)
        grads = np.array([c.a for c in expr.children])
        tau_oracle = np.inf
        for i in range(grid.shape[0]):
            vals = np.array([evaluate(c, grid[i]) for c in expr.children])
            active = grads[vals >= np.max(vals) - 1e-9 * (1.0 + abs(np.max(vals)))]
            hull = canonicalize(polytope(active))
            got = demcoqd(expr, grid[i]).set
            assert set_compare(got, hull, 1e-9).relation == "equal"
            if not am.argmin_mask[i]:
                tau_oracle = min(tau_oracle, _oracle_dist_to_hull_2d(active))
        rep = certify_qd(inst)
        assert abs(rep.tau_sharp - tau_oracle) <= 1e-8, (rep.tau_sharp, tau_oracle)
    with capsys.disabled():
        _ok(6, "demcoqd = conv(active gradients); tau matches the hand oracle to 1e-8")


# -------------------------------------------------------------------- 7


def test_criterion_7_constrained_certificate(capsys):
    l1 = Sum((Abs(Affine((1.0, 0.0), 0.0)), Abs(Affine((0.0, 1.0), 0.0))))
    inst = ProblemInstance(
        dim=2,
        objective=l1,
        g=Affine((1.0, 0.0), -1.0),
        box=[[-2, 2], [-2, 2]],
        grid_resolution=81,
        lam=2.0,
    )
    rep = certify_constrained(inst)
    assert abs(rep.tau_sharp - 1.0) <= 1e-12
    assert rep.zeta_sound is not None and np.isfinite(rep.zeta_sound) and rep.zeta_sound > 0
    assert rep.violations == []
    assert rep.verdict == "certified-empirical"

    # seven-case dispatcher against the singleton-pair case formulae
    from wsharp.certify import penalty_demcoqd_sets

    h_lin = Affine((1.0,), 0.0)
    g_lin = Affine((1.0,), -1.0)
    case1 = penalty_demcoqd_sets(g_lin, h_lin, [-3.0])
    assert case1.case == "g<0,h<0"
    assert case1.inner.vertices.ravel().tolist() == [-1.0]  # (-sup_h) (-) sub_h
    case6 = penalty_demcoqd_sets(g_lin, h_lin, [5.0])
    assert case6.case == "g>0,h>0"
    assert case6.inner.vertices.ravel().tolist() == [2.0]  # sum of singleton differences
    with capsys.disabled():
        _ok(7, f"constrained pipeline: tau=1, zeta={rep.zeta_sound:.6g}, 0 violations; cases 1 and 6 check out")


# -------------------------------------------------------------------- 8


def test_criterion_8_exhauster_certificate(capsys):
    inst = ProblemInstance(dim=1, objective=DOUBLE_KINK, box=[[-3, 3]], grid_resolution=1201)
    rep = certify_exhauster(inst)
    assert abs(rep.tau_sharp - 1.0) <= 1e-6
    assert rep.sigma == rep.tau_sharp
    assert rep.violations == []
    assert rep.verdict == "certified-empirical"
    with capsys.disabled():
        _ok(8, f"double-kink exhauster certificate: tau={rep.tau_sharp!r}, sigma verification clean")


# -------------------------------------------------------------------- 9


def test_criterion_9_capped_cone_distances(capsys):
    normals = np.array([[1.0]])
    d1 = capped_cone_distance(point_polytope([2.0]), normals, 1.0)
    d2 = capped_cone_distance(point_polytope([-2.0]), normals, 1.0)
    assert abs(d1 - 2.0) <= 1e-8
    assert abs(d2 - 1.0) <= 1e-8
    with capsys.disabled():
        _ok(9, f"capped-cone distances {d1:.12g} and {d2:.12g} match interval arithmetic")


# -------------------------------------------------------------------- 10


def test_criterion_10_fixed_point_scenario(capsys):
    # displacement of F(x) = 0.5 x + 1: phi(x) = |x - F(x)| = |0.5 x - 1|
    phi = Abs(Affine((0.5,), -1.0))
    inst = ProblemInstance(dim=1, objective=phi, box=[[-10, 10]], grid_resolution=2001)
    grid = inst.grid_points()
    fv = np.asarray(evaluate(phi, grid))
    am = detect_argmin(inst, grid, fv)
    assert am.argmin_points.tolist() == [[2.0]]  # the fixed point of F
    chk = verify_wsharp_inequality(inst, grid, fv, am, sigma=0.5)
    assert chk.violations == []
    assert chk.sublevel_violations == []
    with capsys.disabled():
        _ok(10, "displacement of the 0.5-contraction is weakly sharp with sigma = 1 - kappa = 0.5")


# -------------------------------------------------------------------- 11


def test_criterion_11_byte_identical_json(capsys):
    cmds = [
        ["certify-qd", "--problem", str(PROBLEMS / "abs.json"), "--format", "json"],
        ["certify-constrained", "--problem", str(PROBLEMS / "l1_halfplane.json"), "--format", "json"],
    ]
    for cmd in cmds:
        full = [sys.executable, "-m", "wsharp"] + cmd
        r1 = subprocess.run(full, capture_output=True, cwd=ROOT)
        r2 = subprocess.run(full, capture_output=True, cwd=ROOT)
        assert r1.returncode == r2.returncode
        assert r1.stdout == r2.stdout and len(r1.stdout) > 0
    with capsys.disabled():
        _ok(11, "repeated certify runs emit byte-identical JSON reports")
