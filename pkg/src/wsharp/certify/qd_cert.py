"""Unconstrained quasidifferential certificate and the smoothness probe.

The nondegeneracy condition under test: the distance from the origin to
demcoqd f(x) stays above some tau > 0 over all non-argmin points, which
makes f a global weak sharp minimizer with modulus at least tau.  On the
grid we estimate tau two ways per point and take infima:

sharp_inner   distance to the computed Demyanov set (exact in dims 1-2,
              an inner approximation when sampled, so the figure may
              overstate nondegeneracy in dim >= 3),
sound_outer   distance to the representative outer bound sub + sup, a
              lower bound for the true distance (coincides with
              sharp_inner in dims 1-2 where the backend is exact).

The verdict verifies the weak-sharpness inequality directly at
sigma = tau_sound over the grid.
"""

from __future__ import annotations

import time

import numpy as np

from .. import demyanov as dd
from ..exhauster import hadamard_lower_estimate
from ..geometry import KERNEL, origin_distance, stencil
from ..qdcalc import evaluate, quasidiff
from .instance import ArgminResult, ProblemInstance, detect_argmin, par_map, verify_wsharp_inequality
from .report import CertificateReport
from .slope import strong_slope_estimate

__all__ = ["certify_qd", "point_demcoqd_distances", "smoothness_probe"]

#: slope cross-check margin from the slope >= dist(0, demcoqd) estimate
SLOPE_MARGIN = 1e-3
#: cap on per-point slope cross-checks within one certification run
_SLOPE_CHECK_CAP = 256
#: probe threshold above which one-sided derivatives count as a jump
_PROBE_BLOWUP = 1e5


def point_demcoqd_distances(inst: ProblemInstance, x: np.ndarray) -> tuple[float, float, bool]:
    """(sharp_inner, sound_outer, approx_flag) for demcoqd f at one point."""
    q = quasidiff(inst.objective, x, inst.tie_tol)
    res = dd.pair_diff(q, n_directions=inst.demyanov_directions, seed=inst.seed)
    d_inner = origin_distance(res.set)
    if res.backend.startswith("exact"):
        d_outer = d_inner
    else:
        d_outer = origin_distance(dd.pair_outer_bound(q))
    return d_inner, d_outer, q.approx


def certify_qd(inst: ProblemInstance) -> CertificateReport:
    """Run the unconstrained quasidifferential nondegeneracy certificate."""
    t0 = time.perf_counter()
    grid = inst.grid_points()
    fvals = np.asarray(evaluate(inst.objective, grid), dtype=float)
    argmin = detect_argmin(inst, grid, fvals)
    report = CertificateReport(
        kind="certify-qd",
        verdict="inconclusive",
        inf_f_hat=argmin.inf_f_hat,
        argmin_points=argmin.argmin_points.tolist(),
        instance=inst.config_echo(),
        metadata={
            "kernel": KERNEL,
            "seed": inst.seed,
            "grid_points": int(grid.shape[0]),
            "demyanov_backend": "exact" if inst.dim <= 2 else "sampled",
            "argmin_tol": argmin.argmin_tol,
        },
    )

    idx = np.flatnonzero(~argmin.argmin_mask)
    if idx.size == 0:
        report.verdict = "certified-empirical"
        report.tau_sharp = np.inf
        report.tau_sound = np.inf
        report.notes.append("vacuous certificate: every grid point is in the argmin band")
        report.runtime_seconds = time.perf_counter() - t0
        return report

    try:
        dists = par_map(lambda i: point_demcoqd_distances(inst, grid[i]), list(idx))
    except ValueError as exc:
        report.notes.append(f"quasidifferential unavailable: {exc}")
        report.runtime_seconds = time.perf_counter() - t0
        return report
    inner = np.array([d[0] for d in dists])
    outer = np.array([d[1] for d in dists])
    if any(d[2] for d in dists):
        report.notes.append("some quasidifferentials use the flagged unit-ball polytope stand-in (approx=true)")
    report.tau_sharp = float(np.min(inner))
    report.tau_sound = float(np.min(outer))

    # pointwise cross-check: slope estimate >= inner distance - margin
    step = max(1, idx.size // _SLOPE_CHECK_CAP)
    checked = idx[::step]
    slope_bad = []
    for j, i in enumerate(checked):
        s = strong_slope_estimate(inst.objective, grid[i])
        if s < inner[np.flatnonzero(idx == i)[0]] - SLOPE_MARGIN:
            slope_bad.append(grid[i].tolist())
    report.diagnostics["slope_crosschecks"] = int(checked.size)
    report.diagnostics["slope_crosscheck_failures"] = len(slope_bad)
    if slope_bad:
        report.notes.append(f"slope estimate fell below the demcoqd distance at {len(slope_bad)} point(s)")
        report.diagnostics["slope_crosscheck_points"] = slope_bad[:10]

    if report.tau_sound <= 0.0:
        witnesses = idx[np.flatnonzero(outer <= 0.0)][:10]
        report.violations = [
            {"point": grid[i].tolist(), "lhs": 0.0, "rhs": 0.0, "kind": "nondegeneracy"} for i in witnesses
        ]
        report.notes.append("origin lies in the demcoqd outer bound at non-argmin grid point(s)")
        report.verdict = "refuted-on-grid"
        report.runtime_seconds = time.perf_counter() - t0
        return report

    check = verify_wsharp_inequality(inst, grid, fvals, argmin, sigma=report.tau_sound)
    report.sigma = report.tau_sound
    report.sigma_hat = check.sigma_hat
    report.violations = check.violations + check.sublevel_violations
    if report.violations:
        report.verdict = "refuted-on-grid"
    else:
        report.verdict = "certified-empirical"
        if np.isfinite(check.sigma_hat) and report.tau_sound < 0.05 * check.sigma_hat:
            report.notes.append(
                "sufficient condition violated, property holds: the nondegeneracy "
                f"infimum tau={report.tau_sound:.3g} is nearly zero while the direct "
                f"inequality verifies with sigma_hat={check.sigma_hat:.3g}"
            )
    report.runtime_seconds = time.perf_counter() - t0
    return report


def _argmin_frontier(inst: ProblemInstance, argmin: ArgminResult) -> np.ndarray:
    """Argmin grid points with at least one non-argmin grid neighbor."""
    shape = (inst.grid_resolution,) * inst.dim
    mask = argmin.argmin_mask.reshape(shape)
    frontier = np.zeros_like(mask)
    for axis in range(inst.dim):
        lo = [slice(None)] * inst.dim
        hi = [slice(None)] * inst.dim
        lo[axis] = slice(None, -1)
        hi[axis] = slice(1, None)
        frontier[tuple(lo)] |= mask[tuple(lo)] & ~mask[tuple(hi)]
        frontier[tuple(hi)] |= mask[tuple(hi)] & ~mask[tuple(lo)]
    # box-boundary argmin points also count as frontier of the sampled region
    for axis in range(inst.dim):
        edge = [slice(None)] * inst.dim
        edge[axis] = 0
        frontier[tuple(edge)] |= mask[tuple(edge)]
        edge[axis] = -1
        frontier[tuple(edge)] |= mask[tuple(edge)]
    return frontier.ravel()


def smoothness_probe(inst: ProblemInstance, report: CertificateReport, cap: int = 50) -> list[dict]:
    """Directional linearity test at the frontier of the argmin set.

    Under the nondegeneracy condition no boundary argmin point can be
    differentiable, so a "differentiable" flag is a red flag for either the
    certificate or the tolerances.  Diagnostics only; the verdict is
    untouched.
    """
    grid = inst.grid_points()
    fvals = np.asarray(evaluate(inst.objective, grid), dtype=float)
    argmin = detect_argmin(inst, grid, fvals)
    frontier_idx = np.flatnonzero(_argmin_frontier(inst, argmin))
    step = max(1, frontier_idx.size // cap) if frontier_idx.size else 1
    out = []
    for i in frontier_idx[::step][:cap]:
        x = grid[i]
        flag = "differentiable"
        for v in stencil(inst.dim):
            dp = hadamard_lower_estimate(inst.objective, x, v)
            dm = hadamard_lower_estimate(inst.objective, x, -v)
            if not np.isfinite(dp) or not np.isfinite(dm) or max(abs(dp), abs(dm)) > _PROBE_BLOWUP:
                flag = "discontinuity"
                break
            if abs(dp + dm) > 1e-4 * (1.0 + abs(dp)):
                flag = "nondifferentiable"
                break
        out.append({"point": x.tolist(), "flag": flag})
    report.diagnostics["smoothness_probe"] = out
    if any(e["flag"] == "differentiable" for e in out):
        report.notes.append(
            "smoothness probe: argmin-frontier point(s) look differentiable, "
            "which contradicts a valid nondegeneracy certificate"
        )
    return out
