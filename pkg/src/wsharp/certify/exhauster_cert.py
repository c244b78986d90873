"""Exhauster-based certificates, unconstrained and over a polyhedron.

The unconstrained condition takes the infimum over non-argmin grid points
of the exhauster norm sup_E dist(0, E).  The constrained variant replaces
each member E by E + lambda (N(Omega, x) cap B), where N is the normal
cone spanned by the active constraint rows; the distance to that capped
Minkowski sum is computed by a fully corrective conditional-gradient loop
whose linear oracle is a vertex argmax over E plus lambda times the
normalized cone projection of the direction (an NNLS subproblem).
"""

from __future__ import annotations

import time

import numpy as np
from scipy.optimize import nnls

from ..exhauster import LowerExhauster, exhauster_norm, symbolic_lower_exhauster
from ..geometry import KERNEL, Polytope, min_norm_point
from ..qdcalc import evaluate
from .instance import ProblemInstance, detect_argmin, par_map, verify_wsharp_inequality
from .report import CertificateReport

__all__ = ["capped_cone_distance", "certify_constrained_exhauster", "certify_exhauster"]

_FW_MAX_ITER = 500


class ConeDistanceFailure(RuntimeError):
    """NNLS or conditional-gradient breakdown at one grid point."""


def _cone_projection(d: np.ndarray, normals: np.ndarray) -> np.ndarray:
    """Euclidean projection of d onto cone{rows of normals} via NNLS."""
    if normals.shape[0] == 0:
        return np.zeros_like(d)
    try:
        coef, _ = nnls(normals.T, d)
    except RuntimeError as exc:
        raise ConeDistanceFailure(f"NNLS failed: {exc}") from exc
    return normals.T @ coef


def capped_cone_distance(
    member: Polytope,
    normals: np.ndarray,
    lam: float,
    tol: float = 1e-10,
    max_iter: int = _FW_MAX_ITER,
) -> float:
    """dist(0, member + lam * (cone(normals) cap unit ball)).

    Fully corrective conditional gradient: atoms returned by the linear
    oracle accumulate, and each step solves the min-norm point of their
    hull exactly.  The Frank-Wolfe gap bounds the distance error.
    """

    def oracle(d: np.ndarray) -> np.ndarray:
        v = member.vertices[int(np.argmax(member.vertices @ d))]
        p = _cone_projection(d, normals)
        nrm = float(np.linalg.norm(p))
        if nrm > 1e-14:
            return v + lam * (p / nrm)
        return v

    x = oracle(-member.vertices.mean(axis=0))
    atoms = [x]
    for _ in range(max_iter):
        a = oracle(-x)
        gap = float(x @ (x - a))
        if gap <= tol * (1.0 + float(x @ x)):
            return float(np.linalg.norm(x))
        if not any(np.allclose(a, b, rtol=0.0, atol=1e-14) for b in atoms):
            atoms.append(a)
        x, _ = min_norm_point(Polytope(np.asarray(atoms)), tol)
    raise ConeDistanceFailure(f"conditional gradient did not converge in {max_iter} iterations")


def _exhauster_at(inst: ProblemInstance, x: np.ndarray) -> LowerExhauster:
    if inst.exhauster is not None:
        return inst.exhauster
    return symbolic_lower_exhauster(inst.objective, x, inst.tie_tol)


def certify_exhauster(inst: ProblemInstance) -> CertificateReport:
    """Unconstrained exhauster-norm nondegeneracy certificate."""
    t0 = time.perf_counter()
    grid = inst.grid_points()
    fvals = np.asarray(evaluate(inst.objective, grid), dtype=float)
    argmin = detect_argmin(inst, grid, fvals)
    report = CertificateReport(
        kind="certify-exhauster",
        verdict="inconclusive",
        inf_f_hat=argmin.inf_f_hat,
        argmin_points=argmin.argmin_points.tolist(),
        instance=inst.config_echo(),
        metadata={
            "kernel": KERNEL,
            "seed": inst.seed,
            "grid_points": int(grid.shape[0]),
            "exhauster_source": "user" if inst.exhauster is not None else "symbolic",
            "argmin_tol": argmin.argmin_tol,
        },
    )
    idx = np.flatnonzero(~argmin.argmin_mask)
    if idx.size == 0:
        report.tau_sharp = report.tau_sound = np.inf
        report.verdict = "certified-empirical"
        report.notes.append("vacuous certificate: every grid point is in the argmin band")
        report.runtime_seconds = time.perf_counter() - t0
        return report

    def norm_at(i):
        return exhauster_norm(_exhauster_at(inst, grid[i]))

    try:
        norms = par_map(norm_at, list(idx))
    except ValueError as exc:
        report.notes.append(f"exhauster unavailable at some grid point: {exc}")
        report.runtime_seconds = time.perf_counter() - t0
        return report
    tau = float(np.min(norms))
    report.tau_sharp = report.tau_sound = tau
    if tau <= 0.0:
        report.verdict = "refuted-on-grid"
        i = int(idx[int(np.argmin(norms))])
        report.violations = [{"point": grid[i].tolist(), "lhs": 0.0, "rhs": 0.0, "kind": "exhauster-norm"}]
        report.notes.append("exhauster norm vanishes at a non-argmin grid point")
        report.runtime_seconds = time.perf_counter() - t0
        return report

    check = verify_wsharp_inequality(inst, grid, fvals, argmin, sigma=tau)
    report.sigma = tau
    report.sigma_hat = check.sigma_hat
    report.violations = check.violations + check.sublevel_violations
    report.verdict = "refuted-on-grid" if report.violations else "certified-empirical"
    report.runtime_seconds = time.perf_counter() - t0
    return report


def certify_constrained_exhauster(inst: ProblemInstance) -> CertificateReport:
    """Exhauster certificate over a polyhedron Cx <= d with penalty lambda."""
    if inst.polyhedron is None:
        raise ValueError("certify-constrained-exhauster needs polyhedron constraints")
    if inst.lam is None:
        raise ValueError("certify-constrained-exhauster needs a penalty multiplier lambda")
    t0 = time.perf_counter()
    C, d = inst.polyhedron
    grid = inst.grid_points()
    fvals = np.asarray(evaluate(inst.objective, grid), dtype=float)
    feasible = inst.feasible_mask(grid)
    argmin = detect_argmin(inst, grid, fvals, feasible)

    ell = inst.lipschitz_estimate(fvals)
    if inst.lam <= ell:
        raise ValueError(
            f"lambda={inst.lam} is not above the Lipschitz rank estimate {ell:.6g}; "
            "exact penalization needs lambda > ell_f"
        )

    report = CertificateReport(
        kind="certify-constrained-exhauster",
        verdict="inconclusive",
        inf_f_hat=argmin.inf_f_hat,
        argmin_points=argmin.argmin_points.tolist(),
        instance=inst.config_echo(),
        metadata={
            "kernel": KERNEL,
            "seed": inst.seed,
            "grid_points": int(grid.shape[0]),
            "feasible_points": int(np.count_nonzero(feasible)),
            "lipschitz_estimate": float(ell),
            "lipschitz_source": "user" if inst.lipschitz is not None else "grid quotients",
            "lambda": float(inst.lam),
            "exhauster_source": "user" if inst.exhauster is not None else "symbolic",
            "argmin_tol": argmin.argmin_tol,
        },
    )

    idx = np.flatnonzero(feasible & ~argmin.argmin_mask)
    if idx.size == 0:
        report.zeta_sharp = report.zeta_sound = np.inf
        report.verdict = "certified-empirical"
        report.notes.append("vacuous certificate: the feasible grid is entirely argmin")
        report.runtime_seconds = time.perf_counter() - t0
        return report

    scale_d = 1.0 + np.abs(d)

    def zeta_at(i):
        x = grid[i]
        active = C[np.flatnonzero(C @ x >= d - inst.tie_tol * scale_d)]
        E = _exhauster_at(inst, x)
        return max(capped_cone_distance(m, active, inst.lam) for m in E.members)

    try:
        zetas = par_map(zeta_at, list(idx))
    except (ConeDistanceFailure, ValueError) as exc:
        report.notes.append(f"capped-cone distance failed: {exc}")
        report.runtime_seconds = time.perf_counter() - t0
        return report
    zeta = float(np.min(zetas))
    report.zeta_sharp = report.zeta_sound = zeta
    if zeta <= 0.0:
        report.verdict = "refuted-on-grid"
        report.notes.append("capped-cone distance vanishes at a feasible non-argmin grid point")
        report.runtime_seconds = time.perf_counter() - t0
        return report

    check = verify_wsharp_inequality(
        inst, grid, fvals, argmin, sigma=zeta, domain=feasible, sublevel_check=False
    )
    report.sigma = zeta
    report.sigma_hat = check.sigma_hat
    report.violations = check.violations
    report.verdict = "refuted-on-grid" if report.violations else "certified-empirical"
    report.runtime_seconds = time.perf_counter() - t0
    return report
