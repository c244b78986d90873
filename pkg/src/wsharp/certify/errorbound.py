"""Grid check of the error bound dist(x, Omega) <= (residual) / tau.

Omega is the solution set of g <= alpha, h = beta on the grid; the
residual is [g(x) - alpha]_+ + |h(x) - beta|.  The report lists every grid
violation of the bound for the supplied tau and the worst observed ratio
tau * dist / residual (at most 1 when the bound holds).
"""

from __future__ import annotations

import time

import numpy as np

from ..qdcalc import evaluate
from .instance import ProblemInstance, dist_to_set
from .report import CertificateReport

__all__ = ["check_error_bound"]

_SLACK_REL = 1e-9


def check_error_bound(
    inst: ProblemInstance,
    alpha: float = 0.0,
    beta: float = 0.0,
    tau: float = 1.0,
) -> CertificateReport:
    if inst.g is None and inst.h is None:
        raise ValueError("errorbound needs at least one of g, h")
    if tau <= 0:
        raise ValueError("tau must be positive")
    t0 = time.perf_counter()
    grid = inst.grid_points()

    residual = np.zeros(grid.shape[0])
    member = np.ones(grid.shape[0], dtype=bool)
    if inst.g is not None:
        gv = np.asarray(evaluate(inst.g, grid), dtype=float)
        residual += np.maximum(gv - alpha, 0.0)
        member &= gv <= alpha + inst.feas_tol
    if inst.h is not None:
        hv = np.asarray(evaluate(inst.h, grid), dtype=float)
        residual += np.abs(hv - beta)
        member &= np.abs(hv - beta) <= inst.feas_tol
    omega = grid[member]
    if omega.shape[0] == 0:
        raise ValueError("the level system g <= alpha, h = beta has no grid solutions")

    dist = dist_to_set(grid, omega)
    rhs = residual / tau
    slack = _SLACK_REL * (1.0 + rhs)
    bad = dist > rhs + slack
    positive = rhs > 1e-15
    worst_ratio = float(np.max(dist[positive] / rhs[positive])) if np.any(positive) else 0.0

    report = CertificateReport(
        kind="errorbound",
        verdict="refuted-on-grid" if np.any(bad) else "certified-empirical",
        inf_f_hat=None,
        sigma=tau,
        argmin_points=omega.tolist()[:1000],
        violations=[
            {"point": grid[i].tolist(), "lhs": float(dist[i]), "rhs": float(rhs[i]), "kind": "errorbound"}
            for i in np.flatnonzero(bad)
        ],
        instance=inst.config_echo(),
        diagnostics={
            "alpha": float(alpha),
            "beta": float(beta),
            "tau": float(tau),
            "worst_ratio": worst_ratio,
            "omega_points": int(omega.shape[0]),
        },
        metadata={"seed": inst.seed, "grid_points": int(grid.shape[0])},
    )
    report.runtime_seconds = time.perf_counter() - t0
    return report
