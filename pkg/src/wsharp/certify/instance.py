"""Problem instances and the grid machinery shared by all certifiers.

Every certificate is grid-empirical: the infima and the weak-sharpness
inequality that quantify over the whole space are evaluated on a finite
box grid.  Reports carry a disclaimer saying exactly that.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from ..exhauster import LowerExhauster
from ..qdcalc import FuncExpr, evaluate, expr_to_json

__all__ = [
    "ArgminResult",
    "DISCLAIMER",
    "ProblemInstance",
    "WsharpCheck",
    "detect_argmin",
    "dist_to_set",
    "par_map",
    "verify_wsharp_inequality",
]

DISCLAIMER = (
    "grid-empirical: every infimum and inequality is evaluated on the sampled "
    "box grid only; this report is not a mathematical proof"
)

#: relative slack applied to the weak-sharpness inequality on the grid
_SLACK_REL = 1e-9
#: switch to a k-d tree once the brute-force distance table exceeds this
_BRUTE_LIMIT = 5_000_000


@dataclass(frozen=True)
class ProblemInstance:
    """Fully resolved certification problem over a box grid."""

    dim: int
    objective: FuncExpr
    box: np.ndarray  # (dim, 2) rows [lo, hi]
    grid_resolution: int
    g: FuncExpr | None = None
    h: FuncExpr | None = None
    polyhedron: tuple[np.ndarray, np.ndarray] | None = None  # C x <= d rows
    argmin_tol: float | None = None  # None: 1e-6 * (1 + |inf_f_hat|)
    tie_tol: float = 1e-9
    feas_tol: float = 1e-8
    lam: float | None = None
    lipschitz: float | None = None
    seed: int = 0
    exhauster: LowerExhauster | None = None
    demyanov_directions: int = 4096

    def __post_init__(self):
        box = np.asarray(self.box, dtype=float).reshape(self.dim, 2)
        if np.any(box[:, 0] > box[:, 1]):
            raise ValueError("box lower bound exceeds upper bound")
        if not np.all(np.isfinite(box)):
            raise ValueError("box bounds must be finite")
        object.__setattr__(self, "box", box)
        if self.grid_resolution < 2:
            raise ValueError("grid_resolution must be at least 2")
        if self.objective.dim != self.dim:
            raise ValueError("objective dimension does not match space_dim")
        for name in ("g", "h"):
            e = getattr(self, name)
            if e is not None and e.dim != self.dim:
                raise ValueError(f"constraint {name} dimension does not match space_dim")
        if self.polyhedron is not None:
            C = np.asarray(self.polyhedron[0], dtype=float)
            d = np.asarray(self.polyhedron[1], dtype=float)
            if C.ndim != 2 or C.shape[1] != self.dim or d.shape != (C.shape[0],):
                raise ValueError("polyhedron rows must be (k, dim) with k right-hand sides")
            object.__setattr__(self, "polyhedron", (C, d))
        if self.grid_resolution ** self.dim > 2_000_000:
            raise ValueError("grid too large, lower grid_resolution")

    @property
    def has_constraints(self) -> bool:
        return self.g is not None or self.h is not None or self.polyhedron is not None

    def axes(self) -> list[np.ndarray]:
        return [np.linspace(lo, hi, self.grid_resolution) for lo, hi in self.box]

    def grid_points(self) -> np.ndarray:
        """Full grid as an (N, dim) array in row-major axis order."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def feasible_mask(self, grid: np.ndarray) -> np.ndarray:
        mask = np.ones(grid.shape[0], dtype=bool)
        if self.g is not None:
            mask &= np.asarray(evaluate(self.g, grid)) <= self.feas_tol
        if self.h is not None:
            mask &= np.abs(np.asarray(evaluate(self.h, grid))) <= self.feas_tol
        if self.polyhedron is not None:
            C, d = self.polyhedron
            mask &= np.all(grid @ C.T <= d + self.feas_tol, axis=1)
        return mask

    def lipschitz_estimate(self, fvals: np.ndarray) -> float:
        """Max difference quotient of the objective over the grid.

        All-pairs when the table fits; otherwise quotients over every
        neighbor offset in {-1,0,1}^dim, which also covers the diagonals.
        """
        if self.lipschitz is not None:
            return float(self.lipschitz)
        grid = self.grid_points()
        n = grid.shape[0]
        if n * n <= _BRUTE_LIMIT:
            dx = np.linalg.norm(grid[:, None, :] - grid[None, :, :], axis=2)
            df = np.abs(fvals[:, None] - fvals[None, :])
            with np.errstate(invalid="ignore", divide="ignore"):
                q = np.where(dx > 0, df / dx, 0.0)
            return float(np.max(q))
        shape = (self.grid_resolution,) * self.dim
        F = fvals.reshape(shape)
        steps = np.array([ax[1] - ax[0] for ax in self.axes()])
        best = 0.0
        for off in np.ndindex(*(3,) * self.dim):
            off = np.array(off) - 1
            if np.all(off == 0):
                continue
            src = tuple(slice(1, None) if o > 0 else slice(None, -1) if o < 0 else slice(None) for o in off)
            dst = tuple(slice(None, -1) if o > 0 else slice(1, None) if o < 0 else slice(None) for o in off)
            step = float(np.linalg.norm(off * steps))
            if step == 0.0:
                continue
            best = max(best, float(np.max(np.abs(F[src] - F[dst]))) / step)
        return best

    def config_echo(self) -> dict:
        """Resolved configuration, embedded in every report."""
        cfg = {
            "space_dim": self.dim,
            "objective": expr_to_json(self.objective),
            "box": [[float(lo), float(hi)] for lo, hi in self.box],
            "grid_resolution": self.grid_resolution,
            "tolerances": {
                "argmin_tol": self.argmin_tol,
                "tie_tol": self.tie_tol,
                "feas_tol": self.feas_tol,
            },
            "lambda": self.lam,
            "lipschitz": self.lipschitz,
            "seed": self.seed,
            "demyanov_directions": self.demyanov_directions,
        }
        if self.g is not None:
            cfg["g"] = expr_to_json(self.g)
        if self.h is not None:
            cfg["h"] = expr_to_json(self.h)
        if self.polyhedron is not None:
            C, d = self.polyhedron
            cfg["polyhedron"] = {"c": C.tolist(), "d": d.tolist()}
        if self.exhauster is not None:
            cfg["exhauster_members"] = len(self.exhauster.members)
        return cfg


def par_map(fn, items: Sequence):
    """Map with optional thread fan-out (WSHARP_THREADS), order preserved."""
    try:
        threads = int(os.environ.get("WSHARP_THREADS", "1"))
    except ValueError:
        threads = 1
    if threads <= 1 or len(items) < 64:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


@dataclass(frozen=True)
class ArgminResult:
    inf_f_hat: float
    argmin_mask: np.ndarray  # over the full grid
    argmin_points: np.ndarray
    argmin_tol: float


def detect_argmin(
    inst: ProblemInstance,
    grid: np.ndarray,
    fvals: np.ndarray,
    feasible: np.ndarray | None = None,
) -> ArgminResult:
    """Grid minimum of f (over the feasible grid in constrained mode) and
    the band of grid points within ``argmin_tol`` of it."""
    if feasible is None:
        feasible = np.ones(grid.shape[0], dtype=bool)
    if not np.any(feasible):
        raise ValueError("empty feasible grid: no point satisfies the constraints")
    inf_hat = float(np.min(fvals[feasible]))
    tol = inst.argmin_tol if inst.argmin_tol is not None else 1e-6 * (1.0 + abs(inf_hat))
    mask = feasible & (fvals <= inf_hat + tol)
    return ArgminResult(inf_hat, mask, grid[mask], float(tol))


def dist_to_set(points: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Euclidean distance from each row of ``points`` to the finite target set."""
    if targets.shape[0] == 0:
        return np.full(points.shape[0], np.inf)
    if points.shape[0] * targets.shape[0] <= _BRUTE_LIMIT:
        d = np.linalg.norm(points[:, None, :] - targets[None, :, :], axis=2)
        return np.min(d, axis=1)
    tree = cKDTree(targets)
    return tree.query(points, k=1)[0]


@dataclass(frozen=True)
class WsharpCheck:
    sigma: float
    sigma_hat: float
    violations: list = field(default_factory=list)
    sublevel_violations: list = field(default_factory=list)
    checked: int = 0


def verify_wsharp_inequality(
    inst: ProblemInstance,
    grid: np.ndarray,
    fvals: np.ndarray,
    argmin: ArgminResult,
    sigma: float,
    domain: np.ndarray | None = None,
    sublevel_check: bool = True,
) -> WsharpCheck:
    """Check sigma * dist(x, argmin) <= f(x) - inf_f_hat over the grid.

    ``domain`` restricts the quantifier (the feasible region in constrained
    mode).  Also reports the largest empirically valid modulus sigma_hat and,
    when ``sublevel_check`` is set, replays the inequality against sublevel
    sets lev_alpha f for a small decreasing grid of alpha values.
    """
    if domain is None:
        domain = np.ones(grid.shape[0], dtype=bool)
    pts = grid[domain]
    rhs = fvals[domain] - argmin.inf_f_hat
    dist = dist_to_set(pts, argmin.argmin_points)
    slack = _SLACK_REL * (1.0 + np.abs(rhs) + abs(sigma) * dist)
    bad = sigma * dist > rhs + slack
    violations = [
        {"point": pts[i].tolist(), "lhs": float(sigma * dist[i]), "rhs": float(rhs[i]), "kind": "wsharp"}
        for i in np.flatnonzero(bad)
    ]

    off = dist > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(off, rhs / np.where(off, dist, 1.0), np.inf)
    sigma_hat = float(np.min(ratios)) if np.any(off) else np.inf

    sublevel_violations: list = []
    if sublevel_check:
        span = float(np.max(fvals) - argmin.inf_f_hat)
        if span > 0:
            alphas = [argmin.inf_f_hat + span * 10.0 ** (-j) for j in range(2, 7)]
            for alpha in alphas:
                lev = grid[fvals <= alpha]
                if lev.shape[0] == 0:
                    continue
                dlev = dist_to_set(pts, lev)
                bad_a = sigma * dlev > rhs + slack
                for i in np.flatnonzero(bad_a):
                    sublevel_violations.append(
                        {
                            "point": pts[i].tolist(),
                            "lhs": float(sigma * dlev[i]),
                            "rhs": float(rhs[i]),
                            "kind": "sublevel",
                            "alpha": float(alpha),
                        }
                    )
    return WsharpCheck(float(sigma), sigma_hat, violations, sublevel_violations, int(pts.shape[0]))
