"""Problem-file parsing, command dispatch, and report rendering.

Commands: certify-qd, certify-constrained, certify-exhauster,
certify-constrained-exhauster, slope, errorbound, demyanov, wsharp-check.
Both spellings work: ``wsharp certify-qd --problem p.json`` and
``wsharp --command certify-qd --problem p.json``.

Exit codes: 0 certified-empirical, 2 refuted-on-grid, 3 inconclusive,
1 usage or input errors.  JSON reports are byte-deterministic for a fixed
problem file and seed.  ``WSHARP_THREADS`` caps grid-sweep parallelism.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .certify import (
    CertificateReport,
    ProblemInstance,
    certify_constrained,
    certify_constrained_exhauster,
    certify_exhauster,
    certify_qd,
    check_error_bound,
    detect_argmin,
    dist_to_set,
    render_report,
    smoothness_probe,
    strong_slope_estimate,
    verify_wsharp_inequality,
)
from .certify.report import dumps_stable
from .demyanov import demyanov_diff
from .exhauster import LowerExhauster
from .geometry import Polytope
from .qdcalc import ExprFormatError, evaluate, expr_from_json

__all__ = ["ProblemFormatError", "execute", "main", "parse_problem"]

COMMANDS = (
    "certify-qd",
    "certify-constrained",
    "certify-exhauster",
    "certify-constrained-exhauster",
    "slope",
    "errorbound",
    "demyanov",
    "wsharp-check",
)


class ProblemFormatError(ValueError):
    """Malformed problem file; message carries a JSON-pointer path."""


def _require(cond: bool, path: str, msg: str):
    if not cond:
        raise ProblemFormatError(f"{path}: {msg}")


def parse_problem(path: str | Path) -> tuple[ProblemInstance, dict]:
    """Load and validate a problem file; returns (instance, options)."""
    p = Path(path)
    if not p.exists():
        raise ProblemFormatError(f"problem file not found: {p}")
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProblemFormatError(f"{p}: not valid UTF-8 JSON ({exc})") from exc
    _require(isinstance(doc, dict), "/", "problem file must be a JSON object")

    version = doc.get("version", 1)
    _require(version == 1, "/version", f"unrecognized format version {version!r}")

    dim = doc.get("space_dim")
    _require(isinstance(dim, int) and dim >= 1, "/space_dim", "positive integer required")

    _require("objective" in doc, "/objective", "missing objective expression")
    try:
        objective = expr_from_json(doc["objective"], dim, "/objective")
    except ExprFormatError as exc:
        raise ProblemFormatError(str(exc)) from exc

    box = doc.get("box")
    _require(isinstance(box, list) and len(box) == dim, "/box", f"expected {dim} [low, high] pairs")
    for i, pair in enumerate(box):
        _require(
            isinstance(pair, list) and len(pair) == 2 and all(isinstance(c, (int, float)) for c in pair),
            f"/box/{i}",
            "expected [low, high]",
        )
        _require(pair[0] <= pair[1], f"/box/{i}", f"low {pair[0]} exceeds high {pair[1]}")

    res = doc.get("grid_resolution", 201)
    _require(isinstance(res, int) and res >= 2, "/grid_resolution", "integer >= 2 required")

    g = h = polyhedron = None
    cons = doc.get("constraints")
    if cons is not None:
        _require(isinstance(cons, dict), "/constraints", "expected an object")
        if "g" in cons:
            try:
                g = expr_from_json(cons["g"], dim, "/constraints/g")
            except ExprFormatError as exc:
                raise ProblemFormatError(str(exc)) from exc
        if "h" in cons:
            try:
                h = expr_from_json(cons["h"], dim, "/constraints/h")
            except ExprFormatError as exc:
                raise ProblemFormatError(str(exc)) from exc
        if "polyhedron" in cons:
            poly = cons["polyhedron"]
            _require(
                isinstance(poly, dict) and "c" in poly and "d" in poly,
                "/constraints/polyhedron",
                "expected {'c': [[...]], 'd': [...]}",
            )
            C = np.asarray(poly["c"], dtype=float)
            d = np.asarray(poly["d"], dtype=float)
            _require(
                C.ndim == 2 and C.shape[1] == dim and d.shape == (C.shape[0],),
                "/constraints/polyhedron",
                f"rows must have {dim} coefficients and one right-hand side each",
            )
            polyhedron = (C, d)

    tols = doc.get("tolerances", {})
    _require(isinstance(tols, dict), "/tolerances", "expected an object")

    exhauster = None
    if "exhauster" in doc:
        try:
            exhauster = LowerExhauster.from_json(doc["exhauster"])
        except (ValueError, TypeError) as exc:
            raise ProblemFormatError(f"/exhauster: {exc}") from exc

    options = doc.get("options", {})
    _require(isinstance(options, dict), "/options", "expected an object")

    try:
        inst = ProblemInstance(
            dim=dim,
            objective=objective,
            box=np.asarray(box, dtype=float),
            grid_resolution=res,
            g=g,
            h=h,
            polyhedron=polyhedron,
            argmin_tol=tols.get("argmin_tol"),
            tie_tol=float(tols.get("tie_tol", 1e-9)),
            feas_tol=float(tols.get("feas_tol", 1e-8)),
            lam=doc.get("lambda"),
            lipschitz=doc.get("lipschitz"),
            seed=int(doc.get("seed", 0)),
            exhauster=exhauster,
            demyanov_directions=int(doc.get("demyanov_directions", 4096)),
        )
    except ValueError as exc:
        raise ProblemFormatError(f"/: {exc}") from exc
    return inst, options


def _with_overrides(inst: ProblemInstance, args) -> ProblemInstance:
    import dataclasses

    changes = {}
    if getattr(args, "lam", None) is not None:
        changes["lam"] = args.lam
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if getattr(args, "exhauster", None):
        rows = json.loads(Path(args.exhauster).read_text(encoding="utf-8"))
        changes["exhauster"] = LowerExhauster.from_json(rows)
    return dataclasses.replace(inst, **changes) if changes else inst


def _wsharp_check(inst: ProblemInstance, sigma: float) -> CertificateReport:
    import time

    t0 = time.perf_counter()
    grid = inst.grid_points()
    fvals = np.asarray(evaluate(inst.objective, grid), dtype=float)
    feasible = inst.feasible_mask(grid) if inst.has_constraints else None
    argmin = detect_argmin(inst, grid, fvals, feasible)
    check = verify_wsharp_inequality(
        inst, grid, fvals, argmin, sigma=sigma, domain=feasible, sublevel_check=not inst.has_constraints
    )
    report = CertificateReport(
        kind="wsharp-check",
        verdict="refuted-on-grid" if (check.violations or check.sublevel_violations) else "certified-empirical",
        inf_f_hat=argmin.inf_f_hat,
        sigma=sigma,
        sigma_hat=check.sigma_hat,
        argmin_points=argmin.argmin_points.tolist(),
        violations=check.violations + check.sublevel_violations,
        instance=inst.config_echo(),
        metadata={"seed": inst.seed, "grid_points": int(grid.shape[0]), "checked": check.checked},
    )
    report.runtime_seconds = time.perf_counter() - t0
    return report


def _emit_csv(path: str, inst: ProblemInstance, report: CertificateReport):
    grid = inst.grid_points()
    fvals = np.asarray(evaluate(inst.objective, grid), dtype=float)
    argmin_pts = np.asarray(report.argmin_points, dtype=float).reshape(-1, inst.dim)
    dists = dist_to_set(grid, argmin_pts) if argmin_pts.size else np.full(grid.shape[0], np.nan)
    inf_hat = report.inf_f_hat if report.inf_f_hat is not None else 0.0
    sigma = report.sigma
    with open(path, "w", encoding="utf-8") as fh:
        coords = ",".join(f"x{i+1}" for i in range(inst.dim))
        fh.write(f"{coords},f,dist_to_argmin,condition_value\n")
        for x, fv, dv in zip(grid, fvals, dists):
            cond = (fv - inf_hat) - sigma * dv if sigma is not None and np.isfinite(dv) else float("nan")
            row = ",".join(format(c, ".17g") for c in x)
            fh.write(f"{row},{fv:.17g},{dv:.17g},{cond:.17g}\n")


def execute(command: str, inst: ProblemInstance, options: dict, args) -> CertificateReport:
    """Dispatch one certify-style command on a parsed instance."""
    if command == "certify-qd":
        report = certify_qd(inst)
        smoothness_probe(inst, report)
        return report
    if command == "certify-constrained":
        if inst.g is None and inst.h is None:
            raise ProblemFormatError("/constraints: certify-constrained needs expression constraints g and/or h")
        return certify_constrained(inst)
    if command == "certify-exhauster":
        return certify_exhauster(inst)
    if command == "certify-constrained-exhauster":
        if inst.polyhedron is None:
            raise ProblemFormatError("/constraints/polyhedron: this command needs polyhedral constraints")
        return certify_constrained_exhauster(inst)
    if command == "errorbound":
        alpha = args.alpha if args.alpha is not None else float(options.get("alpha", 0.0))
        beta = args.beta if args.beta is not None else float(options.get("beta", 0.0))
        tau = args.tau if args.tau is not None else float(options.get("tau", 1.0))
        return check_error_bound(inst, alpha=alpha, beta=beta, tau=tau)
    if command == "wsharp-check":
        sigma = args.sigma if args.sigma is not None else options.get("sigma")
        if sigma is None:
            raise ProblemFormatError("/options/sigma: wsharp-check needs --sigma or options.sigma")
        return _wsharp_check(inst, float(sigma))
    raise ProblemFormatError(f"unknown command {command!r}")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wsharp",
        description="weak sharp minima certification over box grids",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(sp):
        sp.add_argument("--problem", required=False, help="problem JSON file")
        sp.add_argument("--format", choices=("text", "json"), default="text")
        sp.add_argument("--seed", type=int, default=None, help="override the problem seed")
        sp.add_argument("--emit-csv", dest="emit_csv", default=None, metavar="PATH")

    for name in ("certify-qd", "certify-constrained", "certify-exhauster",
                 "certify-constrained-exhauster", "wsharp-check", "errorbound", "slope"):
        sp = sub.add_parser(name)
        add_common(sp)
        sp.add_argument("--sigma", type=float, default=None)
        sp.add_argument("--lambda", dest="lam", type=float, default=None)
        sp.add_argument("--exhauster", default=None, help="exhauster JSON file overriding symbolic construction")
        if name == "errorbound":
            sp.add_argument("--alpha", type=float, default=None)
            sp.add_argument("--beta", type=float, default=None)
            sp.add_argument("--tau", type=float, default=None)
        if name == "slope":
            sp.add_argument("--at", action="append", default=[], metavar="X1,X2,...",
                            help="evaluation point, repeatable")

    spd = sub.add_parser("demyanov")
    spd.add_argument("polytope_a", help="vertex-list JSON file")
    spd.add_argument("polytope_b", help="vertex-list JSON file")
    spd.add_argument("--backend", choices=("auto", "exact1d", "exact2d", "sampled"), default="auto")
    spd.add_argument("--directions", type=int, default=4096)
    spd.add_argument("--seed", type=int, default=None)
    spd.add_argument("--format", choices=("text", "json"), default="json")
    return parser


def _normalize_argv(argv: list[str]) -> list[str]:
    """Accept --command NAME as an alias for the subcommand spelling."""
    if "--command" in argv:
        i = argv.index("--command")
        if i + 1 < len(argv):
            name = argv[i + 1]
            rest = argv[:i] + argv[i + 2 :]
            return [name] + rest
    return argv


def _run_demyanov(args) -> int:
    from .geometry import DEFAULT_SEED

    def load(path):
        rows = json.loads(Path(path).read_text(encoding="utf-8"))
        return Polytope.from_vertex_list(rows)

    A, B = load(args.polytope_a), load(args.polytope_b)
    seed = args.seed if args.seed is not None else DEFAULT_SEED
    res = demyanov_diff(A, B, backend=args.backend, n_directions=args.directions, seed=seed)
    payload = {
        "vertices": res.set.to_vertex_list(),
        "backend": res.backend,
        "sample_count": res.sample_count,
        "tie_skipped": res.tie_skipped,
    }
    if args.format == "json":
        print(dumps_stable(payload))
    else:
        print(f"backend: {res.backend}  samples: {res.sample_count}  ties skipped: {res.tie_skipped}")
        for v in payload["vertices"]:
            print("  " + ", ".join(format(c, ".6g") for c in v))
    return 0


def _run_slope(args, inst: ProblemInstance, options: dict) -> int:
    raw_points = args.at or options.get("at", [])
    if not raw_points:
        raise ProblemFormatError("slope needs at least one --at point")
    pts = []
    for spec in raw_points:
        parts = spec.split(",") if isinstance(spec, str) else list(spec)
        if len(parts) != inst.dim:
            raise ProblemFormatError(f"--at {spec!r}: expected {inst.dim} coordinates")
        pts.append([float(c) for c in parts])
    slopes = [strong_slope_estimate(inst.objective, x) for x in pts]
    payload = {"kind": "slope", "points": pts, "slopes": slopes, "estimator": "numerical"}
    if args.format == "json":
        print(dumps_stable(payload))
    else:
        for x, s in zip(pts, slopes):
            print(f"slope at ({', '.join(format(c, '.6g') for c in x)}) = {s:.6g}")
    return 0


def main(argv: list[str] | None = None) -> int:
    argv = _normalize_argv(list(sys.argv[1:] if argv is None else argv))
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse uses exit code 2, which collides with "refuted-on-grid"
        return 0 if exc.code in (0, None) else 1

    try:
        if args.command == "demyanov":
            return _run_demyanov(args)
        if not args.problem:
            raise ProblemFormatError(f"{args.command} needs --problem")
        inst, options = parse_problem(args.problem)
        inst = _with_overrides(inst, args)
        if args.command == "slope":
            return _run_slope(args, inst, options)
        report = execute(args.command, inst, options, args)
    except (ProblemFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    sys.stdout.write(render_report(report, args.format))
    if args.emit_csv:
        _emit_csv(args.emit_csv, inst, report)
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
