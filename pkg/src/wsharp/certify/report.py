"""Certificate reports: structure, JSON and text rendering, exit codes.

JSON output is byte-deterministic for a fixed problem file and seed: field
order is fixed, floats are printed with 17 significant digits (enough to
round-trip doubles exactly), and wall-clock runtime is kept out of the JSON
form (it appears in the text rendering only).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .instance import DISCLAIMER

__all__ = ["CertificateReport", "EXIT_CODES", "render_report"]

EXIT_CODES = {"certified-empirical": 0, "refuted-on-grid": 2, "inconclusive": 3}

#: cap on witness lists embedded in reports
_MAX_WITNESSES = 1000


@dataclass
class CertificateReport:
    kind: str
    verdict: str
    inf_f_hat: float | None = None
    tau_sharp: float | None = None
    tau_sound: float | None = None
    zeta_sharp: float | None = None
    zeta_sound: float | None = None
    sigma: float | None = None
    sigma_hat: float | None = None
    argmin_points: list = field(default_factory=list)
    violations: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)
    instance: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)
    runtime_seconds: float | None = None  # text rendering only

    @property
    def exit_code(self) -> int:
        return EXIT_CODES.get(self.verdict, 3)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "verdict": self.verdict,
            "disclaimer": DISCLAIMER,
            "inf_f_hat": _plain(self.inf_f_hat),
            "tau_sharp": _plain(self.tau_sharp),
            "tau_sound": _plain(self.tau_sound),
            "zeta_sharp": _plain(self.zeta_sharp),
            "zeta_sound": _plain(self.zeta_sound),
            "sigma": _plain(self.sigma),
            "sigma_hat": _plain(self.sigma_hat),
            "argmin_count": len(self.argmin_points),
            "argmin_points": _plain(self.argmin_points[:_MAX_WITNESSES]),
            "violation_count": len(self.violations),
            "violations": _plain(self.violations[:_MAX_WITNESSES]),
            "notes": list(self.notes),
            "diagnostics": _plain(self.diagnostics),
            "instance": _plain(self.instance),
            "metadata": _plain(self.metadata),
        }

    def to_json(self) -> str:
        return dumps_stable(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "CertificateReport":
        d = json.loads(text)
        return cls(
            kind=d["kind"],
            verdict=d["verdict"],
            inf_f_hat=d.get("inf_f_hat"),
            tau_sharp=d.get("tau_sharp"),
            tau_sound=d.get("tau_sound"),
            zeta_sharp=d.get("zeta_sharp"),
            zeta_sound=d.get("zeta_sound"),
            sigma=d.get("sigma"),
            sigma_hat=d.get("sigma_hat"),
            argmin_points=d.get("argmin_points", []),
            violations=d.get("violations", []),
            notes=d.get("notes", []),
            diagnostics=d.get("diagnostics", {}),
            instance=d.get("instance", {}),
            metadata=d.get("metadata", {}),
        )

    def __eq__(self, other):
        if not isinstance(other, CertificateReport):
            return NotImplemented
        return self.to_dict() == other.to_dict()


def _plain(value):
    """Convert numpy scalars/arrays to plain JSON-ready Python values."""
    if value is None or isinstance(value, (bool, int, str)):
        return value
    if isinstance(value, float):
        return value
    if hasattr(value, "item") and not hasattr(value, "__len__"):
        return value.item()
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if hasattr(value, "tolist"):
        return _plain(value.tolist())
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def _fmt_float_json(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    if x == int(x) and abs(x) < 1e16:
        return f"{x:.1f}"  # keep a trailing .0 so floats re-parse as floats
    return format(x, ".17g")


def dumps_stable(obj, indent: int = 0) -> str:
    """Deterministic JSON with 17-significant-digit floats."""
    pad = " " * indent
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _fmt_float_json(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{pad}  {json.dumps(str(k))}: {dumps_stable(v, indent + 2)}' for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        flat = all(isinstance(v, (int, float, str, bool, type(None))) for v in obj)
        if flat:
            return "[" + ", ".join(dumps_stable(v) for v in obj) + "]"
        items = [f"{pad}  {dumps_stable(v, indent + 2)}" for v in obj]
        return "[\n" + ",\n".join(items) + f"\n{pad}]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _fmt_text(x) -> str:
    if x is None:
        return "n/a"
    if isinstance(x, float):
        return format(x, ".6g")
    return str(x)


def render_report(report: CertificateReport, fmt: str = "text") -> str:
    """Render a report; ``fmt`` is "text" (humans) or "json" (pipelines)."""
    if fmt == "json":
        return report.to_json()
    if fmt != "text":
        raise ValueError(f"unknown format {fmt!r}")
    r = report
    lines = [
        f"wsharp report: {r.kind}",
        f"verdict: {r.verdict} (exit {r.exit_code})",
    ]
    pairs = [
        ("inf_f_hat", r.inf_f_hat),
        ("tau_sharp", r.tau_sharp),
        ("tau_sound", r.tau_sound),
        ("zeta_sharp", r.zeta_sharp),
        ("zeta_sound", r.zeta_sound),
        ("sigma", r.sigma),
        ("sigma_hat", r.sigma_hat),
    ]
    stats = "  ".join(f"{k}={_fmt_text(v)}" for k, v in pairs if v is not None)
    if stats:
        lines.append(stats)
    lines.append(f"argmin points on grid: {len(r.argmin_points)}")
    if r.violations:
        lines.append(f"violations: {len(r.violations)} (showing up to 10)")
        for v in r.violations[:10]:
            pt = ", ".join(_fmt_text(c) for c in v.get("point", []))
            lines.append(f"  at ({pt}): lhs={_fmt_text(v.get('lhs'))} > rhs={_fmt_text(v.get('rhs'))} [{v.get('kind', '?')}]")
    for n in r.notes:
        lines.append(f"note: {n}")
    for k, v in r.diagnostics.items():
        if isinstance(v, (int, float, str, bool)):
            lines.append(f"{k}: {_fmt_text(v)}")
    meta = "  ".join(f"{k}={_fmt_text(v)}" for k, v in r.metadata.items() if isinstance(v, (int, float, str, bool)))
    if meta:
        lines.append(meta)
    if r.runtime_seconds is not None:
        lines.append(f"runtime: {r.runtime_seconds:.3f}s")
    lines.append(DISCLAIMER)
    return "\n".join(lines) + "\n"
