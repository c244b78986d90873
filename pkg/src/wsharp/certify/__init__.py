"""Grid-based certification of weak sharp minimality and error bounds."""

from .constrained import PenaltySets, certify_constrained, penalty_demcoqd, penalty_demcoqd_sets
from .errorbound import check_error_bound
from .exhauster_cert import capped_cone_distance, certify_constrained_exhauster, certify_exhauster
from .instance import (
    DISCLAIMER,
    ArgminResult,
    ProblemInstance,
    WsharpCheck,
    detect_argmin,
    dist_to_set,
    verify_wsharp_inequality,
)
from .qd_cert import certify_qd, smoothness_probe
from .report import EXIT_CODES, CertificateReport, render_report
from .slope import strong_slope_estimate

__all__ = [
    "ArgminResult",
    "CertificateReport",
    "DISCLAIMER",
    "EXIT_CODES",
    "PenaltySets",
    "ProblemInstance",
    "WsharpCheck",
    "capped_cone_distance",
    "certify_constrained",
    "certify_constrained_exhauster",
    "certify_exhauster",
    "certify_qd",
    "check_error_bound",
    "detect_argmin",
    "dist_to_set",
    "penalty_demcoqd",
    "penalty_demcoqd_sets",
    "render_report",
    "smoothness_probe",
    "strong_slope_estimate",
    "verify_wsharp_inequality",
]
