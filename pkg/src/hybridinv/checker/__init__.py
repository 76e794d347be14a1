"""Sampled and certificate-based checks of invariance conditions."""

from .config import CheckConfig, LyapunovSpec
from .dispatch import THEOREMS, run_theorem
from .lipschitz import LipschitzEstimate, lipschitz_estimate
from .lyapunov import check_lyapunov_sublevel
from .nominal import (check_assumption_data, check_completeness, check_forward_invariance,
                      check_weak_forward_invariance)
from .report import CheckReport, Entry, Verdict, Witness, combine
from .robust import check_robust_forward, check_robust_weak

__all__ = [
    "CheckConfig", "LyapunovSpec", "LipschitzEstimate", "lipschitz_estimate",
    "check_lyapunov_sublevel", "check_assumption_data", "check_completeness",
    "check_forward_invariance", "check_weak_forward_invariance", "check_robust_forward",
    "check_robust_weak", "CheckReport", "Entry", "Verdict", "Witness", "combine",
    "THEOREMS", "run_theorem",
]
