"""Run a suite by name."""

from __future__ import annotations

from .config import CheckConfig, LyapunovSpec
from .lyapunov import check_lyapunov_sublevel
from .nominal import (check_assumption_data, check_completeness, check_forward_invariance,
                      check_weak_forward_invariance)
from .report import CheckReport
from .robust import check_robust_forward, check_robust_weak

THEOREMS = ("data", "completeness", "wfi", "fi", "rwfi", "rfi", "ly")


def run_theorem(theorem: str, system, K=None, cfg: CheckConfig | None = None, window=None,
                mode: str = "standard", lyapunov: LyapunovSpec | None = None,
                set_name: str = "K") -> CheckReport:
    """Dispatch ``theorem`` (one of :data:`THEOREMS`) to its suite."""
    if theorem not in THEOREMS:
        raise ValueError(f"unknown theorem {theorem!r}; choose from {', '.join(THEOREMS)}")
    if theorem == "ly":
        if lyapunov is None:
            raise ValueError("the sublevel suite needs V, r and r_star")
        return check_lyapunov_sublevel(system, lyapunov, cfg, window=window, set_name=set_name)
    if K is None:
        raise ValueError(f"theorem {theorem!r} needs a candidate set")
    if theorem == "data":
        return check_assumption_data(system, K, cfg, window=window, set_name=set_name)
    if theorem == "completeness":
        return check_completeness(system, K, cfg, window=window, set_name=set_name)
    if theorem == "wfi":
        return check_weak_forward_invariance(system, K, cfg, window=window, set_name=set_name)
    if theorem == "fi":
        return check_forward_invariance(system, K, cfg, mode=mode, window=window, set_name=set_name)
    if theorem == "rwfi":
        return check_robust_weak(system, K, cfg, window=window, set_name=set_name)
    return check_robust_forward(system, K, cfg, window=window, set_name=set_name)
