"""Robust invariance suites for disturbed hybrid systems."""

from __future__ import annotations

import numpy as np

from ..sampling import rng_for
from ..sets import ConstraintSet
from ..systems import DisturbedHybridSystem
from .conditions import FAIL, PASS, SKIP, Sampler, entry_from
from .config import CheckConfig
from .nominal import _setup, strong_suite, weak_suite
from .report import CheckReport, Entry, Verdict, witness
from .views import RobustView

WBOUND_RADIUS = 1e-3


def wdata_entry(view: RobustView, S: Sampler) -> Entry:
    """``0`` is an admissible flow disturbance at sampled points of the flow projection."""
    Hw: DisturbedHybridSystem = view.system
    cfg = view.cfg
    if not Hw.wdata:
        return Entry("wdata.zero", Verdict.NOT_APPLICABLE, note="wdata not asserted")
    if view.C.is_empty:
        return Entry("wdata.zero", Verdict.NOT_APPLICABLE, note="empty flow projection")
    X = np.concatenate([S.members(view.C, "wdata.m"), S.boundary(view.C, "wdata.b", cfg.member_samples)], axis=1)
    joint = np.vstack([X, np.zeros((Hw.dc, X.shape[1]))])
    ok = np.asarray(Hw.C_w.contains(joint, cfg.eps_act))
    margins = np.asarray(Hw.C_w.violation(joint), dtype=float)
    return entry_from("wdata.zero", X, np.where(ok, PASS, FAIL), margins, cfg,
                      lambda c: witness(X[:, c], disturbance=np.zeros(Hw.dc), margin=margins[c],
                                        note="zero disturbance not admissible"))


def wbound_entry(view: RobustView, K: ConstraintSet, S: Sampler) -> Entry:
    """Near boundary points of K in the flow projection, admissible flow
    disturbances do not grow."""
    Hw: DisturbedHybridSystem = view.system
    cfg = view.cfg
    Xi = S.boundary(K, "wbound.b")
    if Xi.shape[1]:
        Xi = Xi[:, np.asarray(view.C.contains(Xi, cfg.eps_mem))]
    m = Xi.shape[1]
    if m == 0:
        return Entry("wbound", Verdict.NOT_APPLICABLE, note="no boundary points of K in the flow projection")
    rng = rng_for(cfg.seed, "wbound.perturb")
    U = rng.standard_normal(Xi.shape)
    U /= np.linalg.norm(U, axis=0)
    X = Xi + WBOUND_RADIUS * rng.random(m) * U
    near = np.asarray(view.C.contains(X, cfg.eps_mem))
    W = Hw.grid_c(cfg.disturbance_grid)
    k = W.shape[1]

    def psi(P, tol):
        joint = np.vstack([np.repeat(P, k, axis=1), np.tile(W, (1, P.shape[1]))])
        return np.asarray(Hw.C_w.contains(joint, tol)).reshape(P.shape[1], k)

    at_x = psi(X, cfg.eps_mem)
    at_xi = psi(Xi, cfg.eps_act)
    extra = at_x & ~at_xi
    bad = np.any(extra, axis=1) & near
    codes = np.where(near, np.where(bad, FAIL, PASS), SKIP)
    margins = extra.sum(axis=1).astype(float)

    def describe(c):
        w = W[:, int(np.argmax(extra[c]))]
        return witness(Xi[:, c], X[:, c] - Xi[:, c], w, margins[c],
                       "disturbance admissible near the boundary point but not at it")

    return entry_from("wbound", Xi, codes, margins, cfg, describe)


def check_robust_weak(Hw: DisturbedHybridSystem, K: ConstraintSet, cfg: CheckConfig | None = None,
                      window=None, set_name: str = "K") -> CheckReport:
    cfg, view, S = _setup(Hw, K, cfg, window)
    rep = weak_suite(view, K, S, ids=("rwFI.1", "rwFI.2"), theorem="robust weak forward invariance",
                     set_name=set_name, extra=[wdata_entry(view, S)])
    rep.notes.append(f"disturbance grid {cfg.disturbance_grid} points per dimension")
    return rep


def check_robust_forward(Hw: DisturbedHybridSystem, K: ConstraintSet, cfg: CheckConfig | None = None,
                         window=None, set_name: str = "K") -> CheckReport:
    cfg, view, S = _setup(Hw, K, cfg, window)
    wb = wbound_entry(view, K, S)
    gate = Verdict.INDETERMINATE if wb.verdict is Verdict.VIOLATED else None
    rep = strong_suite(view, K, S, ids=("rFI.1", "rFI.2"), theorem="robust forward invariance",
                       set_name=set_name, extra=[wdata_entry(view, S)], gate=gate, side=[wb])
    rep.notes.append(f"disturbance grid {cfg.disturbance_grid} points per dimension")
    if gate is not None:
        rep.notes.append("wbound fails at a sample: the theorem's hypotheses are unmet, so the conclusion is Indeterminate")
    return rep
