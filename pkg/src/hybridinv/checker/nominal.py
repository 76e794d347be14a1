"""Invariance suites for nominal hybrid systems."""

from __future__ import annotations

from ..sets import ConstraintSet, intersection
from ..systems import HybridSystem
from .completeness import completeness_entries
from .conditions import Sampler, data_entries, flow_exists, flow_universal, jump_condition, kl_condition
from .config import CheckConfig
from .lipschitz import lipschitz_entry
from .report import CheckReport
from .views import NominalView, view_for

DATA_IDS = ("data.K_in_CD", "data.KC_closed", "data.F_bounded")
STAR_IDS = ("Nstar",)


def _setup(system, K, cfg, window):
    cfg = cfg or CheckConfig()
    view = view_for(system, cfg)
    if K.dim != view.dim:
        raise ValueError(f"K has dimension {K.dim}, system has {view.dim}")
    return cfg, view, Sampler(cfg, window)


def check_assumption_data(H: HybridSystem, K: ConstraintSet, cfg: CheckConfig | None = None,
                          window=None, set_name: str = "K") -> CheckReport:
    cfg, view, S = _setup(H, K, cfg, window)
    rep = CheckReport("data assumption", set_name)
    for e in data_entries(view, K, S):
        rep.add(e)
    rep.conclude("data assumption", DATA_IDS)
    return rep.finish("data assumption")


def check_completeness(H: HybridSystem, K: ConstraintSet, cfg: CheckConfig | None = None,
                       kind: str = "strong", window=None, set_name: str = "K") -> CheckReport:
    """N-star for ``K* = K n C`` (``kind="strong"``) or ``K \\ D`` (``"weak"``)."""
    cfg, view, S = _setup(H, K, cfg, window)
    rep = CheckReport("completeness", set_name)
    for e in _star(view, K, S, kind):
        rep.add(e)
    rep.conclude("N-star", STAR_IDS)
    return rep.finish("N-star")


def _star(view: NominalView, K, S, kind):
    if kind == "weak":
        return completeness_entries(view, K, S, exclude=view.D, label="K \\ D")
    if kind == "strong":
        return completeness_entries(view, intersection(K, view.C), S, label="K n C")
    raise ValueError(f"unknown completeness kind {kind!r}")


def weak_suite(view: NominalView, K, S, ids=("wfi.1", "wfi.2"), theorem="weak forward invariance",
               set_name="K", extra=()) -> CheckReport:
    rep = CheckReport(theorem, set_name)
    for e in data_entries(view, K, S):
        rep.add(e)
    for e in extra:
        rep.add(e)
    rep.add(jump_condition(view, K, S, ids[0], universal=False))
    rep.add(flow_exists(view, K, S, ids[1]))
    rep.add(kl_condition(view, K, S))
    for e in _star(view, K, S, "weak"):
        rep.add(e)
    pre = DATA_IDS + tuple(e.id for e in extra) + ids
    rep.conclude("weakly forward pre-invariant", pre)
    rep.conclude("weakly forward invariant", pre + ("KL",) + STAR_IDS)
    return rep.finish("weakly forward invariant")


def strong_suite(view: NominalView, K, S, ids=("fi.1", "fi.2"), mode="standard",
                 theorem="forward invariance", set_name="K", extra=(), gate=None,
                 side=()) -> CheckReport:
    """``extra`` entries join the conclusions; ``side`` entries are reported only
    (their effect enters through ``gate``)."""
    rep = CheckReport(theorem, set_name)
    cfg = view.cfg
    for e in data_entries(view, K, S):
        rep.add(e)
    KC = intersection(K, view.C)
    maps = [m for _, m, _ in view.flow_maps()]
    rep.add(lipschitz_entry(maps, KC, cfg, S.window))
    for e in tuple(extra) + tuple(side):
        rep.add(e)
    rep.add(jump_condition(view, K, S, ids[0], universal=True))
    flow = flow_universal(view, K, S, ids[1], mode)
    for e in flow:
        rep.add(e)
    rep.add(kl_condition(view, K, S))
    for e in _star(view, K, S, "strong"):
        rep.add(e)
    pre = DATA_IDS + ("lipschitz",) + tuple(e.id for e in extra) + (ids[0],) + tuple(e.id for e in flow)
    rep.conclude("forward pre-invariant", pre, gate)
    rep.conclude("forward invariant", pre + ("KL",) + STAR_IDS, gate)
    if mode == "alt":
        rep.notes.append("boundary condition replaced by the split pair on bd C n D and elsewhere")
    return rep.finish("forward invariant")


def check_weak_forward_invariance(H: HybridSystem, K: ConstraintSet, cfg: CheckConfig | None = None,
                                  window=None, set_name: str = "K") -> CheckReport:
    cfg, view, S = _setup(H, K, cfg, window)
    return weak_suite(view, K, S, set_name=set_name)


def check_forward_invariance(H: HybridSystem, K: ConstraintSet, cfg: CheckConfig | None = None,
                             mode: str = "standard", window=None, set_name: str = "K") -> CheckReport:
    """``mode`` is ``"standard"`` or ``"alt"`` (the split boundary condition)."""
    cfg, view, S = _setup(H, K, cfg, window)
    return strong_suite(view, K, S, mode=mode, set_name=set_name)
