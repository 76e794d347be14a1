"""Sublevel-set invariance from a Lyapunov-like function."""

from __future__ import annotations

import numpy as np

from .. import expr as ex
from ..geometry import EPS_ROUND, ConeStatus
from ..sets import ConstraintSet, find_member, intersection, sublevel
from ..systems import HybridSystem
from .completeness import completeness_entries
from .conditions import (FAIL, INDET, PASS, PASS_CERT, SKIP, Sampler, cone_matrix, entry_from,
                         jump_condition)
from .config import CheckConfig, LyapunovSpec
from .report import CheckReport, Entry, Verdict, witness
from .views import NominalView

WEAK_IDS = ("lya1", "lya2", "Ly.1", "Ly.2", "Ly.3", "Ly.4", "Ly.5")


def _vg(V, X):
    if X.shape[1] == 0:
        return np.zeros(0), np.zeros((X.shape[0], 0)), np.zeros(0, dtype=bool)
    return ex.value_and_grad(V, X)


def _filter(X, mask):
    return X[:, np.asarray(mask, dtype=bool)] if X.shape[1] else X


def check_lyapunov_sublevel(H: HybridSystem, spec: LyapunovSpec, cfg: CheckConfig | None = None,
                            window=None, set_name: str = "M_r") -> CheckReport:
    cfg = cfg or CheckConfig()
    view = NominalView(H, cfg)
    S = Sampler(cfg, window)
    n = H.dim
    V, r, rs = spec.V, float(spec.r), float(spec.r_star)
    LVr = sublevel(V, r, n)
    I = intersection(sublevel(V, rs, n), sublevel(-V, -r, n), prune=False)
    Mr = intersection(LVr, H.C_or_D)
    if Mr.is_empty or find_member(Mr) is None:
        raise ValueError("M_r appears empty: no witness point found")
    rep = CheckReport("Lyapunov sublevel invariance", set_name)
    rep.notes.append("regularity of C at boundary points is assumed (declared, not checked)")

    # lya1: <grad V, eta> <= 0 on I(r, r*) n C
    IC = intersection(I, H.C)
    X = np.zeros((n, 0)) if IC.is_empty else np.concatenate(
        [S.members(IC, "lya1.m"), S.boundary(IC, "lya1.b", cfg.member_samples)], axis=1)
    rep.add(_decrease(view, V, X, "lya1"))

    # lya2: V(G(x)) <= r on L_V(r) n D
    rep.add(jump_condition(view, LVr, S, "lya2", universal=True, source=LVr))

    # Ly.1: grad V nonzero on V^-1(r)
    Y = S.boundary(LVr, "Ly1.b")
    v, g, bad = _vg(V, Y)
    on = np.abs(v - r) <= cfg.eps_act
    gn = np.linalg.norm(g, axis=0)
    codes = np.where(on, np.where(bad, INDET, np.where(gn > 1e-12, PASS, FAIL)), SKIP)
    rep.add(entry_from("Ly.1", Y, codes, -gn, cfg,
                       lambda c: witness(Y[:, c], margin=-gn[c], note="gradient of V vanishes")))

    # Ly.2 and Ly.3 on boundary points of C within L_V(r), outside D
    CL = intersection(H.C, LVr)
    Z = np.zeros((n, 0)) if CL.is_empty else S.boundary(CL, "Ly23.b")
    if Z.shape[1]:
        onC = np.asarray(H.C.is_boundary(Z, cfg.eps_act, cfg.eps_mem))
        notD = ~np.asarray(H.D.contains(Z, cfg.eps_mem)) if not H.D.is_empty else np.ones(Z.shape[1], bool)
        Z = _filter(Z, onC & notD)
    rep.add(_cone_exists(view, Z, "Ly.2"))
    vz, _, _ = _vg(V, Z)
    Z3 = _filter(Z, np.abs(vz - r) <= cfg.eps_act) if Z.shape[1] else Z
    rep.add(_strict_decrease(view, V, Z3, "Ly.3"))

    # Ly.4: completeness with K* = M_r n C
    for e in completeness_entries(view, intersection(Mr, H.C), S, label="M_r n C"):
        e.id = e.id.replace("Nstar", "Ly.4")
        rep.add(e)

    # Ly.5 / Ly.6: jumps from M_r n D land in C u D
    rep.add(jump_condition(view, H.C_or_D, S, "Ly.5", universal=False, source=Mr))
    rep.add(jump_condition(view, H.C_or_D, S, "Ly.6", universal=True, source=Mr))

    rep.conclude("M_r weakly forward invariant", WEAK_IDS)
    rep.conclude("M_r forward invariant", WEAK_IDS + ("Ly.6",))
    return rep.finish("M_r forward invariant")


def _decrease(view: NominalView, V, X, cid) -> Entry:
    cfg = view.cfg
    m = X.shape[1]
    _, g, bad = _vg(V, X)
    worst = np.full(m, -np.inf)
    which = {}
    slack = np.zeros(m)
    for o in view.flow_options(X):
        ip = np.sum(g * o.values, axis=0)
        slack = np.maximum(slack, EPS_ROUND * np.linalg.norm(g, axis=0) * np.linalg.norm(o.values, axis=0))
        upd = o.avail & (ip > worst)
        worst = np.where(upd, ip, worst)
        for c in np.flatnonzero(upd):
            which[int(c)] = o
    any_opt = np.isfinite(worst)
    codes = np.where(~any_opt, SKIP, np.where(bad, INDET, np.where(worst <= slack, PASS_CERT, FAIL)))

    def describe(c):
        o = which.get(c)
        return witness(X[:, c], None if o is None else o.values[:, c], margin=worst[c],
                       note="V increases along a flow direction")

    return entry_from(cid, X, codes, np.where(any_opt, worst, np.nan), cfg, describe)


def _cone_exists(view: NominalView, X, cid) -> Entry:
    cfg = view.cfg
    if X.shape[1] == 0:
        return Entry(cid, Verdict.NOT_APPLICABLE, note="no boundary points of C in L_V(r) outside D")
    opts = view.flow_options(X)
    st, mg = cone_matrix(view.C, X, opts, cfg)
    some = np.any((st == ConeStatus.IN_CERTIFIED) | (st == ConeStatus.IN_NUMERICAL), axis=0)
    unsure = np.any(st == ConeStatus.INDETERMINATE, axis=0)
    codes = np.where(some, PASS, np.where(unsure, INDET, FAIL))
    margins = np.nanmin(np.where(st >= 0, mg, np.nan), axis=0, initial=np.inf)
    return entry_from(cid, X, codes, margins, cfg,
                      lambda c: witness(X[:, c], margin=margins[c], note="no flow direction in T_C"))


def _strict_decrease(view: NominalView, V, X, cid) -> Entry:
    """Some flow direction in ``T_C`` with ``<grad V, xi> < -eps_strict``."""
    cfg = view.cfg
    m = X.shape[1]
    if m == 0:
        return Entry(cid, Verdict.NOT_APPLICABLE, note="no points of V^-1(r) on bd C outside D")
    opts = view.flow_options(X)
    st, _ = cone_matrix(view.C, X, opts, cfg)
    _, g, bad = _vg(V, X)
    best = np.full(m, np.inf)
    cand = {}
    unsure = np.zeros(m, dtype=bool)
    for i, o in enumerate(opts):
        ip = np.sum(g * o.values, axis=0)
        inc = (st[i] == ConeStatus.IN_CERTIFIED) | (st[i] == ConeStatus.IN_NUMERICAL)
        unsure |= st[i] == ConeStatus.INDETERMINATE
        upd = inc & (ip < best)
        best = np.where(upd, ip, best)
        for c in np.flatnonzero(upd):
            cand[int(c)] = o
    ok = best < -cfg.eps_strict
    codes = np.where(bad, INDET, np.where(ok, PASS, np.where(unsure, INDET, FAIL)))

    def describe(c):
        o = cand.get(c)
        note = ("best candidate direction has no strict decrease" if o is not None
                else "no flow direction in T_C")
        return witness(X[:, c], None if o is None else o.values[:, c], margin=best[c], note=note)

    return entry_from(cid, X, codes, best, cfg, describe)
