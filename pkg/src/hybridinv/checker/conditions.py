"""Sampled conditions shared by the nominal and robust invariance suites."""

from __future__ import annotations

import numpy as np

from ..geometry import ConeStatus, tangent_cone_batch
from ..sampling import rng_for, sample_boundary, sample_members
from ..sets import ConstraintSet, intersection
from .config import CheckConfig
from .report import Entry, Verdict, witness
from .views import NominalView, Option

# per-point outcomes
SKIP, PASS_CERT, PASS, FAIL, INDET = -1, 0, 1, 2, 3


class Sampler:
    """Keyed, reproducible samples of sets within a window."""

    def __init__(self, cfg: CheckConfig, window=None):
        self.cfg = cfg
        self.window = window if window is not None else cfg.window

    def members(self, S: ConstraintSet, key: str, count: int | None = None) -> np.ndarray:
        return sample_members(S, count or self.cfg.member_samples, rng_for(self.cfg.seed, key),
                              self.window, self.cfg.eps_mem)

    def boundary(self, S: ConstraintSet, key: str, count: int | None = None) -> np.ndarray:
        return sample_boundary(S, count or self.cfg.boundary_samples, rng_for(self.cfg.seed, key),
                               self.window, self.cfg.eps_mem, self.cfg.eps_act)


def empty_points(n: int) -> np.ndarray:
    return np.zeros((n, 0))


def entry_from(cid: str, X: np.ndarray, codes: np.ndarray, margins: np.ndarray, cfg: CheckConfig,
               describe=None, note: str = "", info: dict | None = None) -> Entry:
    """Aggregate per-point outcomes into an entry.

    Passing samples give ``SampledPass`` even when every one of them is
    certified; the certified fraction is recorded in ``info``.
    """
    info = dict(info or {})
    used = codes != SKIP
    Xu, cu, mu = X[:, used], codes[used], margins[used]
    n = int(used.sum())
    if n == 0:
        return Entry(cid, Verdict.NOT_APPLICABLE, n_samples=0, note=note or "no relevant sample points",
                     points=Xu, margins=mu, info=info)
    info["certified_fraction"] = float(np.mean(cu == PASS_CERT))
    wits = []
    if np.any(cu == FAIL):
        verdict = Verdict.VIOLATED
        bad = np.flatnonzero(cu == FAIL)
        order = bad[np.argsort(-np.nan_to_num(mu[bad], nan=np.inf), kind="stable")]
        seen = set()
        for k in order:
            col = int(np.flatnonzero(used)[k])
            w = describe(col) if describe else witness(X[:, col], margin=margins[col])
            key = (w.point, w.direction, w.disturbance)
            if key in seen:
                continue
            seen.add(key)
            wits.append(w)
            if len(wits) >= cfg.max_witnesses:
                break
    elif np.any(cu == INDET):
        verdict = Verdict.INDETERMINATE
        k = int(np.flatnonzero(cu == INDET)[0])
        col = int(np.flatnonzero(used)[k])
        wits.append(describe(col) if describe else witness(X[:, col], margin=margins[col]))
    else:
        verdict = Verdict.SAMPLED
    return Entry(cid, verdict, wits, n, note, Xu, mu, info)


def cone_matrix(S: ConstraintSet, X: np.ndarray, options: list[Option], cfg: CheckConfig):
    """Cone status and margin of every option at every column (-1 when unavailable)."""
    k, m = len(options), X.shape[1]
    status = np.full((k, m), -1)
    margin = np.full((k, m), np.nan)
    for i, o in enumerate(options):
        cols = np.flatnonzero(o.avail)
        if cols.size:
            st, mg = tangent_cone_batch(S, X[:, cols], o.values[:, cols], cfg.eps_mem, cfg.eps_act,
                                        cfg.delta_cone)
            status[i, cols] = st
            margin[i, cols] = mg
    return status, margin


def _in(st):
    return (st == ConeStatus.IN_CERTIFIED) | (st == ConeStatus.IN_NUMERICAL)


def blocked_pairs(view: NominalView, X: np.ndarray, options: list[Option]) -> np.ndarray:
    """``(groups, m)``: True where ``x`` is on the boundary of the flow set and no
    option of that disturbance value points into its tangent cone."""
    cfg = view.cfg
    n_groups = max((o.group for o in options), default=-1) + 1
    out = np.zeros((n_groups, X.shape[1]), dtype=bool)
    if X.shape[1] == 0 or n_groups == 0:
        return out
    onb = np.asarray(view.C.is_boundary(X, cfg.eps_act, cfg.eps_mem))
    cols = np.flatnonzero(onb)
    if cols.size == 0:
        return out
    sub = [Option(o.values[:, cols], o.avail[cols], o.selection, o.w, o.group) for o in options]
    st, _ = cone_matrix(view.C, X[:, cols], sub, cfg)
    for g in range(n_groups):
        rows = [i for i, o in enumerate(options) if o.group == g]
        s = st[rows]
        some_in = np.any(_in(s), axis=0)
        unsure = np.any(s == ConeStatus.INDETERMINATE, axis=0)
        out[g, cols] = ~some_in & ~unsure
    # a disturbance value is only relevant where (x, w) is in the joint flow set
    for g in range(n_groups):
        rows = [i for i, o in enumerate(options) if o.group == g]
        present = np.any(np.stack([options[i].avail for i in rows]), axis=0)
        out[g] &= present
    return out


def in_L(view: NominalView, X: np.ndarray) -> np.ndarray:
    """Points of ``X`` in the projection of the flow-blocked set."""
    opts = view.flow_options(X)
    return np.any(blocked_pairs(view, X, opts), axis=0)


# ---------------------------------------------------------------------------
# data assumptions
# ---------------------------------------------------------------------------


def data_entries(view: NominalView, K: ConstraintSet, S: Sampler, prefix: str = "data") -> list[Entry]:
    cfg = view.cfg
    if K.is_empty:
        raise ValueError("candidate set K is empty")
    X = np.concatenate([S.members(K, f"{prefix}.K"), S.boundary(K, f"{prefix}.dK", cfg.member_samples)], axis=1)
    if X.shape[1] == 0:
        raise ValueError("no sample of K found; K appears empty")
    ok = np.asarray(view.C_or_D.contains(X, cfg.eps_act))
    codes = np.where(ok, PASS, FAIL)
    margins = np.asarray(view.C_or_D.violation(X), dtype=float)
    entries = [entry_from(f"{prefix}.K_in_CD", X, codes, margins, cfg,
                          note="K contained in the closure of the flow set union the jump set")]
    entries.append(Entry(f"{prefix}.KC_closed", Verdict.CERTIFIED, n_samples=0,
                         note="closed by construction (only non-strict constraints)"))
    KC = intersection(K, view.C)
    Y = S.members(KC, f"{prefix}.KC") if not KC.is_empty else np.zeros((view.dim, 0))
    opts = view.flow_options(Y)
    norms = [np.linalg.norm(o.values[:, o.avail], axis=0) for o in opts]
    norms = np.concatenate(norms) if norms else np.zeros(0)
    bound = float(np.max(norms)) if norms.size else 0.0
    fin = np.isfinite(bound)
    entries.append(Entry(f"{prefix}.F_bounded", Verdict.SAMPLED if fin else Verdict.INDETERMINATE,
                         [] if fin else [witness(Y[:, 0])], int(Y.shape[1]),
                         "max |F| over samples of K n C", info={"max_norm": bound}))
    return entries


# ---------------------------------------------------------------------------
# jump conditions
# ---------------------------------------------------------------------------


def jump_condition(view: NominalView, K: ConstraintSet, S: Sampler, cid: str, universal: bool,
                   source: ConstraintSet | None = None) -> Entry:
    """``exists`` (weak) or ``for all`` (strong) jump values landing in ``K``.

    Jumps start from ``K n D`` unless another ``source`` is given.
    """
    cfg = view.cfg
    if source is None:
        source = K
    KD = intersection(source, view.D) if not view.D.is_empty else view.D
    if KD.is_empty:
        return Entry(cid, Verdict.NOT_APPLICABLE, note="no jump points to check")
    X = np.concatenate([S.members(KD, "jump.m"), S.boundary(KD, "jump.b", cfg.member_samples // 2)], axis=1)
    m = X.shape[1]
    opts, saturated = view.jump_options(X)
    worst = {}
    any_avail = np.zeros(m, dtype=bool)
    ok_all = np.ones(m, dtype=bool)
    ok_any = np.zeros(m, dtype=bool)
    viol_best = np.full(m, np.inf)
    viol_worst = np.full(m, -np.inf)
    for i, o in enumerate(opts):
        cols = np.flatnonzero(o.avail)
        if cols.size == 0:
            continue
        v = np.asarray(K.violation(o.values[:, cols]), dtype=float)
        inside = v <= cfg.eps_act
        any_avail[cols] = True
        ok_all[cols] &= inside
        ok_any[cols] |= inside
        upd = v > viol_worst[cols]
        viol_worst[cols[upd]] = v[upd]
        for c in cols[upd]:
            worst[int(c)] = i
        viol_best[cols] = np.minimum(viol_best[cols], v)
    if universal:
        codes = np.where(ok_all, PASS, FAIL)
        margins = np.where(any_avail, viol_worst, 0.0)
        codes[~any_avail] = PASS  # G(x) empty: nothing can leave
    else:
        codes = np.where(ok_any, PASS, FAIL)
        margins = np.where(any_avail, viol_best, np.inf)

    def describe(col):
        if universal:
            o = opts[worst[col]]
            return witness(X[:, col], o.values[:, col], o.w, margins[col],
                           f"selection {o.selection} lands outside the target set")
        return witness(X[:, col], None, None, margins[col], "no jump value lands in the target set"
                       + (f" ({int(sum(o.avail[col] for o in opts))} options tried)"))

    info = {"options": len(opts), "cap_saturated": bool(saturated)}
    return entry_from(cid, X, codes, margins, cfg, describe, info=info)


# ---------------------------------------------------------------------------
# flow conditions
# ---------------------------------------------------------------------------


def _flow_points(view, K, S, cid):
    KC = intersection(K, view.C) if not view.C.is_empty else view.C
    if KC.is_empty:
        return KC, np.zeros((view.dim, 0))
    return KC, S.boundary(KC, "flow.b")


def flow_exists(view: NominalView, K: ConstraintSet, S: Sampler, cid: str) -> Entry:
    """Some (zero-disturbance) flow option points into ``T_{K n C}`` at boundary
    points of ``K n C`` outside ``D`` and the flow-blocked set."""
    cfg = view.cfg
    KC, X = _flow_points(view, K, S, cid)
    m = X.shape[1]
    if m == 0:
        return Entry(cid, Verdict.NOT_APPLICABLE, note="no boundary points of K n C")
    all_opts = view.flow_options(X)
    blocked = blocked_pairs(view, X, all_opts)
    present = np.zeros_like(blocked)
    for o in all_opts:
        present[o.group] |= o.avail
    relevant = np.any(present & ~blocked, axis=0)
    inD = np.asarray(view.D.contains(X, cfg.eps_mem)) if not view.D.is_empty else np.zeros(m, dtype=bool)
    keep = relevant & ~inD
    opts = view.flow_options(X, zero_only=True)
    st, mg = cone_matrix(KC, X, opts, cfg)
    inside = _in(st)
    cert = np.any(st == ConeStatus.IN_CERTIFIED, axis=0)
    some_in = np.any(inside, axis=0)
    unsure = np.any(st == ConeStatus.INDETERMINATE, axis=0)
    codes = np.where(cert, PASS_CERT, np.where(some_in, PASS, np.where(unsure, INDET, FAIL)))
    margins = np.nanmin(np.where(inside, mg, np.nan), axis=0, initial=np.inf)
    fail_m = np.nanmin(np.where(st >= 0, mg, np.nan), axis=0, initial=np.inf)
    margins = np.where(some_in, margins, fail_m)
    codes[~keep] = SKIP

    def describe(col):
        ok = [i for i in range(len(opts)) if st[i, col] >= 0]
        d = opts[ok[0]].values[:, col] if ok else None
        return witness(X[:, col], d, opts[ok[0]].w if ok else None, margins[col],
                       "no flow option in the tangent cone of K n C" if ok else "no flow option available")

    info = {"boundary_points": int(m), "excluded_D": int(np.sum(inD)),
            "excluded_L": int(np.sum(~relevant))}
    return entry_from(cid, X, codes, margins, cfg, describe, info=info)


def flow_universal(view: NominalView, K: ConstraintSet, S: Sampler, cid: str,
                   mode: str = "standard") -> list[Entry]:
    """Every flow option points into ``T_{K n C}`` at boundary points of ``K n C``
    outside the flow-blocked set.

    ``mode="alt"`` splits the boundary: points of ``bd C n D`` only need that no
    option lies in ``T_C \\ T_{K n C}``.
    """
    cfg = view.cfg
    KC, X = _flow_points(view, K, S, cid)
    m = X.shape[1]
    if m == 0:
        ids = [cid] if mode == "standard" else [cid + "''", cid + "''s"]
        return [Entry(i, Verdict.NOT_APPLICABLE, note="no boundary points of K n C") for i in ids]
    opts = view.flow_options(X)
    blocked = blocked_pairs(view, X, opts)
    st, mg = cone_matrix(KC, X, opts, cfg)
    # drop options whose (x, w) pair is flow-blocked
    for i, o in enumerate(opts):
        st[i, blocked[o.group]] = -1
    on_dC = np.asarray(view.C.is_boundary(X, cfg.eps_act, cfg.eps_mem))
    inD = np.asarray(view.D.contains(X, cfg.eps_mem)) if not view.D.is_empty else np.zeros(m, dtype=bool)
    corner = on_dC & inD
    used = np.any(st >= 0, axis=0)

    inside = _in(st)
    avail = st >= 0
    all_in = np.all(inside | ~avail, axis=0)
    all_cert = np.all((st == ConeStatus.IN_CERTIFIED) | ~avail, axis=0)
    any_out = np.any(st == ConeStatus.NOT_IN_CONE, axis=0)
    codes_std = np.where(all_cert, PASS_CERT, np.where(all_in, PASS, np.where(any_out, FAIL, INDET)))
    margins_std = np.nanmax(np.where(avail, mg, np.nan), axis=0, initial=-np.inf)
    codes_std = np.where(used, codes_std, SKIP)

    def describe_std(col):
        bad = [i for i in range(len(opts)) if st[i, col] == ConeStatus.NOT_IN_CONE] or \
              [i for i in range(len(opts)) if st[i, col] == ConeStatus.INDETERMINATE]
        o = opts[bad[0]]
        return witness(X[:, col], o.values[:, col], o.w, mg[bad[0], col],
                       f"selection {o.selection} leaves the tangent cone of K n C")

    info = {"boundary_points": int(m), "points_on_dC_and_D": int(np.sum(corner & used)),
            "points_elsewhere": int(np.sum(~corner & used))}
    if mode == "standard":
        return [entry_from(cid, X, codes_std, margins_std, cfg, describe_std, info=info)]
    if mode != "alt":
        raise ValueError(f"unknown mode {mode!r}")
    # fi2'': the standard test away from bd C n D
    e1 = entry_from(cid + "''", X, np.where(corner, SKIP, codes_std), margins_std, cfg, describe_std, info=info)
    # fi2''s: on bd C n D no option may lie in T_C but outside T_{K n C}
    stC, _ = cone_matrix(view.C, X, opts, cfg)
    for i, o in enumerate(opts):
        stC[i, blocked[o.group]] = -1
    inC = _in(stC)
    escape = inC & (st == ConeStatus.NOT_IN_CONE)
    unsure = ((stC == ConeStatus.INDETERMINATE) & ~(st == ConeStatus.IN_CERTIFIED) & ~(st == ConeStatus.IN_NUMERICAL)) | \
             (inC & (st == ConeStatus.INDETERMINATE))
    codes_s = np.where(np.any(escape, axis=0), FAIL, np.where(np.any(unsure, axis=0), INDET, PASS))
    codes_s = np.where(corner & used, codes_s, SKIP)
    margins_s = np.nanmax(np.where(avail, mg, np.nan), axis=0, initial=-np.inf)

    def describe_s(col):
        bad = [i for i in range(len(opts)) if escape[i, col]] or [i for i in range(len(opts)) if unsure[i, col]]
        o = opts[bad[0]]
        return witness(X[:, col], o.values[:, col], o.w, mg[bad[0], col],
                       f"selection {o.selection} lies in T_C but not in T_(K n C)")

    e2 = entry_from(cid + "''s", X, codes_s, margins_s, cfg, describe_s, info=info)
    return [e1, e2]


# ---------------------------------------------------------------------------
# flow-blocked points
# ---------------------------------------------------------------------------


def kl_condition(view: NominalView, K: ConstraintSet, S: Sampler, cid: str = "KL") -> Entry:
    """Flow-blocked boundary points of the flow set that lie in K must lie in D."""
    cfg = view.cfg
    if view.C.is_empty:
        return Entry(cid, Verdict.NOT_APPLICABLE, note="empty flow set")
    X = S.boundary(view.C, "KL.b")
    KX = intersection(K, view.C)
    if not KX.is_empty:
        X = np.concatenate([X, S.boundary(KX, "KL.kb", cfg.boundary_samples // 2)], axis=1)
    m = X.shape[1]
    if m == 0:
        return Entry(cid, Verdict.NOT_APPLICABLE, note="no boundary points")
    inK = np.asarray(K.contains(X, cfg.eps_mem))
    L = in_L(view, X)
    inD = np.asarray(view.D.contains(X, cfg.eps_mem)) if not view.D.is_empty else np.zeros(m, dtype=bool)
    codes = np.where(L & inK, np.where(inD, PASS, FAIL), SKIP)
    margins = np.where(inD, 0.0, 1.0)
    e = entry_from(cid, X, codes, margins, cfg,
                   lambda col: witness(X[:, col], note="flow-blocked point of K outside D"),
                   note="" if np.any(codes != SKIP) else "no flow-blocked points in K")
    e.info["L_points"] = int(np.sum(L))
    return e
