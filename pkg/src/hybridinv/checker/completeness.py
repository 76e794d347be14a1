"""Condition N-star through compactness or linear growth of the flow map."""

from __future__ import annotations

import numpy as np

from ..sampling import rng_for, sample_members, window_for
from ..sets import ConstraintSet
from .conditions import Sampler
from .report import Entry, Verdict, witness
from .views import NominalView

PROBE_SAMPLES = 300
GROWTH_SLACK = 1.5


def _growth(view: NominalView, X: np.ndarray):
    """Per column ``max |f| / (1 + |x|)`` over the available flow options."""
    ratio = np.full(X.shape[1], -np.inf)
    for o in view.flow_options(X):
        r = np.linalg.norm(o.values, axis=0) / (1.0 + np.linalg.norm(X, axis=0))
        ratio = np.where(o.avail, np.maximum(ratio, r), ratio)
    return ratio


def completeness_entries(view: NominalView, Kstar: ConstraintSet, S: Sampler,
                         exclude: ConstraintSet | None = None, label: str = "K*") -> list[Entry]:
    """``Nstar.compact``, ``Nstar.growth`` and their disjunction ``Nstar``."""
    cfg = view.cfg
    if Kstar.is_empty:
        return [Entry(i, Verdict.NOT_APPLICABLE, note=f"{label} is empty")
                for i in ("Nstar.compact", "Nstar.growth", "Nstar")]

    def keep(X):
        if exclude is None or exclude.is_empty or X.shape[1] == 0:
            return X
        return X[:, ~np.asarray(exclude.contains(X, cfg.eps_mem))]

    structural = Kstar.bounded
    lo, hi = window_for(Kstar, S.window)
    center, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    scales = (1.0,) if structural else tuple(cfg.growth_scales)
    radii, growth, far, steep = [], [], [], []
    for s in scales:
        win = (center - s * half, center + s * half)
        X = keep(sample_members(Kstar, PROBE_SAMPLES, rng_for(cfg.seed, f"Nstar.{s:g}"), win, cfg.eps_mem))
        if X.shape[1] == 0:
            radii.append(0.0)
            growth.append(0.0)
            far.append(None)
            steep.append(None)
            continue
        nx = np.linalg.norm(X, axis=0)
        g = _growth(view, X)
        radii.append(float(nx.max()))
        far.append(X[:, int(np.argmax(nx))])
        growth.append(float(np.max(g)) if np.any(np.isfinite(g)) else 0.0)
        steep.append(X[:, int(np.argmax(g))])
    info = {"K_star": label, "scales": list(scales), "sup_norm": radii, "growth": growth}

    if structural:
        compact = Entry("Nstar.compact", Verdict.CERTIFIED, n_samples=0,
                        note=f"{label} lies in a bounded set (structural bounds)", info=info)
    elif radii[-1] > 2.0 * max(radii[0], 1e-12):
        compact = Entry("Nstar.compact", Verdict.VIOLATED, [witness(far[-1], note="far point of K*")],
                        PROBE_SAMPLES * len(scales), f"{label} is unbounded", info=info)
    else:
        compact = Entry("Nstar.compact", Verdict.SAMPLED, n_samples=PROBE_SAMPLES * len(scales),
                        note=f"{label} bounded by probing", info=info)

    c0, c1 = growth[0], growth[-1]
    if not np.isfinite(c1):
        gv = Verdict.INDETERMINATE
    elif structural or c1 <= GROWTH_SLACK * c0 + 1e-12:
        gv = Verdict.SAMPLED
    else:
        gv = Verdict.VIOLATED
    wits = [witness(steep[-1], margin=c1, note="growth ratio keeps increasing")] if gv is not Verdict.SAMPLED and steep[-1] is not None else []
    if gv is Verdict.VIOLATED and not wits:
        gv = Verdict.INDETERMINATE
    growth_e = Entry("Nstar.growth", gv, wits, PROBE_SAMPLES * len(scales),
                     f"fit |F(x)| <= c (1 + |x|), c = {c1:.4g}", info={"c": c1})

    if compact.verdict is Verdict.CERTIFIED:
        v, which = Verdict.CERTIFIED, "compact"
    elif compact.verdict is Verdict.SAMPLED or growth_e.verdict is Verdict.SAMPLED:
        v = Verdict.SAMPLED
        which = "compact" if compact.verdict is Verdict.SAMPLED else "growth"
    elif compact.verdict is Verdict.VIOLATED and growth_e.verdict is Verdict.VIOLATED:
        v, which = Verdict.VIOLATED, "neither"
    else:
        v, which = Verdict.INDETERMINATE, "neither"
    star = Entry("Nstar", v, list(growth_e.witnesses) if v is Verdict.VIOLATED else [],
                 note=f"K* = {label}; clause: {which}", info={"clause": which})
    return [compact, growth_e, star]

