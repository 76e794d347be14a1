"""Sampled Lipschitz constants of flow maps."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..sampling import rng_for, sample_members, window_for
from ..sets import ConstraintSet
from ..systems import SetValuedMap
from .config import CheckConfig
from .report import Entry, Verdict, witness

REL_STEP = 1e-4


@dataclass(frozen=True)
class LipschitzEstimate:
    value: float
    pairs: int
    flagged: bool
    argmax: tuple | None = None


def _points(region, cfg, window, inflate, key):
    rng = rng_for(cfg.seed, key)
    if inflate > 0:
        lo, hi = window_for(region, window, pad=inflate)
        return lo[:, None] + (hi - lo)[:, None] * rng.random((lo.size, cfg.lipschitz_samples)), rng, (lo, hi)
    X = sample_members(region, cfg.lipschitz_samples, rng, window, cfg.eps_mem)
    return X, rng, window_for(region, window)


def _ratios(maps, X, Xi):
    best = np.zeros(X.shape[1])
    dist = np.linalg.norm(X - Xi, axis=0)
    for M in maps:
        for s in M.selections:
            diff = np.linalg.norm(s(X) - s(Xi), axis=0)
            with np.errstate(all="ignore"):
                best = np.fmax(best, diff / dist)
    return best


def estimate(maps: list[SetValuedMap], region: ConstraintSet, cfg: CheckConfig, window=None,
             inflate: float = 0.0, key: str = "lipschitz") -> LipschitzEstimate:
    X, rng, (lo, hi) = _points(region, cfg, window, inflate, key)
    if X.shape[1] == 0:
        return LipschitzEstimate(0.0, 0, False)
    scale = float(np.max(hi - lo)) if np.all(np.isfinite(hi - lo)) else 1.0
    U = rng.standard_normal(X.shape)
    U /= np.linalg.norm(U, axis=0)
    step = REL_STEP * max(scale, 1e-12)
    Xi = X + step * U
    if inflate <= 0:
        bad = ~np.asarray(region.contains(Xi, cfg.eps_mem))
        Xi[:, bad] = X[:, bad] - step * U[:, bad]
        keep = np.asarray(region.contains(Xi, cfg.eps_mem))
        X, Xi = X[:, keep], Xi[:, keep]
    if X.shape[1] == 0:
        return LipschitzEstimate(0.0, 0, False)
    r = _ratios(maps, X, Xi)
    k = int(np.nanargmax(r)) if np.any(np.isfinite(r)) else 0
    val = float(r[k]) if np.isfinite(r[k]) else float("inf")
    return LipschitzEstimate(val, int(X.shape[1]), not val <= cfg.lipschitz_flag, tuple(X[:, k].tolist()))


def lipschitz_estimate(Fmap: SetValuedMap, region: ConstraintSet, cfg: CheckConfig | None = None,
                       disturbances=None, window=None, inflate: float = 0.0) -> LipschitzEstimate:
    """Largest sampled ``|F(x, w) - F(xi, w)| / |x - xi|`` over nearby pairs of
    ``region``, all selections and the given disturbance values (``(dc, k)``)."""
    cfg = cfg or CheckConfig()
    n = region.dim
    if disturbances is None:
        maps = [Fmap]
    else:
        W = np.atleast_2d(np.asarray(disturbances, dtype=float))
        maps = [Fmap.slice({n + i: float(v) for i, v in enumerate(w)}) for w in W.T]
    return estimate(maps, region, cfg, window, inflate)


def lipschitz_entry(maps, region: ConstraintSet, cfg: CheckConfig, window=None,
                    cid: str = "lipschitz", inflate: float = 0.1) -> Entry:
    est = estimate(maps, region, cfg, window, inflate)
    info = {"estimate": est.value, "pairs": est.pairs}
    if est.pairs == 0:
        return Entry(cid, Verdict.NOT_APPLICABLE, note="no sample pairs", info=info)
    if est.flagged:
        return Entry(cid, Verdict.INDETERMINATE, [witness(est.argmax, margin=est.value)], est.pairs,
                     f"Lipschitz estimate {est.value:.3g} exceeds {cfg.lipschitz_flag:g}", info=info)
    return Entry(cid, Verdict.SAMPLED, n_samples=est.pairs,
                 note=f"Lipschitz estimate {est.value:.4g} on K n C inflated by {inflate:.0%}", info=info)
