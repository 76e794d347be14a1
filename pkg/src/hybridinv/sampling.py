"""Deterministic sampling of sets, their boundaries and corners."""

from __future__ import annotations

import itertools
import zlib

import numpy as np

from .geometry import project_batch
from .sets import EPS_ACT, EPS_MEM, ConstraintSet, Region

DEFAULT_HALF_WIDTH = 10.0


def rng_for(seed: int, key: str) -> np.random.Generator:
    """Independent stream per (seed, key) so results do not depend on call order."""
    return np.random.default_rng([int(seed), zlib.crc32(key.encode())])


def window_for(S: ConstraintSet, window=None, pad: float = 0.1) -> tuple[np.ndarray, np.ndarray]:
    """Sampling box: the set's finite bounds, else the supplied window, else +-10."""
    lo, hi = S.bounds()
    if window is not None:
        wlo, whi = (np.asarray(w, dtype=float) for w in window)
    else:
        wlo = np.full(S.dim, -DEFAULT_HALF_WIDTH)
        whi = np.full(S.dim, DEFAULT_HALF_WIDTH)
    lo = np.where(np.isfinite(lo), np.maximum(lo, wlo) if window is not None else lo, wlo)
    hi = np.where(np.isfinite(hi), np.minimum(hi, whi) if window is not None else hi, whi)
    # keep degenerate directions degenerate, pad the rest
    span = hi - lo
    lo = np.where(span > 0, lo - pad * span, lo)
    hi = np.where(span > 0, hi + pad * span, hi)
    return lo, hi


def _uniform(rng, lo, hi, m):
    return lo[:, None] + (hi - lo)[:, None] * rng.random((lo.size, m))


def _dedup(X: np.ndarray, decimals: int = 12) -> np.ndarray:
    if X.shape[1] == 0:
        return X
    _, idx = np.unique(np.round(X, decimals), axis=1, return_index=True)
    return X[:, np.sort(idx)]


def _in_window(X, lo, hi, slack=1e-9):
    return np.all((X >= lo[:, None] - slack) & (X <= hi[:, None] + slack), axis=0)


def sample_members(S: ConstraintSet, count: int, rng: np.random.Generator, window=None,
                   tol: float = EPS_MEM) -> np.ndarray:
    """Points of ``S``: anchors, rejection samples, then projections."""
    n = S.dim
    if S.is_empty:
        return np.zeros((n, 0))
    lo, hi = window_for(S, window)
    parts = []
    anchors = [a for a in S.anchors() if np.all(np.isfinite(a))]
    if anchors:
        A = np.stack(anchors, axis=1)
        parts.append(A[:, np.asarray(S.contains(A, tol)) & _in_window(A, lo, hi)])
    X = _uniform(rng, lo, hi, 4 * count)
    parts.append(X[:, np.asarray(S.contains(X, tol))][:, :count])
    have = sum(p.shape[1] for p in parts)
    if have < count:
        Y = _uniform(rng, lo, hi, count - have)
        P, ok = project_batch(S, Y, raise_on_fail=False)
        ok &= np.asarray(S.contains(np.nan_to_num(P), tol))
        parts.append(P[:, ok])
    out = _dedup(np.concatenate(parts, axis=1))
    return out[:, :count] if out.shape[1] > count else out


def _newton_to_surface(reg: Region, k: int, X: np.ndarray, iters: int = 40) -> np.ndarray:
    """Move points onto ``h_k = 0`` along the gradient of ``h_k``."""
    X = X.copy()
    for _ in range(iters):
        v = reg.values(X)[k]
        g, _ = reg.grads(X)
        g = g[k]
        gg = np.sum(g * g, axis=0)
        step = np.where(gg > 0, v / np.where(gg > 0, gg, 1.0), 0.0)
        X = X - g * step
        if np.max(np.abs(v)) < 1e-14:
            break
    return X


def _gauss_newton_pair(reg: Region, ks, X: np.ndarray, iters: int = 40) -> np.ndarray:
    """Move points onto the intersection of several constraint surfaces."""
    X = X.copy()
    ks = list(ks)
    for _ in range(iters):
        v = reg.values(X)[ks]  # (p, m)
        g, _ = reg.grads(X)
        J = np.transpose(g[ks], (2, 0, 1))  # (m, p, n)
        # minimum-norm step: J^T (J J^T)^-1 v
        JJt = J @ np.transpose(J, (0, 2, 1))
        JJt += 1e-14 * np.eye(len(ks))[None]
        try:
            lam = np.linalg.solve(JJt, v.T[:, :, None])[:, :, 0]
        except np.linalg.LinAlgError:
            break
        step = np.einsum("mpn,mp->nm", J, lam)
        X = X - step
        if np.max(np.abs(v)) < 1e-14:
            break
    return X


def sample_boundary(S: ConstraintSet, count: int, rng: np.random.Generator, window=None,
                    tol: float = EPS_MEM, tol_act: float = EPS_ACT, corners: bool = True) -> np.ndarray:
    """Boundary points of ``S``, with faces and corners deliberately included."""
    n = S.dim
    if S.is_empty:
        return np.zeros((n, 0))
    lo, hi = window_for(S, window)
    parts = []
    anchors = [a for a in S.anchors() if np.all(np.isfinite(a))]
    if anchors:
        parts.append(np.stack(anchors, axis=1))
    # projections of outside points land on the boundary
    Y = _uniform(rng, lo, hi, count)
    P, ok = project_batch(S, Y, raise_on_fail=False)
    parts.append(P[:, ok])
    # faces and corners of each region
    regs = S.regions()
    budget = max(8, count // max(1, len(regs)))
    for reg in regs:
        k_total = reg.n_constraints
        if k_total == 0:
            continue
        rlo, rhi = window_for(reg, (lo, hi), pad=0.0)
        per_face = max(4, budget // (2 * k_total))
        for k in range(k_total):
            Z = _newton_to_surface(reg, k, _uniform(rng, rlo, rhi, per_face))
            parts.append(Z)
        if corners and k_total >= 2:
            pairs = list(itertools.combinations(range(k_total), 2))
            per_pair = max(2, budget // (4 * len(pairs)))
            for ks in pairs:
                Z = _gauss_newton_pair(reg, ks, _uniform(rng, rlo, rhi, per_pair))
                parts.append(Z)
    X = np.concatenate([p for p in parts if p.size], axis=1) if parts else np.zeros((n, 0))
    X = X[:, np.all(np.isfinite(X), axis=0)]
    X = X[:, _in_window(X, lo, hi)]
    if X.shape[1] == 0:
        return X
    keep = np.asarray(S.is_boundary(X, tol_act, tol))
    X = _dedup(X[:, keep])
    if X.shape[1] > count:
        # keep corners and anchors (placed first) plus a random subset of the rest
        idx = np.concatenate([np.arange(min(len(anchors), X.shape[1])),
                              np.sort(rng.choice(np.arange(len(anchors), X.shape[1]),
                                                 size=max(0, count - len(anchors)), replace=False))])
        X = X[:, idx.astype(int)]
    return X
