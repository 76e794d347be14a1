"""Distances, projections and Bouligand tangent-cone membership.

Two routes decide whether a direction ``w`` belongs to the tangent cone of a
closed set ``S`` at ``x``:

* the inner-product certificate: every active constraint ``h_i`` with a
  nonzero gradient satisfies ``<grad h_i(x), w> <= 0``;
* the numerical route: the ratio ``|x + tau w|_S / tau`` over a geometric grid
  of ``tau`` values, whose minimum stands in for the liminf.

Unions are handled through ``T_{A u B}(x) = T_A(x) u T_B(x)`` restricted to the
members that contain ``x``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import expr as ex
from .sets import EPS_ACT, EPS_MEM, ConstraintSet, Region, _as_batch

TAU_GRID = tuple(10.0 ** -k for k in range(1, 7))
DELTA_CONE = 1e-3
EPS_STRICT = 1e-7
EPS_ROUND = 1e-13  # relative slack for rounding in certificate inner products
ZERO_DIRECTION = 1e-12  # directions this short count as zero (always tangent)
EPS_CERT_OUT = 1e-9  # relative gradient product that certifies an outward direction
MAX_ITER = 500


class ProjectionError(ArithmeticError):
    """Alternating projections did not reach the set."""

    def __init__(self, message: str, best_bound: float):
        super().__init__(f"{message} (best distance bound {best_bound:.3g})")
        self.best_bound = best_bound


class ConeStatus(enum.IntEnum):
    IN_CERTIFIED = 0
    IN_NUMERICAL = 1
    NOT_IN_CONE = 2
    INDETERMINATE = 3

    @property
    def in_cone(self) -> bool:
        return self in (ConeStatus.IN_CERTIFIED, ConeStatus.IN_NUMERICAL)


@dataclass(frozen=True)
class ConeVerdict:
    status: ConeStatus
    margin: float
    strict: bool = False
    ratios: tuple = field(default=(), compare=False)

    @property
    def in_cone(self) -> bool:
        return self.status.in_cone

    @property
    def certified(self) -> bool:
        return self.status is ConeStatus.IN_CERTIFIED


# ---------------------------------------------------------------------------
# projection
# ---------------------------------------------------------------------------


def _project_region(reg: Region, X: np.ndarray, max_iter: int, tol: float):
    if reg.trivially_empty:
        return np.full_like(X, np.nan), np.zeros(X.shape[1], dtype=bool)
    if not reg.pieces:
        return X.copy(), np.ones(X.shape[1], dtype=bool)
    P = X.copy()
    inside = reg.contains(X, tol)
    todo = np.flatnonzero(~inside)
    if todo.size == 0:
        return P, inside
    Y = X[:, todo]
    if len(reg.pieces) == 1:
        Z = reg.pieces[0].project(Y)
    elif reg.convex:
        Z = _dykstra(reg, Y, max_iter, tol)
    else:
        # Dykstra's corrections can cycle on non-convex pieces
        Z = _alternate(reg, Y, max_iter, tol)
    P[:, todo] = Z
    ok = reg.contains(P, tol)
    return P, ok


def _dykstra(reg: Region, Y: np.ndarray, max_iter: int, tol: float) -> np.ndarray:
    pieces = reg.pieces
    x = Y.copy()
    incs = [np.zeros_like(Y) for _ in pieces]
    live = np.arange(Y.shape[1])
    for _ in range(max_iter):
        xl = x[:, live]
        prev = xl.copy()
        for i, p in enumerate(pieces):
            y = xl + incs[i][:, live]
            z = p.project(y)
            incs[i][:, live] = y - z
            xl = z
        x[:, live] = xl
        change = np.max(np.abs(xl - prev), axis=0)
        scale = 1.0 + np.max(np.abs(xl), axis=0)
        done = (change <= 1e-15 * scale) | ((change <= 1e-12 * scale) & reg.contains(xl, tol * 1e-2))
        live = live[~done]
        if live.size == 0:
            break
    return x


def _alternate(reg: Region, Y: np.ndarray, max_iter: int, tol: float) -> np.ndarray:
    x = Y.copy()
    live = np.arange(Y.shape[1])
    for _ in range(max_iter):
        xl = x[:, live]
        # feasibility only: exact piece projections buy nothing here
        for p in reg.pieces:
            xl = p.foot(xl)
        x[:, live] = xl
        live = live[~reg.contains(xl, tol * 1e-2)]
        if live.size == 0:
            break
    return x


def project_batch(S: ConstraintSet, X, max_iter: int = MAX_ITER, tol: float = EPS_MEM,
                  raise_on_fail: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Project the columns of ``X``; returns ``(P, ok)``.

    Members are their own projection.  For unions the nearest successful
    child projection wins.
    """
    Xb, _ = _as_batch(X)
    regs = S.regions()
    m = Xb.shape[1]
    if not regs:
        if raise_on_fail:
            raise ProjectionError("projection onto the empty set", np.inf)
        return np.full_like(Xb, np.nan), np.zeros(m, dtype=bool)
    best = np.full_like(Xb, np.nan)
    best_d = np.full(m, np.inf)
    ok_any = np.zeros(m, dtype=bool)
    for reg in regs:
        P, ok = _project_region(reg, Xb, max_iter, tol)
        d = np.linalg.norm(P - Xb, axis=0)
        better = ok & (d < best_d)
        best[:, better] = P[:, better]
        best_d[better] = d[better]
        ok_any |= ok
    if raise_on_fail and not ok_any.all():
        bad = int(np.argmin(ok_any))
        raise ProjectionError(
            f"projection did not converge after {max_iter} iterations at {Xb[:, bad].tolist()}",
            float(np.nanmin(np.linalg.norm(best - Xb, axis=0), initial=np.inf)),
        )
    return best, ok_any


def project_onto_set(S: ConstraintSet, x, max_iter: int = MAX_ITER) -> np.ndarray:
    P, _ = project_batch(S, np.asarray(x, dtype=float)[:, None], max_iter)
    return P[:, 0]


def distance_batch(S: ConstraintSet, X, max_iter: int = MAX_ITER,
                   raise_on_fail: bool = True) -> np.ndarray:
    Xb, _ = _as_batch(X)
    P, ok = project_batch(S, Xb, max_iter, raise_on_fail=raise_on_fail)
    d = np.linalg.norm(P - Xb, axis=0)
    return np.where(ok, d, np.nan)


def distance_to_set(S: ConstraintSet, x, max_iter: int = MAX_ITER) -> float:
    """``|x|_S``; zero for members."""
    return float(distance_batch(S, np.asarray(x, dtype=float)[:, None], max_iter)[0])


# ---------------------------------------------------------------------------
# tangent cones
# ---------------------------------------------------------------------------


def _region_certificate(reg: Region, X, D, tol_mem, tol_act):
    """Per column: (certified in, certified out, member, max inner product, normalised max).

    Out-certificates rest on ``T_S(x)`` lying inside the linearized cone, which
    holds for differentiable constraints without any qualification.
    """
    m = X.shape[1]
    member = np.asarray(reg.contains(X, tol_mem))
    none = np.zeros(m, dtype=bool)
    if not reg.pieces or reg.n_constraints == 0:
        return member, none, member, np.full(m, -np.inf), np.full(m, -np.inf)
    vals = reg.values(X)
    grads, bad = reg.grads(X)
    active = np.abs(vals) <= tol_act
    gnorm = np.sqrt(np.sum(grads * grads, axis=1))
    usable = ~np.any(active & (bad | (gnorm <= 1e-12)), axis=0)
    ip = np.einsum("knm,nm->km", grads, D)
    ip = np.where(active, ip, -np.inf)
    max_ip = np.max(ip, axis=0) if ip.shape[0] else np.full(m, -np.inf)
    dn = np.linalg.norm(D, axis=0)
    slack = EPS_ROUND * np.max(np.where(active, gnorm, 0.0), axis=0, initial=0.0) * dn
    cert = member & usable & (max_ip <= slack)
    # normalised violation of the worst active constraint
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(active, ip / (gnorm * np.where(dn > 0, dn, 1.0)), -np.inf)
    rel_max = np.max(rel, axis=0) if rel.shape[0] else np.full(m, -np.inf)
    out = member & usable & (rel_max > EPS_CERT_OUT)
    return cert, out, member, max_ip, rel_max


def numerical_ratios(S: ConstraintSet, X, D, taus=TAU_GRID) -> np.ndarray:
    """``|x + tau d|_S / tau`` for unit ``d``; shape ``(len(taus), m)``."""
    Xb, _ = _as_batch(X)
    Db, _ = _as_batch(D)
    nrm = np.linalg.norm(Db, axis=0)
    U = Db / np.where(nrm > 0, nrm, 1.0)
    base, _ = project_batch(S, Xb, raise_on_fail=False)
    base = np.where(np.isnan(base), Xb, base)
    out = np.empty((len(taus), Xb.shape[1]))
    for k, tau in enumerate(taus):
        out[k] = distance_batch(S, base + tau * U, raise_on_fail=False) / tau
    return out


def tangent_cone_batch(S: ConstraintSet, X, D, tol_mem: float = EPS_MEM,
                       tol_act: float = EPS_ACT, delta: float = DELTA_CONE,
                       numerical: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised cone test.  Returns ``(status codes, margins)``.

    Margins are the best certificate inner product for certified columns and
    the minimum distance ratio for numerical ones.
    """
    Xb, _ = _as_batch(X)
    Db, _ = _as_batch(D)
    m = Xb.shape[1]
    status = np.full(m, int(ConeStatus.INDETERMINATE))
    margin = np.full(m, np.inf)
    zero = np.linalg.norm(Db, axis=0) <= ZERO_DIRECTION
    certified = np.zeros(m, dtype=bool)
    # out of T_S needs: out of the cone of every region that contains x
    all_out = np.ones(m, dtype=bool)
    any_member = np.zeros(m, dtype=bool)
    out_margin = np.full(m, np.inf)
    for reg in S.regions():
        cert, out, member, max_ip, rel = _region_certificate(reg, Xb, Db, tol_mem, tol_act)
        margin = np.where(cert, np.minimum(margin, max_ip), margin)
        certified |= cert
        all_out &= out | ~member
        any_member |= member
        out_margin = np.where(member, np.minimum(out_margin, rel), out_margin)
    certified |= zero & np.asarray(S.contains(Xb, tol_mem))
    margin[zero] = np.minimum(margin[zero], 0.0)
    status[certified] = int(ConeStatus.IN_CERTIFIED)
    cert_out = all_out & any_member & ~certified & ~zero
    status[cert_out] = int(ConeStatus.NOT_IN_CONE)
    margin[cert_out] = out_margin[cert_out]
    rest = np.flatnonzero(~certified & ~cert_out)
    if rest.size and numerical:
        ratios = numerical_ratios(S, Xb[:, rest], Db[:, rest])
        with np.errstate(invalid="ignore"):
            mr = np.nanmin(np.where(np.isnan(ratios), np.inf, ratios), axis=0)
        failed = np.all(np.isnan(ratios), axis=0)
        st = np.where(mr <= delta, ConeStatus.IN_NUMERICAL,
                      np.where(mr >= 10 * delta, ConeStatus.NOT_IN_CONE, ConeStatus.INDETERMINATE))
        st = np.where(failed, ConeStatus.INDETERMINATE, st)
        status[rest] = st
        margin[rest] = mr
    return status, margin


def tangent_cone_contains(S: ConstraintSet, x, direction, tol_mem: float = EPS_MEM,
                          tol_act: float = EPS_ACT, delta: float = DELTA_CONE) -> ConeVerdict:
    """Decide ``direction in T_S(x)`` for a member ``x`` of ``S``."""
    x = np.asarray(x, dtype=float)
    d = np.asarray(direction, dtype=float)
    if not S.contains(x, tol_mem):
        raise ValueError(f"{x.tolist()} is not a member of the set")
    st, mg = tangent_cone_batch(S, x[:, None], d[:, None], tol_mem, tol_act, delta)
    status = ConeStatus(int(st[0]))
    ratios = ()
    if status is not ConeStatus.IN_CERTIFIED:
        ratios = tuple(numerical_ratios(S, x[:, None], d[:, None])[:, 0].tolist())
    return ConeVerdict(status, float(mg[0]), ratios=ratios)


def inner_product_certificate(h: ex.Expr, x, y, tol_act: float = EPS_ACT,
                              eps_strict: float = EPS_STRICT) -> ConeVerdict:
    """Certificate for ``y in T_{h <= 0}(x)`` from ``<grad h(x), y> <= 0``.

    An inner product strictly below ``-eps_strict`` sets ``strict``.  A zero or
    undefined gradient yields ``INDETERMINATE``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    val = ex.evaluate(h, x)
    if abs(val) > tol_act:
        raise ValueError(f"constraint is not active at {x.tolist()} (value {val:.3g})")
    try:
        g = ex.gradient(h, x)
    except ex.NonsmoothError:
        return ConeVerdict(ConeStatus.INDETERMINATE, float("nan"))
    if not np.any(g):
        return ConeVerdict(ConeStatus.INDETERMINATE, 0.0)
    ip = float(g @ y)
    if ip <= 0:
        return ConeVerdict(ConeStatus.IN_CERTIFIED, ip, strict=ip < -eps_strict)
    return ConeVerdict(ConeStatus.NOT_IN_CONE, ip)


def inner_products(h: ex.Expr, X, Y) -> tuple[np.ndarray, np.ndarray]:
    """Batched ``<grad h(x), y>`` with a flag for unusable gradients."""
    _, g, bad = ex.value_and_grad(h, X)
    ip = np.sum(g * np.asarray(Y, dtype=float), axis=0)
    unusable = bad | (np.sum(g * g, axis=0) == 0)
    return ip, unusable
