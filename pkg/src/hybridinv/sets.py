"""Closed regions of R^n described by finitely many ``h(x) <= 0`` constraints.

A :class:`Region` is an intersection of primitive pieces (boxes, balls,
halfspaces, expression sublevel sets).  A :class:`Union` is a finite union of
regions.  Both are immutable and hashable; intersections distribute over
unions so every set is a union of regions.

Membership uses the tolerance ``eps_mem``; a constraint is active when its
value lies within ``eps_act`` of zero.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from . import expr as ex

EPS_MEM = 1e-9
EPS_ACT = 1e-7
PROBE_RADIUS = 1e-6


def _tup(v) -> tuple:
    return tuple(float(a) for a in np.ravel(np.asarray(v, dtype=float)))


def _as_batch(X) -> tuple[np.ndarray, bool]:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        return X[:, None], True
    return X, False


# ---------------------------------------------------------------------------
# primitive pieces
# ---------------------------------------------------------------------------


class Piece:
    """One primitive constraint family over R^dim."""

    dim: int

    def values(self, X: np.ndarray) -> np.ndarray:  # (k, m)
        raise NotImplementedError

    def grads(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Constraint gradients ``(k, n, m)`` and nonsmooth flags ``(k, m)``."""
        raise NotImplementedError

    def project(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def foot(self, X: np.ndarray) -> np.ndarray:
        """A cheap point of the piece; defaults to the projection."""
        return self.project(X)

    def exprs(self) -> list[ex.Expr]:
        raise NotImplementedError

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        n = self.dim
        return np.full(n, -np.inf), np.full(n, np.inf)

    def anchors(self) -> list[np.ndarray]:
        return []

    def slice(self, fixed: dict[int, float], keep: list[int]) -> "Piece | None | bool":
        """Restrict to fixed coordinates.  ``True`` means the piece became
        vacuous, ``None`` that it became infeasible."""
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    @property
    def convex(self) -> bool:
        return True


def _enc(v: float):
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


@dataclass(frozen=True)
class Box(Piece):
    lo: tuple
    hi: tuple

    def __post_init__(self):
        if len(self.lo) != len(self.hi):
            raise ValueError("box bounds differ in length")

    @property
    def dim(self) -> int:
        return len(self.lo)

    @cached_property
    def _rows(self):
        # (index, sign, bound) for each finite bound: sign*(x_i - bound) <= 0
        rows = []
        for i, (a, b) in enumerate(zip(self.lo, self.hi)):
            if math.isfinite(b):
                rows.append((i, 1.0, b))
            if math.isfinite(a):
                rows.append((i, -1.0, a))
        return rows

    @property
    def empty(self) -> bool:
        return any(a > b for a, b in zip(self.lo, self.hi))

    def values(self, X):
        if not self._rows:
            return np.zeros((0, X.shape[1]))
        idx = [r[0] for r in self._rows]
        sgn = np.array([r[1] for r in self._rows])[:, None]
        bnd = np.array([r[2] for r in self._rows])[:, None]
        return sgn * (X[idx] - bnd)

    def grads(self, X):
        k, m = len(self._rows), X.shape[1]
        g = np.zeros((k, self.dim, m))
        for r, (i, s, _) in enumerate(self._rows):
            g[r, i] = s
        return g, np.zeros((k, m), dtype=bool)

    def project(self, X):
        return np.clip(X, np.array(self.lo)[:, None], np.array(self.hi)[:, None])

    def exprs(self):
        return [ex.mul(ex.const(s), ex.add(ex.var(i), ex.const(-b))) for i, s, b in self._rows]

    def bounds(self):
        return np.array(self.lo, dtype=float), np.array(self.hi, dtype=float)

    def anchors(self):
        lo, hi = np.array(self.lo), np.array(self.hi)
        out = []
        if np.all(np.isfinite(lo)) and np.all(np.isfinite(hi)):
            out.append((lo + hi) / 2)
            if self.dim <= 4:
                for corner in itertools.product(*zip(lo, hi)):
                    out.append(np.array(corner))
        else:
            # clamp the origin into the box as a representative point
            out.append(np.clip(np.zeros(self.dim), lo, hi))
        return out

    def slice(self, fixed, keep):
        for i, v in fixed.items():
            if v < self.lo[i] - EPS_MEM or v > self.hi[i] + EPS_MEM:
                return None
        lo = tuple(self.lo[i] for i in keep)
        hi = tuple(self.hi[i] for i in keep)
        if all(math.isinf(a) for a in lo + hi):
            return True
        return Box(lo, hi)

    def to_dict(self):
        return {"box": {"lo": [_enc(v) for v in self.lo], "hi": [_enc(v) for v in self.hi]}}


@dataclass(frozen=True)
class Ball(Piece):
    """``sum_{i in axes} (x_i - c_i)^2 <= r^2``; ``axes`` defaults to all coordinates."""

    center: tuple
    radius: float
    dim: int = -1
    axes: tuple = ()

    def __post_init__(self):
        if self.dim < 0:
            object.__setattr__(self, "dim", len(self.center))
        if not self.axes:
            object.__setattr__(self, "axes", tuple(range(len(self.center))))
        if len(self.axes) != len(self.center):
            raise ValueError("ball center must match its axes")
        if self.radius < 0:
            raise ValueError("negative radius")

    def _diff(self, X):
        return X[list(self.axes)] - np.array(self.center)[:, None]

    def values(self, X):
        d = self._diff(X)
        return (np.sum(d * d, axis=0) - self.radius ** 2)[None, :]

    def grads(self, X):
        g = np.zeros((1, self.dim, X.shape[1]))
        g[0, list(self.axes)] = 2.0 * self._diff(X)
        return g, np.zeros((1, X.shape[1]), dtype=bool)

    def project(self, X):
        d = self._diff(X)
        nrm = np.sqrt(np.sum(d * d, axis=0))
        scale = np.where(nrm > self.radius, self.radius / np.where(nrm > 0, nrm, 1.0), 1.0)
        out = X.copy()
        out[list(self.axes)] = np.array(self.center)[:, None] + d * scale
        return out

    def exprs(self):
        terms = [ex.power(ex.add(ex.var(i), ex.const(-c)), 2) for i, c in zip(self.axes, self.center)]
        return [ex.add(*terms, ex.const(-self.radius ** 2))]

    def bounds(self):
        lo, hi = np.full(self.dim, -np.inf), np.full(self.dim, np.inf)
        for i, c in zip(self.axes, self.center):
            lo[i], hi[i] = c - self.radius, c + self.radius
        return lo, hi

    def anchors(self):
        p = np.zeros(self.dim)
        p[list(self.axes)] = self.center
        out = [p]
        for i in self.axes:  # extreme points along each axis
            for sgn in (1.0, -1.0):
                q = p.copy()
                q[i] += sgn * self.radius
                out.append(q)
        return out

    def slice(self, fixed, keep):
        r2 = self.radius ** 2
        axes, center = [], []
        for i, c in zip(self.axes, self.center):
            if i in fixed:
                r2 -= (fixed[i] - c) ** 2
            else:
                axes.append(keep.index(i))
                center.append(c)
        if r2 < -EPS_MEM:
            return None
        r = math.sqrt(max(r2, 0.0))
        if not axes:
            return True
        return Ball(tuple(center), r, len(keep), tuple(axes))

    def to_dict(self):
        d = {"center": list(self.center), "radius": self.radius}
        if self.axes != tuple(range(self.dim)) or self.dim != len(self.center):
            d["axes"] = list(self.axes)
            d["dim"] = self.dim
        return {"ball": d}


@dataclass(frozen=True)
class Halfspace(Piece):
    """``normal . x <= offset``."""

    normal: tuple
    offset: float

    @property
    def dim(self) -> int:
        return len(self.normal)

    def values(self, X):
        return (np.array(self.normal) @ X - self.offset)[None, :]

    def grads(self, X):
        g = np.broadcast_to(np.array(self.normal)[None, :, None], (1, self.dim, X.shape[1])).copy()
        return g, np.zeros((1, X.shape[1]), dtype=bool)

    def project(self, X):
        a = np.array(self.normal)
        aa = a @ a
        if aa == 0:
            return X.copy()
        excess = np.maximum(a @ X - self.offset, 0.0)
        return X - a[:, None] * (excess / aa)[None, :]

    def exprs(self):
        return [ex.add(ex.dot(self.normal), ex.const(-self.offset))]

    def bounds(self):
        lo, hi = np.full(self.dim, -np.inf), np.full(self.dim, np.inf)
        nz = [i for i, a in enumerate(self.normal) if a != 0]
        if len(nz) == 1:
            i = nz[0]
            a = self.normal[i]
            if a > 0:
                hi[i] = self.offset / a
            else:
                lo[i] = self.offset / a
        return lo, hi

    def slice(self, fixed, keep):
        b = self.offset - sum(self.normal[i] * v for i, v in fixed.items())
        a = tuple(self.normal[i] for i in keep)
        if all(v == 0 for v in a):
            return True if b >= -EPS_MEM else None
        return Halfspace(a, b)

    def to_dict(self):
        return {"halfspace": {"normal": list(self.normal), "offset": self.offset}}


@dataclass(frozen=True)
class Sublevel(Piece):
    """``expr(x) <= level``; projection is a Newton foot along the gradient."""

    expr: ex.Expr
    level: float
    dim: int = -1
    is_convex: bool = False

    def __post_init__(self):
        if self.dim < 0:
            object.__setattr__(self, "dim", ex.max_var_index(self.expr) + 1)

    @cached_property
    def _fn(self):
        return ex.compile_expr(self.expr)

    def values(self, X):
        if X.shape[0] < self.dim:
            raise ex.DimensionError(f"set lives in R^{self.dim}, points have dimension {X.shape[0]}")
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            v = self._fn(X) - self.level
        if np.shape(v) != X.shape[1:]:
            v = np.broadcast_to(v, X.shape[1:])
        return np.asarray(v, dtype=float)[None, :]

    def grads(self, X):
        _, g, bad = ex.value_and_grad(self.expr, X)
        return g[None], bad[None]

    def _surface(self, X, iters: int = 60, both: bool = False):
        """Newton steps along the gradient onto ``expr = level``."""
        X = X.copy()
        for _ in range(iters):
            v, g, _ = ex.value_and_grad(self.expr, X)
            over = v - self.level
            move = (np.abs(over) > 1e-15 * (1.0 + abs(self.level))) if both else over > 0
            gg = np.sum(g * g, axis=0)
            ok = move & (gg > 0)
            if not np.any(ok):
                break
            step = np.where(ok, over / np.where(gg > 0, gg, 1.0), 0.0)
            X = X - g * step[None, :]
        return X

    def _kkt_step(self, Y, Q):
        """Newton step on ``p - y + lam grad h(p) = 0, h(p) = level``."""
        n, m = Q.shape
        _, g, _ = ex.value_and_grad(self.expr, Q)
        gg = np.sum(g * g, axis=0)
        lam = np.sum((Y - Q) * g, axis=0) / np.where(gg > 0, gg, 1.0)
        hess = np.empty((m, n, n))
        delta = 1e-6 * (1.0 + np.abs(Q))
        for j in range(n):
            E = np.zeros_like(Q)
            E[j] = delta[j]
            _, gp, _ = ex.value_and_grad(self.expr, Q + E)
            _, gm, _ = ex.value_and_grad(self.expr, Q - E)
            hess[:, :, j] = ((gp - gm) / (2 * delta[j])).T
        J = np.zeros((m, n + 1, n + 1))
        J[:, :n, :n] = np.eye(n) + lam[:, None, None] * hess
        J[:, :n, n] = g.T
        J[:, n, :n] = g.T
        v = ex.evaluate(self.expr, Q) - self.level
        rhs = np.concatenate([(Q - Y + lam * g).T, np.asarray(v)[:, None]], axis=1)
        with np.errstate(all="ignore"):
            try:
                step = np.linalg.solve(J, -rhs[..., None])[..., 0]
            except np.linalg.LinAlgError:
                return np.full_like(Q, np.nan)
        return Q + step[:, :n].T

    def foot(self, X):
        return self._surface(X)

    def project(self, X, iters: int = 100):
        """Nearest point on the level set for outside columns.

        The Newton foot is refined by Newton steps on the optimality system,
        falling back to damped steps along the level set.  A step is kept only
        if it brings ``p`` closer to ``x``.
        """
        P = self._surface(X)
        out = np.flatnonzero(self.values(X)[0] > 0)
        if out.size == 0:
            return P
        Y, Q = X[:, out], P[:, out]
        dist = np.linalg.norm(Y - Q, axis=0)
        live = np.arange(out.size)
        for _ in range(iters):
            y, q = Y[:, live], Q[:, live]
            _, g, _ = ex.value_and_grad(self.expr, q)
            gn = np.linalg.norm(g, axis=0)
            n = g / np.where(gn > 0, gn, 1.0)
            r = y - q
            t = r - n * np.sum(r * n, axis=0)
            tn = np.linalg.norm(t, axis=0)
            done = (gn == 0) | (tn <= 1e-12 * (1.0 + np.linalg.norm(y, axis=0)))
            accepted = done.copy()
            with np.errstate(all="ignore"):
                trial = self._surface(self._kkt_step(y, q), both=True)
                d = np.linalg.norm(y - trial, axis=0)
            good = ~accepted & np.all(np.isfinite(trial), axis=0) & (d <= dist[live])
            Q[:, live[good]] = trial[:, good]
            dist[live[good]] = d[good]
            accepted |= good
            a = np.ones(live.size)
            for _ in range(30):
                if accepted.all():
                    break
                trial = self._surface(q + t * a[None, :], both=True)
                d = np.linalg.norm(y - trial, axis=0)
                good = ~accepted & (d < dist[live]) & np.all(np.isfinite(trial), axis=0)
                Q[:, live[good]] = trial[:, good]
                dist[live[good]] = d[good]
                accepted |= good
                a = np.where(accepted, a, 0.5 * a)
            # no acceptable step left: stationary to working precision
            live = live[~done & accepted]
            if live.size == 0:
                break
        P[:, out] = Q
        return P

    def exprs(self):
        return [ex.add(self.expr, ex.const(-self.level))]

    @property
    def convex(self) -> bool:
        return self.is_convex

    def slice(self, fixed, keep):
        reindex = {i: k for k, i in enumerate(keep)}
        e = ex.substitute(self.expr, {i: ex.const(v) for i, v in fixed.items()}, reindex)
        if not ex.variables(e):
            return True if ex.evaluate(e, np.zeros(1)) - self.level <= EPS_MEM else None
        return Sublevel(e, self.level, len(keep), self.is_convex)

    def to_dict(self):
        d = {"expr": ex.to_sexpr(self.expr), "level": self.level, "dim": self.dim}
        if self.is_convex:
            d["convex"] = True
        return {"sublevel": d}


# ---------------------------------------------------------------------------
# sets
# ---------------------------------------------------------------------------


class ConstraintSet:
    dim: int

    def regions(self) -> tuple["Region", ...]:
        raise NotImplementedError

    def violation(self, X) -> np.ndarray | float:
        raise NotImplementedError

    def contains(self, X, tol: float = EPS_MEM):
        v = self.violation(X)
        return v <= tol

    def __contains__(self, x) -> bool:
        return bool(self.contains(x))

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def anchors(self) -> list[np.ndarray]:
        raise NotImplementedError

    def slice(self, fixed: dict[int, float]) -> "ConstraintSet":
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    @property
    def is_empty(self) -> bool:
        return not self.regions()

    @property
    def bounded(self) -> bool:
        lo, hi = self.bounds()
        return bool(np.all(np.isfinite(lo)) and np.all(np.isfinite(hi)))

    def is_boundary(self, X, tol_act: float = EPS_ACT, tol: float = EPS_MEM):
        """Member points with an active constraint that are not interior."""
        Xb, single = _as_batch(X)
        member = np.asarray(self.contains(Xb, tol))
        active = np.zeros(Xb.shape[1], dtype=bool)
        for reg in self.regions():
            if reg.n_constraints:
                vals = reg.values(Xb)
                inside = np.max(vals, axis=0) <= tol
                active |= inside & np.any(np.abs(vals) <= tol_act, axis=0)
        out = member & active
        if len(self.regions()) > 1 and np.any(out):
            idx = np.flatnonzero(out)
            out[idx] = ~self.probe_interior(Xb[:, idx])
        return out[0] if single else out

    def probe_interior(self, X, rho: float = PROBE_RADIUS) -> np.ndarray:
        """Heuristic interior test: all probe points at radius ``rho`` are members."""
        n, m = X.shape
        dirs = [np.eye(n)[i] for i in range(n)] + [-np.eye(n)[i] for i in range(n)]
        if n <= 4:
            dirs += [np.array(s) / math.sqrt(n) for s in itertools.product((-1.0, 1.0), repeat=n)]
        rng = np.random.default_rng(12345)
        for v in rng.normal(size=(8, n)):
            dirs.append(v / np.linalg.norm(v))
        inside = np.ones(m, dtype=bool)
        for d in dirs:
            inside &= np.asarray(self.contains(X + rho * d[:, None]))
            if not inside.any():
                break
        return inside


def _merge_boxes(pieces: Iterable[Piece], dim: int) -> tuple[Piece, ...]:
    boxes = [p for p in pieces if isinstance(p, Box)]
    rest = [p for p in pieces if not isinstance(p, Box)]
    if len(boxes) <= 1:
        return tuple(boxes + rest)
    lo = np.max([b.lo for b in boxes], axis=0)
    hi = np.min([b.hi for b in boxes], axis=0)
    return (Box(_tup(lo), _tup(hi)),) + tuple(rest)


@dataclass(frozen=True)
class Region(ConstraintSet):
    """Intersection of pieces; no pieces means all of R^dim."""

    dim: int
    pieces: tuple = ()

    def __post_init__(self):
        for p in self.pieces:
            if p.dim != self.dim:
                raise ValueError(f"piece of dimension {p.dim} in region of dimension {self.dim}")
        # dedup while keeping order, merge boxes
        seen = []
        for p in self.pieces:
            if p not in seen:
                seen.append(p)
        object.__setattr__(self, "pieces", _merge_boxes(seen, self.dim))

    def regions(self):
        return () if self.trivially_empty else (self,)

    @cached_property
    def trivially_empty(self) -> bool:
        return any(isinstance(p, Box) and p.empty for p in self.pieces)

    @cached_property
    def n_constraints(self) -> int:
        return sum(p.values(np.zeros((self.dim, 1))).shape[0] for p in self.pieces)

    @property
    def convex(self) -> bool:
        return all(p.convex for p in self.pieces)

    def values(self, X) -> np.ndarray:
        Xb, _ = _as_batch(X)
        if not self.pieces:
            return np.zeros((0, Xb.shape[1]))
        return np.concatenate([p.values(Xb) for p in self.pieces], axis=0)

    def grads(self, X) -> tuple[np.ndarray, np.ndarray]:
        Xb, _ = _as_batch(X)
        if not self.pieces:
            m = Xb.shape[1]
            return np.zeros((0, self.dim, m)), np.zeros((0, m), dtype=bool)
        gs, bs = zip(*(p.grads(Xb) for p in self.pieces))
        return np.concatenate(gs, axis=0), np.concatenate(bs, axis=0)

    def constraint_exprs(self) -> list[ex.Expr]:
        return [e for p in self.pieces for e in p.exprs()]

    def violation(self, X):
        Xb, single = _as_batch(X)
        if self.trivially_empty:
            v = np.full(Xb.shape[1], np.inf)
        elif not self.pieces:
            v = np.full(Xb.shape[1], -np.inf)
        else:
            vals = self.values(Xb)
            v = np.max(vals, axis=0) if vals.shape[0] else np.full(Xb.shape[1], -np.inf)
        return float(v[0]) if single else v

    def bounds(self):
        lo, hi = np.full(self.dim, -np.inf), np.full(self.dim, np.inf)
        for p in self.pieces:
            a, b = p.bounds()
            lo, hi = np.maximum(lo, a), np.minimum(hi, b)
        return lo, hi

    def anchors(self):
        out = []
        for p in self.pieces:
            out.extend(p.anchors())
        lo, hi = self.bounds()
        finite = np.isfinite(lo) & np.isfinite(hi)
        mid = np.where(finite, lo, 0.0) / 2 + np.where(finite, hi, 0.0) / 2
        out.append(np.where(finite, mid, np.clip(0.0, lo, hi)))
        return out

    def slice(self, fixed):
        keep = [i for i in range(self.dim) if i not in fixed]
        pieces = []
        for p in self.pieces:
            s = p.slice(fixed, keep)
            if s is None:
                return EMPTY(len(keep))
            if s is not True:
                pieces.append(s)
        return Region(len(keep), tuple(pieces))

    def to_dict(self):
        if len(self.pieces) == 1:
            return self.pieces[0].to_dict()
        if not self.pieces:
            return {"intersection": [], "dim": self.dim}
        return {"intersection": [p.to_dict() for p in self.pieces]}


@dataclass(frozen=True)
class Union(ConstraintSet):
    dim: int
    children: tuple = ()

    def __post_init__(self):
        flat = []
        for c in self.children:
            if c.dim != self.dim:
                raise ValueError("union children must share a dimension")
            for r in c.regions():
                if r not in flat:
                    flat.append(r)
        object.__setattr__(self, "children", tuple(flat))

    def regions(self):
        return self.children

    def violation(self, X):
        Xb, single = _as_batch(X)
        if not self.children:
            v = np.full(Xb.shape[1], np.inf)
        else:
            v = np.min([c.violation(Xb) for c in self.children], axis=0)
        return float(v[0]) if single else v

    def bounds(self):
        if not self.children:
            return np.full(self.dim, np.inf), np.full(self.dim, -np.inf)
        bs = [c.bounds() for c in self.children]
        return np.min([b[0] for b in bs], axis=0), np.max([b[1] for b in bs], axis=0)

    def anchors(self):
        return [a for c in self.children for a in c.anchors()]

    def slice(self, fixed):
        keep_dim = self.dim - len(fixed)
        return Union(keep_dim, tuple(c.slice(fixed) for c in self.children))

    def to_dict(self):
        if not self.children:
            return {"empty": self.dim}
        return {"union": [c.to_dict() for c in self.children]}


def EMPTY(dim: int) -> Union:
    return Union(dim, ())


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------


def box(lo: Sequence[float], hi: Sequence[float]) -> Region:
    b = Box(_tup(lo), _tup(hi))
    return Region(b.dim, (b,))


def ball(center: Sequence[float], radius: float, dim: int | None = None,
         axes: Sequence[int] | None = None) -> Region:
    c = _tup(center)
    d = len(c) if dim is None else dim
    b = Ball(c, float(radius), d, tuple(axes) if axes is not None else ())
    return Region(d, (b,))


def halfspace(normal: Sequence[float], offset: float) -> Region:
    h = Halfspace(_tup(normal), float(offset))
    return Region(h.dim, (h,))


def sublevel(e: ex.Expr | str, level: float = 0.0, dim: int | None = None,
             convex: bool = False) -> Region:
    if isinstance(e, str):
        e = ex.parse(e)
    d = ex.max_var_index(e) + 1 if dim is None else dim
    return Region(d, (Sublevel(e, float(level), d, convex),))


def whole_space(dim: int) -> Region:
    return Region(dim, ())


def union(*sets: ConstraintSet) -> ConstraintSet:
    if not sets:
        raise ValueError("union of nothing has no dimension; use EMPTY(dim)")
    u = Union(sets[0].dim, tuple(sets))
    return u.children[0] if len(u.children) == 1 else u


def intersection(*sets: ConstraintSet, prune: bool = True) -> ConstraintSet:
    """Intersect sets, distributing over unions and dropping empty branches."""
    if not sets:
        raise ValueError("intersection of nothing")
    dim = sets[0].dim
    branches = [s.regions() for s in sets]
    out = []
    for combo in itertools.product(*branches):
        pieces = tuple(p for r in combo for p in r.pieces)
        reg = Region(dim, pieces)
        if reg.trivially_empty:
            continue
        if prune and len(combo) > 1 and find_member(reg) is None:
            continue
        out.append(reg)
    if len(out) == 1:
        return out[0]
    return Union(dim, tuple(out))


def find_member(s: ConstraintSet, tol: float = EPS_MEM) -> np.ndarray | None:
    """A deterministic witness point of ``s``, or ``None`` if none is found."""
    from .geometry import project_batch  # local: geometry builds on this module

    for reg in s.regions():
        cands = reg.anchors() + [np.zeros(reg.dim)]
        X = np.stack(cands, axis=1)
        member = reg.contains(X, tol)
        if np.any(member):
            return X[:, int(np.argmax(member))]
        lo, hi = reg.bounds()
        lo, hi = np.where(np.isfinite(lo), lo, -10.0), np.where(np.isfinite(hi), hi, 10.0)
        rng = np.random.default_rng(0)
        X = np.hstack([X, lo[:, None] + (hi - lo)[:, None] * rng.random((reg.dim, 32))])
        P, ok = project_batch(reg, X, raise_on_fail=False)
        good = ok & reg.contains(np.nan_to_num(P), tol)
        if np.any(good):
            return P[:, int(np.argmax(good))]
    return None


def set_from_dict(d: dict, dim: int | None = None) -> ConstraintSet:
    """Inverse of ``to_dict``; infinities may be written as strings."""
    if not isinstance(d, dict) or len(d) == 0:
        raise ValueError(f"cannot read set from {d!r}")
    if "empty" in d:
        return EMPTY(int(d["empty"]))
    if "box" in d:
        b = d["box"]
        return box([float(v) for v in b["lo"]], [float(v) for v in b["hi"]])
    if "ball" in d:
        b = d["ball"]
        return ball(b["center"], float(b["radius"]), b.get("dim", dim), b.get("axes"))
    if "halfspace" in d:
        h = d["halfspace"]
        return halfspace(h["normal"], float(h["offset"]))
    if "sublevel" in d:
        s = d["sublevel"]
        return sublevel(s["expr"], float(s.get("level", 0.0)), s.get("dim", dim),
                        bool(s.get("convex", False)))
    if "intersection" in d:
        parts = [set_from_dict(c, dim) for c in d["intersection"]]
        if not parts:
            return whole_space(int(d.get("dim", dim)))
        target = max(p.dim for p in parts)
        parts = [_pad(p, target) for p in parts]
        return intersection(*parts, prune=False)
    if "union" in d:
        parts = [set_from_dict(c, dim) for c in d["union"]]
        return union(*parts)
    raise ValueError(f"unknown set kind {sorted(d)}")


def _pad(s: ConstraintSet, dim: int) -> ConstraintSet:
    """Lift sublevel sets whose expressions use fewer variables."""
    if s.dim == dim:
        return s
    regs = []
    for r in s.regions():
        pieces = []
        for p in r.pieces:
            if isinstance(p, Sublevel):
                pieces.append(Sublevel(p.expr, p.level, dim, p.is_convex))
            else:
                raise ValueError(f"set of dimension {s.dim} used in dimension {dim}")
        regs.append(Region(dim, tuple(pieces)))
    return union(*regs) if len(regs) > 1 else regs[0]
