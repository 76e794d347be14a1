"""Hybrid systems, disturbed hybrid systems and hybrid arcs."""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from . import expr as ex
from .sets import (
    EPS_ACT,
    EPS_MEM,
    Ball,
    Box,
    ConstraintSet,
    Halfspace,
    Region,
    Sublevel,
    Union,
    box,
    intersection,
    union,
)


# ---------------------------------------------------------------------------
# set-valued maps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Selection:
    """One single-valued branch of a set-valued map.

    ``guard`` restricts where the branch is available; ``None`` means
    everywhere.  Guards are tested with the activity tolerance so that points
    placed on a switching surface by event localization still qualify.
    """

    components: tuple
    guard: ConstraintSet | None = None
    label: str = ""

    def __post_init__(self):
        comps = tuple(ex.parse(c) if isinstance(c, str) else ex.as_expr(c) for c in self.components)
        object.__setattr__(self, "components", comps)

    @property
    def out_dim(self) -> int:
        return len(self.components)

    @cached_property
    def _fn(self):
        return ex.compile_vector(self.components)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        with np.errstate(all="ignore"):
            return self._fn(x)

    def available(self, X, tol: float = EPS_ACT):
        if self.guard is None:
            X = np.asarray(X)
            return True if X.ndim == 1 else np.ones(X.shape[1], dtype=bool)
        return self.guard.contains(X, tol)


@dataclass(frozen=True)
class SetValuedMap:
    """Finite family of selections.

    As a flow map the value at ``x`` is the convex hull of the available
    selections; as a jump map it is the finite set of their values.
    """

    in_dim: int
    out_dim: int
    selections: tuple

    def __post_init__(self):
        sels = tuple(s if isinstance(s, Selection) else Selection(tuple(s)) for s in self.selections)
        if not sels:
            raise ValueError("a set-valued map needs at least one selection")
        for s in sels:
            if s.out_dim != self.out_dim:
                raise ValueError(f"selection has {s.out_dim} components, expected {self.out_dim}")
            for c in s.components:
                if ex.max_var_index(c) >= self.in_dim:
                    raise ValueError(f"selection component {ex.to_sexpr(c)} exceeds input dimension {self.in_dim}")
            if s.guard is not None and s.guard.dim != self.in_dim:
                raise ValueError("guard dimension does not match the map input")
        object.__setattr__(self, "selections", sels)

    def __len__(self) -> int:
        return len(self.selections)

    def selection(self, i: int) -> Selection:
        if not 0 <= i < len(self.selections):
            raise IndexError(f"selection index {i} out of range (map has {len(self.selections)})")
        return self.selections[i]

    def available(self, x, tol: float = EPS_ACT) -> list[int]:
        return [i for i, s in enumerate(self.selections) if bool(s.available(x, tol))]

    def values(self, x, tol: float = EPS_ACT) -> list[np.ndarray]:
        return [self.selections[i](x) for i in self.available(x, tol)]

    def batch(self, X) -> tuple[np.ndarray, np.ndarray]:
        """All selections at all columns: values ``(k, out, m)`` and availability ``(k, m)``."""
        X = np.asarray(X, dtype=float)
        vals = np.stack([s(X) for s in self.selections])
        avail = np.stack([np.asarray(s.available(X)) for s in self.selections])
        return vals, avail

    def slice(self, fixed: dict[int, float]) -> "SetValuedMap":
        """Freeze input coordinates (disturbance values) and drop them."""
        keep = [i for i in range(self.in_dim) if i not in fixed]
        reindex = {i: k for k, i in enumerate(keep)}
        sub = {i: ex.const(v) for i, v in fixed.items()}
        sels = []
        for s in self.selections:
            comps = tuple(ex.substitute(c, sub, reindex) for c in s.components)
            guard = s.guard.slice(fixed) if s.guard is not None else None
            sels.append(Selection(comps, guard, s.label))
        return SetValuedMap(len(keep), self.out_dim, tuple(sels))

    def lift(self, extra: int) -> "SetValuedMap":
        """Accept ``extra`` trailing (ignored) input coordinates."""
        sels = tuple(
            Selection(s.components, lift_set(s.guard, extra) if s.guard is not None else None, s.label)
            for s in self.selections
        )
        return SetValuedMap(self.in_dim + extra, self.out_dim, sels)


def single_valued(components: Sequence, in_dim: int | None = None) -> SetValuedMap:
    comps = tuple(ex.parse(c) if isinstance(c, str) else c for c in components)
    n = in_dim if in_dim is not None else max(max(ex.max_var_index(c) for c in comps) + 1, len(comps))
    return SetValuedMap(n, len(comps), (Selection(comps),))


def lift_set(S: ConstraintSet, extra: int, lo=None, hi=None) -> ConstraintSet:
    """Embed ``S`` in a space with ``extra`` trailing coordinates bounded by ``[lo, hi]``."""
    lo = [-math.inf] * extra if lo is None else list(lo)
    hi = [math.inf] * extra if hi is None else list(hi)
    dim = S.dim + extra
    regs = []
    for r in S.regions():
        pieces = []
        for p in r.pieces:
            if isinstance(p, Box):
                pieces.append(Box(p.lo + tuple(lo), p.hi + tuple(hi)))
            elif isinstance(p, Ball):
                pieces.append(Ball(p.center, p.radius, dim, p.axes))
            elif isinstance(p, Halfspace):
                pieces.append(Halfspace(p.normal + (0.0,) * extra, p.offset))
            elif isinstance(p, Sublevel):
                pieces.append(Sublevel(p.expr, p.level, dim, p.is_convex))
            else:
                raise TypeError(f"cannot lift {type(p).__name__}")
        if not any(isinstance(p, Box) for p in pieces):
            pieces.append(Box((-math.inf,) * S.dim + tuple(lo), (math.inf,) * S.dim + tuple(hi)))
        regs.append(Region(dim, tuple(pieces)))
    if not regs:
        return Union(dim, ())
    return regs[0] if len(regs) == 1 else Union(dim, tuple(regs))


# ---------------------------------------------------------------------------
# systems
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HybridSystem:
    dim: int
    C: ConstraintSet
    F: SetValuedMap
    D: ConstraintSet
    G: SetValuedMap
    name: str = ""

    def __post_init__(self):
        for label, s in (("C", self.C), ("D", self.D)):
            if s.dim != self.dim:
                raise ValueError(f"{label} has dimension {s.dim}, system has {self.dim}")
        for label, m in (("F", self.F), ("G", self.G)):
            if m.in_dim != self.dim or m.out_dim != self.dim:
                raise ValueError(f"{label} must map R^{self.dim} to R^{self.dim}")

    @cached_property
    def C_or_D(self) -> ConstraintSet:
        return union(self.C, self.D) if not self.D.is_empty else self.C


def grid_points(W: Region, resolution: int = 9) -> np.ndarray:
    """Uniform grid on a box including its endpoints and, when inside, zero.

    Returns shape ``(d, k)``.
    """
    lo, hi = W.bounds()
    axes = []
    for a, b in zip(lo, hi):
        if not (math.isfinite(a) and math.isfinite(b)):
            raise ValueError("disturbance boxes must be bounded")
        pts = {float(a), float(b)} if a != b else {float(a)}
        if a != b:
            pts.update(np.linspace(a, b, resolution).tolist())
        if a <= 0.0 <= b:
            pts.add(0.0)
        axes.append(sorted(pts))
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh]) if axes else np.zeros((0, 1))


@dataclass(frozen=True)
class DisturbedHybridSystem:
    dim: int
    dc: int
    dd: int
    C_w: ConstraintSet
    F_w: SetValuedMap
    D_w: ConstraintSet
    G_w: SetValuedMap
    W_c: Region
    W_d: Region
    wdata: bool = True
    name: str = ""

    def __post_init__(self):
        n = self.dim
        if self.C_w.dim != n + self.dc or self.F_w.in_dim != n + self.dc or self.F_w.out_dim != n:
            raise ValueError("flow data must live on R^(n+dc) with values in R^n")
        if self.D_w.dim != n + self.dd or self.G_w.in_dim != n + self.dd or self.G_w.out_dim != n:
            raise ValueError("jump data must live on R^(n+dd) with values in R^n")
        if self.W_c.dim != self.dc or self.W_d.dim != self.dd:
            raise ValueError("disturbance boxes have the wrong dimension")

    # -- grids and slices ---------------------------------------------------
    def grid_c(self, resolution: int = 9) -> np.ndarray:
        return grid_points(self.W_c, resolution)

    def grid_d(self, resolution: int = 9) -> np.ndarray:
        return grid_points(self.W_d, resolution)

    def _fix_c(self, w) -> dict:
        return {self.dim + i: float(v) for i, v in enumerate(np.atleast_1d(w))}

    def _fix_d(self, w) -> dict:
        return {self.dim + i: float(v) for i, v in enumerate(np.atleast_1d(w))}

    def flow_slice(self, w) -> tuple[ConstraintSet, SetValuedMap]:
        fx = self._fix_c(w)
        return self.C_w.slice(fx), self.F_w.slice(fx)

    def jump_slice(self, w) -> tuple[ConstraintSet, SetValuedMap]:
        fx = self._fix_d(w)
        return self.D_w.slice(fx), self.G_w.slice(fx)

    def proj_c(self, resolution: int = 9) -> ConstraintSet:
        """``Pi_c(C_w)``: the zero slice under wdata, otherwise a union of grid slices."""
        if self.wdata and bool(self.W_c.contains(np.zeros(self.dc))):
            return self.C_w.slice(self._fix_c(np.zeros(self.dc)))
        return _union_or_empty(self.dim, [self.C_w.slice(self._fix_c(w)) for w in self.grid_c(resolution).T])

    def proj_d(self, resolution: int = 9) -> ConstraintSet:
        return _union_or_empty(self.dim, [self.D_w.slice(self._fix_d(w)) for w in self.grid_d(resolution).T])

    def psi_c(self, x, resolution: int = 9) -> np.ndarray:
        """Grid points of ``Psi_c(x)``, shape ``(dc, k)``."""
        W = self.grid_c(resolution)
        x = np.asarray(x, dtype=float)
        joint = np.vstack([np.repeat(x[:, None], W.shape[1], axis=1), W])
        return W[:, np.asarray(self.C_w.contains(joint))]

    def psi_d(self, x, resolution: int = 9) -> np.ndarray:
        W = self.grid_d(resolution)
        x = np.asarray(x, dtype=float)
        joint = np.vstack([np.repeat(x[:, None], W.shape[1], axis=1), W])
        return W[:, np.asarray(self.D_w.contains(joint))]

    def nominal_restriction(self) -> HybridSystem:
        """The system obtained by freezing both disturbances at zero."""
        C, F = self.flow_slice(np.zeros(self.dc))
        D, G = self.jump_slice(np.zeros(self.dd))
        return HybridSystem(self.dim, C, F, D, G, name=f"{self.name} (w = 0)" if self.name else "")

    def with_boxes(self, W_c: Region, W_d: Region) -> "DisturbedHybridSystem":
        """Same data with different disturbance boxes (joint sets are re-intersected)."""
        n = self.dim
        lo_c, hi_c = W_c.bounds()
        lo_d, hi_d = W_d.bounds()
        Cw = intersection(self.C_w, box([-math.inf] * n + list(lo_c), [math.inf] * n + list(hi_c)))
        Dw = intersection(self.D_w, box([-math.inf] * n + list(lo_d), [math.inf] * n + list(hi_d)))
        return DisturbedHybridSystem(n, self.dc, self.dd, Cw, self.F_w, Dw, self.G_w, W_c, W_d,
                                     self.wdata, self.name)

    @classmethod
    def from_nominal(cls, H: HybridSystem) -> "DisturbedHybridSystem":
        """Embed ``H`` with singleton zero disturbances."""
        zero = box([0.0], [0.0])
        return cls(
            H.dim, 1, 1,
            lift_set(H.C, 1, [0.0], [0.0]), H.F.lift(1),
            lift_set(H.D, 1, [0.0], [0.0]), H.G.lift(1),
            zero, zero, True, H.name,
        )


def _union_or_empty(dim: int, parts: list[ConstraintSet]) -> ConstraintSet:
    parts = [p for p in parts if not p.is_empty]
    if not parts:
        return Union(dim, ())
    return union(*parts)


# ---------------------------------------------------------------------------
# hybrid arcs
# ---------------------------------------------------------------------------


class TerminationClass(str, enum.Enum):
    COMPLETE = "Complete"
    HORIZON_REACHED = "HorizonReached"
    ENDS_FLOW_BOUNDARY = "EndsFlowBoundary"
    ENDS_FLOW_STUCK = "EndsFlowStuck"
    FINITE_ESCAPE = "FiniteEscape"
    ENDS_JUMP_OUTSIDE = "EndsJumpOutside"
    ENDS_JUMP_STUCK = "EndsJumpStuck"
    NO_NONTRIVIAL_SOLUTION = "NoNontrivialSolution"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class HybridTimeDomain:
    intervals: tuple  # (t_start, t_end, j)

    def validate(self, tol: float = 0.0) -> None:
        prev_end = None
        for k, (t0, t1, j) in enumerate(self.intervals):
            if j != k:
                raise ValueError(f"interval {k} carries jump index {j}")
            if t1 < t0:
                raise ValueError(f"interval {k} runs backwards")
            if prev_end is not None and abs(t0 - prev_end) > tol:
                raise ValueError(f"interval {k} starts at {t0}, previous ended at {prev_end}")
            prev_end = t1

    @property
    def T(self) -> float:
        return self.intervals[-1][1] if self.intervals else 0.0

    @property
    def J(self) -> int:
        return self.intervals[-1][2] if self.intervals else 0

    def __contains__(self, tj) -> bool:
        t, j = tj
        return any(jj == j and t0 <= t <= t1 for t0, t1, jj in self.intervals)


@dataclass
class JumpRecord:
    t: float
    j: int
    x_before: np.ndarray
    x_after: np.ndarray
    selection: int
    w_d: np.ndarray | None = None


@dataclass
class HybridArc:
    dim: int
    times: list = field(default_factory=list)  # per interval (m,)
    states: list = field(default_factory=list)  # per interval (m, n)
    jumps: list = field(default_factory=list)
    w_trace: list | None = None  # per interval (m, dc)
    termination: TerminationClass | None = None
    annotations: dict = field(default_factory=dict)
    clamp_log: list = field(default_factory=list)

    @property
    def domain(self) -> HybridTimeDomain:
        return HybridTimeDomain(tuple((float(t[0]), float(t[-1]), j) for j, t in enumerate(self.times)))

    @property
    def T(self) -> float:
        return float(self.times[-1][-1]) if self.times else 0.0

    @property
    def J(self) -> int:
        return len(self.times) - 1

    @property
    def x_final(self) -> np.ndarray:
        return self.states[-1][-1]

    @property
    def x_initial(self) -> np.ndarray:
        return self.states[0][0]

    def all_states(self) -> np.ndarray:
        return np.vstack(self.states) if self.states else np.zeros((0, self.dim))

    def flow_states(self) -> np.ndarray:
        """Samples from intervals of positive length (the flowing part)."""
        parts = [x for t, x in zip(self.times, self.states) if t[-1] > t[0]]
        return np.vstack(parts) if parts else np.zeros((0, self.dim))

    def table(self) -> tuple[list[str], list[list]]:
        """Rows ``(t, j, x..., w_c..., flag)``."""
        dc = self.w_trace[0].shape[1] if self.w_trace else 0
        header = ["t", "j"] + [f"x_{i + 1}" for i in range(self.dim)] + [f"w_c_{i + 1}" for i in range(dc)] + ["flag"]
        rows = []
        last = len(self.times) - 1
        for j, (t, x) in enumerate(zip(self.times, self.states)):
            for k in range(len(t)):
                if k == len(t) - 1:
                    flag = "jump" if j < last else "end"
                else:
                    flag = "flow"
                row = [t[k], j] + list(x[k])
                if dc:
                    row += list(self.w_trace[j][k])
                rows.append(row + [flag])
        return header, rows

    def to_csv(self) -> str:
        header, rows = self.table()
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "dim": self.dim,
            "termination": str(self.termination) if self.termination else None,
            "T": self.T,
            "J": self.J,
            "intervals": [list(iv) for iv in self.domain.intervals],
            "jumps": [
                {
                    "t": jr.t,
                    "j": jr.j,
                    "x_before": jr.x_before.tolist(),
                    "x_after": jr.x_after.tolist(),
                    "selection": jr.selection,
                    "w_d": None if jr.w_d is None else np.atleast_1d(jr.w_d).tolist(),
                }
                for jr in self.jumps
            ],
            "annotations": self.annotations,
            "clamps": self.clamp_log,
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True, default=_json_default)


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"not serializable: {type(o).__name__}")
