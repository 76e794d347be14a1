"""Simulation of hybrid inclusions with event localization.

One arc is computed per (selection policy, priority policy); the integrator is
classical RK4 with a state-dependent step, bisection-based event location on
the constraint that triggered the event, and a termination classification that
follows the ending cases of maximal solutions (flow to the boundary, stuck
flow, finite escape, jump outside, stuck after jump).
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .geometry import tangent_cone_batch
from .sets import EPS_ACT, EPS_MEM, ConstraintSet, Region
from .systems import (
    DisturbedHybridSystem,
    HybridArc,
    HybridSystem,
    JumpRecord,
    SetValuedMap,
    TerminationClass,
)

log = logging.getLogger(__name__)


class NoNontrivialSolutionError(ValueError):
    """The initial condition lies outside the closure of C union D."""


class DisturbanceError(ValueError):
    def __init__(self, message: str, state: np.ndarray):
        super().__init__(f"{message} at x = {np.asarray(state).tolist()}")
        self.state = np.asarray(state)


class Priority(str, enum.Enum):
    JUMP_FIRST = "jump_first"
    FLOW_FIRST = "flow_first"


@dataclass(frozen=True)
class Strategy:
    """Custom priority: ``decide(t, j, x) -> True`` to jump when both are possible."""

    decide: Callable
    name: str = "strategy"


@dataclass(frozen=True)
class SolverConfig:
    dt_max: float = 1e-3
    event_tol: float = 1e-9
    horizon: tuple = (10.0, 200)
    priority: Priority | Strategy | str = Priority.JUMP_FIRST
    flow_selection: int | tuple = 0
    jump_selection: int | str = "first"
    seed: int = 0
    escape_threshold: float = 1e9
    zeno_count: int = 50
    eta: float = 0.05  # max relative state change per step
    min_step: float = 1e-12
    eps_mem: float = EPS_MEM
    eps_act: float = EPS_ACT

    def __post_init__(self):
        if self.dt_max <= 0:
            raise ValueError("dt_max must be positive")
        T, J = self.horizon
        if not (math.isfinite(T) and T >= 0 and J >= 0):
            raise ValueError("horizon must be finite and non-negative")
        if isinstance(self.priority, str) and not isinstance(self.priority, Priority):
            object.__setattr__(self, "priority", Priority(self.priority))
        if isinstance(self.jump_selection, str) and self.jump_selection not in ("first", "random", "last"):
            raise ValueError(f"unknown jump selection policy {self.jump_selection!r}")


# ---------------------------------------------------------------------------
# disturbance policies
# ---------------------------------------------------------------------------


class Channel:
    """Produces the requested disturbance value for one channel."""

    def request(self, t: float, j: int, x: np.ndarray, dim: int) -> np.ndarray | None:
        raise NotImplementedError

    def breakpoints(self) -> list[float]:
        return []


@dataclass(frozen=True)
class Zero(Channel):
    def request(self, t, j, x, dim):
        return np.zeros(dim)


@dataclass(frozen=True)
class Constant(Channel):
    value: tuple

    def request(self, t, j, x, dim):
        return np.resize(np.asarray(self.value, dtype=float), dim)


@dataclass(frozen=True)
class PiecewiseConstant(Channel):
    """``schedule`` is a list of ``(start, value)``; flow channels key on ``t``,
    jump channels on ``j``."""

    schedule: tuple
    key: str = "t"

    def request(self, t, j, x, dim):
        s = t if self.key == "t" else j
        value = self.schedule[0][1]
        for start, v in self.schedule:
            if s >= start:
                value = v
        return np.resize(np.asarray(value, dtype=float), dim)

    def breakpoints(self):
        return [float(s) for s, _ in self.schedule] if self.key == "t" else []


@dataclass(frozen=True)
class GridWorstCase(Channel):
    """Pick the admissible grid value pushing hardest out of ``target``."""

    resolution: int = 9
    target: ConstraintSet | None = None
    period: float = 0.01

    def request(self, t, j, x, dim):
        return None  # resolved by the simulator, which knows the dynamics


@dataclass(frozen=True)
class DisturbancePolicy:
    c: Channel = field(default_factory=Zero)
    d: Channel = field(default_factory=Zero)
    resolution: int = 9

    @classmethod
    def zero(cls):
        return cls()

    @classmethod
    def constant(cls, w_c, w_d):
        return cls(Constant(tuple(np.atleast_1d(w_c))), Constant(tuple(np.atleast_1d(w_d))))


# ---------------------------------------------------------------------------
# dynamics providers
# ---------------------------------------------------------------------------


@dataclass
class _FlowData:
    C: ConstraintSet
    F: SetValuedMap
    w: np.ndarray | None = None


@dataclass
class _JumpData:
    D: ConstraintSet
    G: SetValuedMap
    w: np.ndarray | None = None


class _Nominal:
    def __init__(self, H: HybridSystem):
        self.H = H
        self.dim = H.dim
        self.dc = 0

    def in_domain(self, x, tol):
        return bool(self.H.C.contains(x, tol)) or bool(self.H.D.contains(x, tol))

    def flow_data(self, t, j, x, arc) -> list[_FlowData]:
        return [_FlowData(self.H.C, self.H.F)] if self.H.C.contains(x, EPS_ACT) else []

    def jump_data(self, t, j, x, arc) -> list[_JumpData]:
        return [_JumpData(self.H.D, self.H.G)] if self.H.D.contains(x, EPS_MEM) else []

    def resample_times(self):
        return []


class _Disturbed:
    def __init__(self, Hw: DisturbedHybridSystem, policy: DisturbancePolicy):
        self.Hw = Hw
        self.policy = policy
        self.dim = Hw.dim
        self.dc = Hw.dc
        self._flow_cache: dict = {}
        self._jump_cache: dict = {}
        self._proj_c = None
        self._proj_d = None

    def _flow_slice(self, w):
        key = tuple(np.round(w, 15))
        if key not in self._flow_cache:
            self._flow_cache[key] = self.Hw.flow_slice(w)
        return self._flow_cache[key]

    def _jump_slice(self, w):
        key = tuple(np.round(w, 15))
        if key not in self._jump_cache:
            self._jump_cache[key] = self.Hw.jump_slice(w)
        return self._jump_cache[key]

    def in_domain(self, x, tol):
        if self._proj_c is None:
            self._proj_c = self.Hw.proj_c(self.policy.resolution)
            self._proj_d = self.Hw.proj_d(self.policy.resolution)
        return bool(self._proj_c.contains(x, tol)) or bool(self._proj_d.contains(x, tol))

    def _admissible(self, x, grid, joint: ConstraintSet, tol):
        X = np.vstack([np.repeat(x[:, None], grid.shape[1], axis=1), grid])
        return grid[:, np.asarray(joint.contains(X, tol))]

    def _clamp(self, requested, x, grid, joint, channel, t, j, arc, tol):
        joint_pt = np.concatenate([x, requested])
        if bool(joint.contains(joint_pt, tol)):
            return requested
        adm = self._admissible(x, grid, joint, tol)
        if adm.shape[1] == 0:
            return None
        k = int(np.argmin(np.linalg.norm(adm - requested[:, None], axis=0)))
        used = adm[:, k]
        arc.clamp_log.append({"t": t, "j": j, "channel": channel,
                              "requested": requested.tolist(), "used": used.tolist()})
        return used

    def flow_data(self, t, j, x, arc) -> list[_FlowData]:
        Hw = self.Hw
        ch = self.policy.c
        grid = Hw.grid_c(getattr(ch, "resolution", self.policy.resolution))
        if isinstance(ch, GridWorstCase):
            adm = self._admissible(x, grid, Hw.C_w, EPS_ACT)
            if adm.shape[1] == 0:
                return []
            scores = []
            for w in adm.T:
                C, F = self._flow_slice(w)
                f = F.selections[0](x)
                h = 1e-3 * (1.0 + np.linalg.norm(x)) / (np.linalg.norm(f) + 1e-12)
                tgt = ch.target if ch.target is not None else C
                scores.append(float(tgt.violation(x + h * f)))
            order = np.argsort(-np.asarray(scores), kind="stable")
            return [_FlowData(*self._flow_slice(adm[:, k]), adm[:, k]) for k in order]
        req = ch.request(t, j, x, Hw.dc)
        used = self._clamp(req, x, grid, Hw.C_w, "c", t, j, arc, EPS_ACT)
        if used is None:
            return []
        return [_FlowData(*self._flow_slice(used), used)]

    def jump_data(self, t, j, x, arc) -> list[_JumpData]:
        Hw = self.Hw
        ch = self.policy.d
        grid = Hw.grid_d(getattr(ch, "resolution", self.policy.resolution))
        if isinstance(ch, GridWorstCase):
            adm = self._admissible(x, grid, Hw.D_w, EPS_MEM)
            out = []
            for w in adm.T:
                D, G = self._jump_slice(w)
                out.append(_JumpData(D, G, w))
            return out
        adm = self._admissible(x, grid, Hw.D_w, EPS_MEM)
        if adm.shape[1] == 0:
            return []
        req = ch.request(t, j, x, Hw.dd)
        used = self._clamp(req, x, grid, Hw.D_w, "d", t, j, arc, EPS_MEM)
        if used is None:
            raise DisturbanceError("no admissible jump disturbance", x)
        return [_JumpData(*self._jump_slice(used), used)]

    def resample_times(self):
        times = list(self.policy.c.breakpoints())
        return sorted(times)


# ---------------------------------------------------------------------------
# integration helpers
# ---------------------------------------------------------------------------


def _rk4(f, x, h):
    k1 = f(x)
    k2 = f(x + 0.5 * h * k1)
    k3 = f(x + 0.5 * h * k2)
    k4 = f(x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _bisect(g, lo, hi, tol, max_iter=200, width=0.0):
    """Largest ``s`` in ``[lo, hi]`` found with ``g(s) <= tol``; ``g(lo) <= tol < g(hi)``."""
    glo = g(lo)
    for _ in range(max_iter):
        # violations vanish inside, so only the bracket width can stop the search
        if hi - lo <= max(width, 1e-15 * max(1.0, hi)):
            break
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if gm > tol:
            hi = mid
        else:
            lo, glo = mid, gm
    return lo, glo


def _flow_field(fd: _FlowData, cfg: SolverConfig, x, arc) -> Callable | None:
    F = fd.F
    sel = cfg.flow_selection
    if isinstance(sel, (tuple, list)):
        weights = np.asarray(sel, dtype=float)
        if weights.size != len(F.selections):
            raise IndexError(f"{weights.size} flow weights for {len(F.selections)} selections")
        sels = list(F.selections)
        return lambda z: sum(w * s(z) for w, s in zip(weights, sels) if w != 0.0)
    F.selection(int(sel))  # range check
    avail = F.available(x)
    if not avail:
        return None
    idx = int(sel) if int(sel) in avail else avail[0]
    if idx != int(sel):
        arc.annotations.setdefault("flow_selection_fallbacks", 0)
        arc.annotations["flow_selection_fallbacks"] += 1
    return F.selections[idx]


def _can_flow(fd: _FlowData, f, x, cfg) -> bool:
    if not bool(fd.C.contains(x, cfg.eps_act)):
        return False
    v = f(x)
    if not np.all(np.isfinite(v)):
        return False
    base = x
    if not bool(fd.C.contains(x, cfg.eps_mem)):
        from .geometry import project_onto_set

        base = project_onto_set(fd.C, x)
    st, _ = tangent_cone_batch(fd.C, base[:, None], v[:, None], cfg.eps_mem, cfg.eps_act)
    return int(st[0]) in (0, 1)


def _flow_choice(prov, t, j, x, cfg, arc):
    for fd in prov.flow_data(t, j, x, arc):
        f = _flow_field(fd, cfg, x, arc)
        if f is not None and _can_flow(fd, f, x, cfg):
            return fd, f
        # try other selections before giving up on this disturbance value
        if not isinstance(cfg.flow_selection, (tuple, list)):
            for i in fd.F.available(x):
                g = fd.F.selections[i]
                if _can_flow(fd, g, x, cfg):
                    arc.annotations.setdefault("flow_selection_fallbacks", 0)
                    arc.annotations["flow_selection_fallbacks"] += 1
                    return fd, g
    return None


def _jump_choice(prov, t, j, x, cfg, rng, arc, worst_target=None):
    options = []
    for jd in prov.jump_data(t, j, x, arc):
        if not bool(jd.D.contains(x, cfg.eps_mem)):
            continue
        avail = jd.G.available(x)
        if avail:
            options.append((jd, avail))
    if not options:
        return None
    if worst_target is not None:
        best = None
        for jd, avail in options:
            for i in avail:
                val = jd.G.selections[i](x)
                score = float(worst_target.violation(val))
                if best is None or score > best[0]:
                    best = (score, jd, i)
        return best[1], best[2]
    jd, avail = options[0]
    pol = cfg.jump_selection
    if isinstance(pol, int):
        jd.G.selection(pol)  # range check
        if pol in avail:
            return jd, pol
        arc.annotations.setdefault("jump_selection_fallbacks", 0)
        arc.annotations["jump_selection_fallbacks"] += 1
        return jd, avail[0]
    if pol == "random":
        return jd, avail[int(rng.integers(len(avail)))]
    if pol == "last":
        return jd, avail[-1]
    return jd, avail[0]


def _wants_jump(cfg, t, j, x, can_flow):
    if not can_flow:
        return True
    pr = cfg.priority
    if isinstance(pr, Strategy):
        return bool(pr.decide(t, j, x))
    return pr is Priority.JUMP_FIRST


# ---------------------------------------------------------------------------
# main loop
# ---------------------------------------------------------------------------


def _run(prov, x0, cfg: SolverConfig, system) -> HybridArc:
    x = np.asarray(x0, dtype=float).copy()
    if x.shape != (prov.dim,):
        raise ValueError(f"initial condition must have {prov.dim} entries")
    if not prov.in_domain(x, cfg.eps_mem):
        raise NoNontrivialSolutionError(f"x0 = {x.tolist()} lies outside the closure of C union D")
    T_max, J_max = float(cfg.horizon[0]), int(cfg.horizon[1])
    rng = np.random.default_rng(cfg.seed)
    disturbed = prov.dc > 0
    arc = HybridArc(dim=prov.dim, w_trace=[] if disturbed else None)
    arc.annotations["horizon"] = [T_max, J_max]
    last_w = np.zeros(prov.dc) if disturbed else None
    t, j = 0.0, 0
    times, states = [t], [x.copy()]
    wtr = [last_w.copy()] if disturbed else None
    zero_jumps = 0
    stall = 0
    breakpoints = prov.resample_times()
    worst_c = disturbed and isinstance(prov.policy.c, GridWorstCase)
    worst_d = prov.policy.d if disturbed and isinstance(prov.policy.d, GridWorstCase) else None
    end = None

    def close_interval():
        arc.times.append(np.asarray(times, dtype=float))
        arc.states.append(np.asarray(states, dtype=float))
        if disturbed:
            arc.w_trace.append(np.asarray(wtr, dtype=float).reshape(len(times), prov.dc))

    while True:
        if T_max - t <= cfg.min_step or j >= J_max:
            end = TerminationClass.HORIZON_REACHED
            break
        jump = _jump_choice(prov, t, j, x, cfg, rng, arc, worst_d.target if worst_d else None)
        # JumpFirst ignores the flow option whenever a jump is possible
        eager = jump is not None and cfg.priority is Priority.JUMP_FIRST
        choice = None if eager else _flow_choice(prov, t, j, x, cfg, arc)
        if jump is not None and (eager or _wants_jump(cfg, t, j, x, choice is not None)):
            jd, idx = jump
            x_new = np.asarray(jd.G.selections[idx](x), dtype=float)
            flowed = times[-1] > times[0]
            close_interval()
            arc.jumps.append(JumpRecord(t, j, x.copy(), x_new.copy(), idx,
                                        None if jd.w is None else np.asarray(jd.w).copy()))
            zero_jumps = 0 if flowed else zero_jumps + 1
            if zero_jumps >= cfg.zeno_count:
                arc.annotations["eventually_discrete"] = True
            j += 1
            x = x_new
            times, states = [t], [x.copy()]
            wtr = [last_w.copy()] if disturbed else None
            if not np.all(np.isfinite(x)) or not prov.in_domain(x, cfg.eps_mem):
                end = TerminationClass.ENDS_JUMP_OUTSIDE
                break
            continue
        if choice is None:
            break
        fd, f = choice
        if disturbed:
            last_w = np.asarray(fd.w, dtype=float).copy()
            wtr[-1] = last_w.copy()
        kind, progressed = _flow_segment(prov, fd, f, cfg, t, j, x, times, states, wtr, last_w,
                                         T_max, breakpoints, worst_c, arc)
        t, x = times[-1], states[-1]
        if kind == "escape":
            end = TerminationClass.FINITE_ESCAPE
            break
        if kind == "horizon":
            end = TerminationClass.HORIZON_REACHED
            break
        stall = 0 if progressed else stall + 1
        if stall >= 3:
            # the cone test admits flow but every step leaves C at once
            arc.annotations["numerically_stuck"] = True
            end = TerminationClass.ENDS_FLOW_STUCK
            break
    close_interval()
    if end is TerminationClass.HORIZON_REACHED:
        arc.annotations["complete_consistent"] = True
    arc.termination = end if end is not None else classify_termination(arc, system, cfg)
    if arc.termination is TerminationClass.HORIZON_REACHED:
        arc.annotations["complete_consistent"] = True
    return arc


def _flow_segment(prov, fd, f, cfg, t, j, x, times, states, wtr, w, T_max, breakpoints,
                  worst_c, arc):
    """Integrate until an event; appends samples in place."""
    C = fd.C
    viol_of = _MemberTest(C, cfg.eps_mem)
    t0 = t
    next_resample = math.inf
    later = [b for b in breakpoints if b > t + 1e-15]
    if later:
        next_resample = later[0]
    if worst_c:
        next_resample = min(next_resample, t + prov.policy.c.period)
    check_d = not isinstance(cfg.priority, Priority) or cfg.priority is Priority.JUMP_FIRST
    dsets = _candidate_jump_sets(prov) if check_d else []
    in_d_start = any(bool(D.contains(x, cfg.eps_mem)) for D in dsets)
    dregs = [reg for D in dsets for reg in D.regions()]
    dvals = _region_values(dregs, x)

    def record(tn, xn):
        times.append(tn)
        states.append(xn.copy())
        if wtr is not None:
            wtr.append(np.asarray(w, dtype=float).copy())

    while True:
        # remainders below min_step come from accumulated rounding
        if T_max - t <= cfg.min_step:
            return "horizon", t > t0
        if next_resample - t <= cfg.min_step:
            return "resample", True
        with np.errstate(all="ignore"):
            fx = f(x)
        if not np.all(np.isfinite(fx)):
            return "escape", t > t0
        speed = float(np.linalg.norm(fx))
        if speed == 0.0:
            record(T_max if next_resample == math.inf else min(T_max, next_resample), x)
            t = times[-1]
            continue
        dt = min(cfg.dt_max, T_max - t, next_resample - t,
                 cfg.eta * (1.0 + float(np.linalg.norm(x))) / speed)
        if dt < cfg.min_step:
            return "escape", t > t0
        with np.errstate(all="ignore"):
            xn = _rk4(f, x, dt)
        if not np.all(np.isfinite(xn)) or np.linalg.norm(xn) > cfg.escape_threshold:
            return "escape", t > t0
        viol = viol_of(xn)
        if viol > cfg.eps_mem:
            if viol <= cfg.eps_act:
                from .geometry import project_onto_set

                try:
                    xn = project_onto_set(C, xn)
                    viol = float(C.violation(xn))
                except ArithmeticError:
                    pass
            if viol > cfg.eps_mem:
                h = _crossing_value(viol_of.regs[viol_of.last], x, xn, cfg.event_tol) if viol_of.regs else None
                s = _exit_time(h, f, x, dt, cfg.event_tol, viol_of, width=cfg.event_tol / speed)
                if s > 0:
                    xe = _rk4(f, x, s)
                    t = t + s
                    record(t, xe)
                    x = xe
                return "exit", t > t0
        # entry into the jump set
        if dregs:
            dvals_next = _region_values(dregs, xn)
        if dregs and not in_d_start:
            hit = _first_d_entry(dregs, dvals, dvals_next, f, x, dt, cfg)
            if hit is not None:
                s, xe = hit
                if s > 0:
                    t = t + s
                    record(t, xe)
                    x = xe
                    return "enter_d", True
        in_d_start = False
        t = t + dt
        x = xn
        if dregs:
            dvals = dvals_next
        record(t, x)


def _candidate_jump_sets(prov):
    if isinstance(prov, _Nominal):
        return [prov.H.D] if not prov.H.D.is_empty else []
    if prov._proj_d is None:
        prov.in_domain(np.zeros(prov.dim), EPS_MEM)
    return [prov._proj_d] if not prov._proj_d.is_empty else []


def _crossing_value(reg, x, xn, tol):
    """Signed value of the constraints of ``reg`` that the step ``x -> xn`` breaks.

    Rows that stay active throughout (equalities written as two inequalities)
    are left out, so the value changes sign exactly at the crossing.
    """
    v1 = reg.values(xn[:, None])[:, 0]
    rows = np.flatnonzero(v1 > tol)
    if rows.size == 0:
        return None
    return lambda z: float(np.max(reg.values(z[:, None])[rows, 0]))


def _exit_time(h, f, x, dt, tol, viol_of, width=0.0, max_iter=100):
    """Step length in ``[0, dt]`` at which the state reaches the boundary.

    Illinois regula falsi on the signed constraint value ``h`` aimed at
    ``h = tol / 2``, so the returned point lies in the set up to ``tol``.
    Falls back to bisection on the violation when ``h`` has no clean sign change.
    """
    g = (lambda s: h(_rk4(f, x, s)) - 0.5 * tol) if h is not None else None
    if g is not None:
        glo, ghi = g(0.0), g(dt)
    if g is None or not (glo <= 0.0 < ghi):
        s, _ = _bisect(lambda s: viol_of(_rk4(f, x, s)), 0.0, dt, tol, width=width)
        return s
    lo, hi = 0.0, dt
    wlo, whi = glo, ghi  # Illinois-weighted copies used for the secant only
    side = 0
    for _ in range(max_iter):
        if hi - lo <= max(width, 1e-15 * max(1.0, hi)):
            break
        m = hi - whi * (hi - lo) / (whi - wlo)
        if not (lo < m < hi):
            m = 0.5 * (lo + hi)
        gm = g(m)
        if abs(gm) <= 0.5 * tol:
            return m
        if gm > 0.0:
            hi, whi = m, gm
            if side == 1:
                wlo *= 0.5
            side = 1
        else:
            lo, wlo = m, gm
            if side == -1:
                whi *= 0.5
            side = -1
    return lo


class _MemberTest:
    """Violation of a union, trying the region that last contained the state first.

    Exact whenever the result exceeds ``tol``; below it only membership matters.
    """

    def __init__(self, S, tol):
        self.regs = S.regions()
        self.tol = tol
        self.last = 0

    def __call__(self, x) -> float:
        if not self.regs:
            return math.inf
        X = x[:, None]
        v = float(self.regs[self.last].violation(X)[0])
        if v <= self.tol:
            return v
        best = v
        for i, reg in enumerate(self.regs):
            if i == self.last:
                continue
            vi = float(reg.violation(X)[0])
            if vi < best:
                best = vi
                if vi <= self.tol:
                    self.last = i
                    break
        return best


def _region_values(regs, x):
    return [reg.values(x[:, None])[:, 0] for reg in regs]


def _first_d_entry(regs, v0s, v1s, f, x, dt, cfg):
    """Detect a constraint sign change into a jump set within one step."""
    best = None
    for reg, v0, v1 in zip(regs, v0s, v1s):
        for k in np.flatnonzero((v0 > cfg.event_tol) & (v1 <= cfg.event_tol)):
            def g(s, k=k, reg=reg):
                return float(reg.values(_rk4(f, x, s)[:, None])[k, 0])
            s, _ = _bisect_down(g, 0.0, dt, cfg.event_tol)
            xe = _rk4(f, x, s)
            if bool(reg.contains(xe, cfg.eps_mem)) and (best is None or s < best[0]):
                best = (s, xe)
    return best


def _bisect_down(g, lo, hi, tol, max_iter=200):
    """Smallest ``s`` with ``g(s) <= tol`` given ``g(lo) > tol >= g(hi)``."""
    ghi = g(hi)
    for _ in range(max_iter):
        if abs(ghi) <= tol or hi - lo <= 1e-15 * max(1.0, hi):
            break
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if gm > tol:
            lo = mid
        else:
            hi, ghi = mid, gm
    return hi, ghi


# ---------------------------------------------------------------------------
# public API
# ---------------------------------------------------------------------------


def simulate(H: HybridSystem, x0: Sequence[float], cfg: SolverConfig | None = None) -> HybridArc:
    """One solution of ``H`` from ``x0``."""
    cfg = cfg or SolverConfig()
    return _run(_Nominal(H), x0, cfg, H)


def simulate_disturbed(Hw: DisturbedHybridSystem, x0: Sequence[float],
                       policy: DisturbancePolicy | None = None,
                       cfg: SolverConfig | None = None) -> HybridArc:
    """One solution pair of ``Hw`` from ``x0`` under a disturbance policy."""
    cfg = cfg or SolverConfig()
    policy = policy or DisturbancePolicy()
    return _run(_Disturbed(Hw, policy), x0, cfg, Hw)


def _flow_possible(system, x, cfg) -> bool:
    if isinstance(system, DisturbedHybridSystem):
        prov = _Disturbed(system, DisturbancePolicy(GridWorstCase(), Zero()))
        grid = system.grid_c()
        for w in prov._admissible(x, grid, system.C_w, cfg.eps_act).T:
            C, F = system.flow_slice(w)
            for s in F.selections:
                if bool(s.available(x)) and _can_flow(_FlowData(C, F, w), s, x, cfg):
                    return True
        return False
    for s in system.F.selections:
        if bool(s.available(x)) and _can_flow(_FlowData(system.C, system.F), s, x, cfg):
            return True
    return False


def _sets(system):
    if isinstance(system, DisturbedHybridSystem):
        return system.proj_c(), system.proj_d()
    return system.C, system.D


def classify_termination(arc: HybridArc, system, cfg: SolverConfig | None = None) -> TerminationClass:
    """Re-derive the ending case of an arc from its final state."""
    cfg = cfg or SolverConfig()
    T_max, J_max = arc.annotations.get("horizon", cfg.horizon)
    if arc.termination is TerminationClass.FINITE_ESCAPE:
        return TerminationClass.FINITE_ESCAPE
    if arc.T >= T_max - 1e-12 or arc.J >= J_max:
        return TerminationClass.HORIZON_REACHED
    x = arc.x_final
    if not np.all(np.isfinite(x)) or np.linalg.norm(x) > cfg.escape_threshold:
        return TerminationClass.FINITE_ESCAPE
    C, D = _sets(system)
    in_c = bool(C.contains(x, cfg.eps_mem))
    in_d = bool(D.contains(x, cfg.eps_mem))
    ended_by_jump = arc.J > 0 and arc.times[-1][-1] == arc.times[-1][0]
    if ended_by_jump:
        if not (in_c or in_d):
            return TerminationClass.ENDS_JUMP_OUTSIDE
        if not in_d and not _flow_possible(system, x, cfg):
            return TerminationClass.ENDS_JUMP_STUCK
        return TerminationClass.HORIZON_REACHED
    flowed = arc.times[-1][-1] > arc.times[-1][0]
    if not (in_c or in_d):
        return TerminationClass.ENDS_FLOW_BOUNDARY
    if not in_d and not _flow_possible(system, x, cfg):
        if not flowed and arc.J == 0:
            return TerminationClass.NO_NONTRIVIAL_SOLUTION
        return TerminationClass.ENDS_FLOW_STUCK
    return TerminationClass.HORIZON_REACHED
