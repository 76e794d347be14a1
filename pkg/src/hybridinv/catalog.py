"""Worked systems as executable scenarios with their expected verdicts."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import expr as ex
from .checker.config import LyapunovSpec
from .sets import EMPTY, ball, box, halfspace, intersection, sublevel, union
from .systems import (DisturbedHybridSystem, HybridSystem, Selection, SetValuedMap,
                      single_valued)

INF = math.inf
x0_, x1_, x2_ = ex.var(0), ex.var(1), ex.var(2)


@dataclass(frozen=True)
class ExpectedCheck:
    """Verdicts a check should reproduce; ``"overall"`` names the report's overall verdict."""

    theorem: str  # data | wfi | fi | completeness | rwfi | rfi | ly
    set_name: str | None
    verdicts: dict
    mode: str = "standard"
    variant: str = "main"
    source: str = "stated"  # stated: published value; derived: computed and frozen


@dataclass(frozen=True)
class CatalogEntry:
    id: str
    system: HybridSystem | DisturbedHybridSystem
    candidate_sets: dict
    provenance: str
    expected: tuple = ()
    lyapunov: LyapunovSpec | None = None
    window: tuple | None = None
    variants: dict = field(default_factory=dict)
    solver: dict = field(default_factory=dict)
    x0: tuple | None = None
    params: dict = field(default_factory=dict)
    description: str = ""

    @property
    def disturbed(self) -> bool:
        return isinstance(self.system, DisturbedHybridSystem)

    def variant(self, name: str = "main"):
        if name == "main":
            return self.system
        try:
            return self.variants[name]
        except KeyError:
            raise KeyError(f"entry {self.id} has no variant {name!r} (have {['main', *self.variants]})") from None


class UnknownExampleError(KeyError):
    def __init__(self, name: str, known):
        self.name = name
        self.known = tuple(known)
        super().__init__(f"unknown example {name!r}; available: {', '.join(self.known)}")

    def __str__(self) -> str:
        return self.args[0]


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _quadrant(sx: int, sy: int, radius: float | None = 1.0, extra: int = 0):
    """Closed quadrant with signs ``(sx, sy)``, optionally cut by a disk."""
    lo = [0.0 if sx > 0 else -INF, 0.0 if sy > 0 else -INF]
    hi = [INF if sx > 0 else 0.0, INF if sy > 0 else 0.0]
    Q = box(lo + [-INF] * extra, hi + [INF] * extra)
    if radius is None:
        return Q
    return intersection(Q, ball([0.0, 0.0], radius, 2 + extra, (0, 1)), prune=False)


# ---------------------------------------------------------------------------
# entries
# ---------------------------------------------------------------------------


def _finite_escape() -> CatalogEntry:
    C = box([0.0, -1.0], [INF, 1.0])
    D = box([0.0, 0.0], [INF, 0.0])
    F = single_valued([1 + x0_ ** 2, ex.const(0.0)], 2)
    shifts = (-1.0, -0.5, 0.0, 0.5, 1.0)
    G = SetValuedMap(2, 2, tuple(Selection((x0_ + s, x1_), label=f"x1{s:+g}") for s in shifts))
    G_pos = SetValuedMap(2, 2, tuple(Selection((ex.maximum(x0_ + s, ex.const(0.0)), x1_), label=f"max(x1{s:+g},0)")
                                     for s in shifts))
    H = HybridSystem(2, C, F, D, G, "finite escape")
    H_pos = HybridSystem(2, C, F, D, G_pos, "finite escape, restricted jumps")
    return CatalogEntry(
        "ex_finite_escape", H, {"K": C},
        "Example 'solutions with finite escape time'",
        expected=(
            ExpectedCheck("data", "K", {"overall": "SampledPass"}),
            ExpectedCheck("wfi", "K", {"wfi.1": "SampledPass", "wfi.2": "SampledPass", "Nstar": "Violated"}),
            ExpectedCheck("fi", "K", {"fi.1": "SampledPass", "fi.2": "SampledPass"}, variant="restricted"),
            ExpectedCheck("fi", "K", {"fi.1": "Violated"}, source="derived"),
        ),
        window=((-1.0, -1.5), (5.0, 1.5)),
        variants={"restricted": H_pos},
        solver={"priority": "flow_first", "horizon": (10.0, 200)},
        x0=(0.0, 1.0),
        description="F = (1 + x1^2, 0) on [0, inf) x [-1, 1]; jumps x1 -> x1 + [-1, 1] on the x1 axis",
    )


def _wfi_circle() -> CatalogEntry:
    C = intersection(ball([0.0, 0.0], 1.0), halfspace([0.0, -1.0], 0.0), prune=False)
    D = box([-1.0, 0.0], [INF, 0.0])
    F = single_valued([x1_, -x0_], 2)
    G = single_valued([-0.9 * x0_, x1_], 2)
    arc = intersection(ball([0.0, 0.0], 1.0), sublevel(1 - x0_ ** 2 - x1_ ** 2, 0.0, 2),
                       halfspace([0.0, -1.0], 0.0), prune=False)
    diameter = box([-1.0, 0.0], [1.0, 0.0])
    K1 = union(arc, diameter)
    H = HybridSystem(2, C, F, D, G, "weakly invariant circle")
    return CatalogEntry(
        "ex_wfi_circle", H, {"K1": K1, "K2": C},
        "Example 'weakly forward invariant set'",
        expected=(
            ExpectedCheck("wfi", "K1", {"wfi.1": "SampledPass", "wfi.2": "SampledPass", "KL": "SampledPass",
                                        "Nstar.compact": "CertifiedPass", "overall": "SampledPass"}),
            ExpectedCheck("fi", "K2", {"fi.1": "SampledPass", "fi.2": "SampledPass", "overall": "SampledPass"}),
        ),
        solver={"priority": "jump_first", "horizon": (10.0, 200)},
        x0=(0.0, 1.0),
        description="rotation on the upper half disk; jumps x1 -> -0.9 x1 on the x1 axis",
    )


def _oscillator_sets(extra: int = 0):
    C1, C2 = _quadrant(1, 1, extra=extra), _quadrant(-1, -1, extra=extra)
    D1, D2 = _quadrant(-1, 1, extra=extra), _quadrant(1, -1, extra=extra)
    return C1, C2, D1, D2


def _oscillator_nominal() -> CatalogEntry:
    C1, C2, D1, D2 = _oscillator_sets()
    F = single_valued([-abs(x0_) * x1_, ex.const(0.0)], 2)
    G = single_valued([x0_, x1_], 2)
    H = HybridSystem(2, union(C1, C2), F, union(D1, D2), G, "oscillator")
    return CatalogEntry(
        "ex_oscillator_nominal", H, {"K1": union(C1, D1)},
        "Example 'forward invariant set'",
        expected=(
            ExpectedCheck("data", "K1", {"overall": "SampledPass"}),
            ExpectedCheck("fi", "K1", {"fi.1": "SampledPass", "fi.2": "SampledPass",
                                       "Nstar.compact": "CertifiedPass", "overall": "SampledPass"}),
        ),
        solver={"priority": "jump_first", "horizon": (10.0, 200)},
        x0=(0.6, 0.6),
        description="F = (-|x1| x2, 0) on quadrants 1 and 3 of the unit disk; G = identity on quadrants 2 and 4",
    )


def rotation(theta: ex.Expr, a: ex.Expr, b: ex.Expr) -> tuple:
    """``R(theta) (a, b)`` with ``R = [[cos, sin], [-sin, cos]]``."""
    return (ex.cos(theta) * a + ex.sin(theta) * b, -ex.sin(theta) * a + ex.cos(theta) * b)


def _oscillator_disturbed() -> CatalogEntry:
    w = x2_
    C1, C2, D1, D2 = _oscillator_sets(extra=1)
    wbox = box([-INF, -INF, 0.0], [INF, INF, 1.0])
    w_le_norm = sublevel(w ** 2 - x0_ ** 2 - x1_ ** 2, 0.0, 3)
    C_w = intersection(union(C1, C2), wbox, w_le_norm, prune=False)
    D_w = intersection(union(D1, D2), box([-INF, -INF, -math.pi / 4], [INF, INF, 0.0]), prune=False)
    F_w = single_valued([-abs(x0_) * x1_, w * abs(x0_) * x0_], 3)
    fractions = (1.0, 0.5, 0.0, -0.5, -1.0)
    G_w = SetValuedMap(3, 2, tuple(Selection(rotation(s * w, x0_, x1_), label=f"theta={s:g} w_d")
                                   for s in fractions))
    Hw = DisturbedHybridSystem(2, 1, 1, C_w, F_w, D_w, G_w, box([0.0], [1.0]), box([-math.pi / 4], [0.0]),
                               True, "disturbed oscillator")
    c1, c2, d1, d2 = _oscillator_sets()
    return CatalogEntry(
        "ex_oscillator_disturbed", Hw, {"K1": union(c1, d1), "K2": union(c1, c2, d1, d2)},
        "Example 'robustly weakly forward invariant set' and its revisited form",
        expected=(
            ExpectedCheck("rwfi", "K1", {"rwFI.1": "SampledPass", "rwFI.2": "SampledPass", "overall": "SampledPass"}),
            ExpectedCheck("rfi", "K2", {"rFI.1": "SampledPass", "rFI.2": "SampledPass", "wbound": "SampledPass",
                                        "overall": "SampledPass"}),
            ExpectedCheck("rfi", "K1", {"rFI.1": "Violated"}),
            ExpectedCheck("rfi", "K1", {"rFI.2": "Violated", "overall": "Violated"}, source="derived"),
        ),
        solver={"priority": "jump_first", "horizon": (10.0, 200), "jump_selection": 2},
        x0=(0.6, 0.6),
        description="oscillator with flow disturbance w_c in [0, |x|] and jump rotations by theta in [w_d, -w_d]",
    )


def _gamma_corner(gamma: float = 1.0) -> CatalogEntry:
    C = union(_quadrant(1, 1, None), _quadrant(-1, -1, None))
    D = box([0.0, 0.0], [INF, 0.0])
    F = single_valued([x1_, ex.const(-gamma)], 2)
    G = single_valued([x0_, x1_], 2)
    H = HybridSystem(2, C, F, D, G, f"gamma corner (gamma = {gamma:g})")
    K = _quadrant(1, 1, None)
    return CatalogEntry(
        "ex_gamma_corner", H, {"K": K},
        "counterexample following the alternate boundary condition",
        expected=(
            ExpectedCheck("fi", "K", {"fi.2''": "SampledPass", "fi.2''s": "Violated"}, mode="alt"),
            ExpectedCheck("fi", "K", {"fi.2": "Violated"}, source="derived"),
            ExpectedCheck("wfi", "K", {"wfi.1": "SampledPass", "wfi.2": "SampledPass", "overall": "SampledPass"}),
        ),
        window=((-2.0, -2.0), (2.0, 2.0)),
        solver={"priority": "flow_first", "horizon": (5.0, 50)},
        x0=(0.0, 0.0),
        params={"gamma": gamma},
        description="F = (x2, -gamma) on quadrants 1 and 3; G = identity on the positive x1 axis",
    )


def _marchaud_1d() -> CatalogEntry:
    C = box([-1.0], [1.0])
    D = box([1.0], [1.0])
    F = SetValuedMap(1, 1, (Selection((ex.const(1.0),), label="+1"),
                            Selection((ex.const(-1.0),), guard=box([-1.0], [-1.0]), label="-1 at x = -1")))
    G = SetValuedMap(1, 1, (Selection((ex.const(-1.0),), label="-1"), Selection((ex.const(0.0),), label="0")))
    H = HybridSystem(1, C, F, D, G, "Marchaud remark")
    return CatalogEntry(
        "ex_marchaud_1d", H, {"K": C},
        "1-D example with Marchaud and Lipschitz F",
        expected=(
            ExpectedCheck("fi", "K", {"fi.1": "SampledPass", "fi.2": "Violated"}),
            ExpectedCheck("wfi", "K", {"wfi.1": "SampledPass", "wfi.2": "SampledPass", "overall": "SampledPass"},
                          source="derived"),
        ),
        solver={"priority": "jump_first", "horizon": (10.0, 200)},
        x0=(-1.0,),
        description="F = 1 on (-1, 1], F(-1) = [-1, 1]; G(1) = {-1, 0}",
    )


def _ly_failure() -> CatalogEntry:
    C = halfspace([1.0, 0.0], -1.0)
    F = single_valued([x1_, -x0_], 2)
    G = single_valued([x0_, x1_], 2)
    H = HybridSystem(2, C, F, EMPTY(2), G, "sublevel failure")
    spec = LyapunovSpec(x0_ ** 2 + x1_ ** 2, 1.0, 2.0)
    return CatalogEntry(
        "ex_ly_failure", H, {"M_r": intersection(C, sublevel(spec.V, spec.r, 2))},
        "sublevel-set failure example",
        expected=(ExpectedCheck("ly", "M_r", {"Ly.3": "Violated", "lya1": "SampledPass", "overall": "Violated"}),),
        lyapunov=spec,
        window=((-4.0, -4.0), (4.0, 4.0)),
        solver={"priority": "flow_first", "horizon": (5.0, 10)},
        x0=(-1.0, 0.0),
        description="rotation on x1 <= -1 with V = |x|^2, r = 1, r* = 2",
    )


INVERTER_PARAMS = dict(R=1.0, L=0.1, C_a=66.6e-6, V_DC=220.0, b=120.0, omega=120 * math.pi,
                       c_i=0.9, c_o=1.1, eps=0.3)


def inverter_system(R=1.0, L=0.1, C_a=66.6e-6, V_DC=220.0, b=120.0, omega=120 * math.pi,
                    c_i=0.9, c_o=1.1, eps=0.3, name="inverter") -> HybridSystem:
    """Closed-loop H-bridge inverter; state ``(q, i_L, v_C)`` with ``q`` embedded as a real."""
    a = C_a * omega * b
    q, iL, vC = x0_, x1_, x2_
    V = (iL * (1.0 / a)) ** 2 + (vC * (1.0 / b)) ** 2

    def at_q(k, *sets):
        return intersection(box([k, -INF, -INF], [k, INF, INF]), *sets, prune=False)

    band = [sublevel(V, c_o, 3, convex=True), sublevel(-V, -c_i, 3)]
    on_co = [sublevel(V, c_o, 3, convex=True), sublevel(-V, -c_o, 3)]
    on_ci = [sublevel(V, c_i, 3, convex=True), sublevel(-V, -c_i, 3)]
    iL_ge = lambda v: halfspace([0.0, -1.0, 0.0], -v)   # i_L >= v
    iL_le = lambda v: halfspace([0.0, 1.0, 0.0], v)     # i_L <= v
    vC_ge0, vC_le0 = halfspace([0.0, 0.0, -1.0], 0.0), halfspace([0.0, 0.0, 1.0], 0.0)

    C = union(*(at_q(k, *band) for k in (-1.0, 0.0, 1.0)))
    D = union(
        at_q(1.0, *on_ci, iL_le(0.0)), at_q(-1.0, *on_ci, iL_ge(0.0)),
        at_q(1.0, *on_co, iL_ge(0.0)), at_q(-1.0, *on_co, iL_le(0.0)),
        at_q(0.0, *on_ci),
    )
    F = single_valued([ex.const(0.0), (V_DC / L) * q - (R / L) * iL - (1.0 / L) * vC, (1.0 / C_a) * iL], 3)
    M1 = [*on_co, iL_ge(0.0), iL_le(eps), vC_le0]
    M2 = [*on_co, iL_ge(-eps), iL_le(0.0), vC_ge0]
    # guards are closures of the switching conditions
    to_minus = union(*(r for k in (0.0, 1.0) for r in (
        at_q(k, *on_co, iL_ge(eps)), at_q(k, *on_co, iL_ge(0.0), vC_ge0), at_q(k, *on_ci, iL_le(0.0)))))
    to_zero = union(at_q(1.0, *M1), at_q(-1.0, *M2))
    to_plus = union(*(r for k in (-1.0, 0.0) for r in (
        at_q(k, *on_co, iL_le(-eps)), at_q(k, *on_co, iL_le(0.0), vC_le0), at_q(k, *on_ci, iL_ge(0.0)))))
    G = SetValuedMap(3, 3, (
        Selection((ex.const(-1.0), iL, vC), to_minus, "q -> -1"),
        Selection((ex.const(0.0), iL, vC), to_zero, "q -> 0"),
        Selection((ex.const(1.0), iL, vC), to_plus, "q -> 1"),
    ))
    return HybridSystem(3, C, F, D, G, name)


def inverter_constants(R=1.0, L=0.1, C_a=66.6e-6, V_DC=220.0, b=120.0, omega=120 * math.pi, **_) -> dict:
    a = C_a * omega * b
    alpha = 2.0 / (a * a * L)
    beta = 2.0 / (b * b * C_a)
    return {"a": a, "alpha": alpha, "beta": beta, "LC_omega2": L * C_a * omega ** 2}


def _inverter() -> CatalogEntry:
    p = dict(INVERTER_PARAMS)
    H = inverter_system(**p)
    compliant = dict(p, C_a=80e-6)
    Hc = inverter_system(**compliant, name="inverter (C_a = 80 uF)")
    k = inverter_constants(**p)
    kc = inverter_constants(**compliant)
    a, b = k["a"], p["b"]
    V = (x1_ * (1.0 / a)) ** 2 + (x2_ * (1.0 / b)) ** 2
    return CatalogEntry(
        "ex_inverter", H, {"T": H.C, "T_compliant": Hc.C},
        "H-bridge inverter with series RLC filter and band set T",
        expected=(
            ExpectedCheck("fi", "T", {"fi.1": "SampledPass", "fi.2": "SampledPass", "KL": "Violated",
                                      "overall": "Violated"}, source="derived"),
            ExpectedCheck("fi", "T_compliant", {"fi.1": "SampledPass", "fi.2": "SampledPass", "KL": "Violated"},
                          variant="compliant", source="derived"),
        ),
        window=((-1.0, -1.2 * a * math.sqrt(p["c_o"]), -1.2 * b * math.sqrt(p["c_o"])),
                (1.0, 1.2 * a * math.sqrt(p["c_o"]), 1.2 * b * math.sqrt(p["c_o"]))),
        variants={"compliant": Hc},
        solver={"priority": "jump_first", "horizon": (0.1, 5000), "dt_max": 1e-4},
        x0=(0.0, a, 0.0),
        params={**p, **k, "V": ex.to_sexpr(V), "compliant": {**compliant, **kc}},
        description="state (q, i_L, v_C); V(z) = (i_L/a)^2 + (v_C/b)^2 with a = C_a omega b",
    )


_BUILDERS = {
    "ex_finite_escape": _finite_escape,
    "ex_wfi_circle": _wfi_circle,
    "ex_oscillator_nominal": _oscillator_nominal,
    "ex_oscillator_disturbed": _oscillator_disturbed,
    "ex_gamma_corner": _gamma_corner,
    "ex_marchaud_1d": _marchaud_1d,
    "ex_ly_failure": _ly_failure,
    "ex_inverter": _inverter,
}
_CACHE: dict = {}


def list_ids() -> list[str]:
    return list(_BUILDERS)


def load_example(name: str) -> CatalogEntry:
    if name not in _BUILDERS:
        raise UnknownExampleError(name, _BUILDERS)
    if name not in _CACHE:
        _CACHE[name] = _BUILDERS[name]()
    return _CACHE[name]
