"""Scenario files: hybrid systems and their candidate sets as JSON.

Grammar (all keys optional unless noted)::

    {
      "format": "hybridinv-scenario/1",
      "name": str,
      "dim": int,                                   required
      "C": SET, "F": MAP, "D": SET, "G": MAP,       nominal system
      "dc": int, "dd": int,                         disturbed system instead:
      "C_w": SET, "F_w": MAP, "D_w": SET, "G_w": MAP, "W_c": SET, "W_d": SET, "wdata": bool,
      "K": {name: SET, ...},
      "V": SEXPR, "r": float, "r_star": float,      sublevel data
      "variants": {name: SYSTEM, ...},              same keys as the top level
      "window": [[lo...], [hi...]],
      "x0": [float...],
      "solver": {SolverConfig field: value},
      "tolerances": {"eps_mem": float, "eps_act": float}
    }

    SET   = {"box": {"lo": [..], "hi": [..]}}
          | {"ball": {"center": [..], "radius": r, "axes"?: [..], "dim"?: n}}
          | {"halfspace": {"normal": [..], "offset": c}}          normal . x <= c
          | {"sublevel": {"expr": SEXPR, "level": c, "dim"?: n, "convex"?: bool}}
          | {"intersection": [SET, ...]} | {"union": [SET, ...]} | {"empty": n}
    MAP   = {"in_dim": n, "out_dim": m,
             "selections": [{"components": [SEXPR, ...], "guard"?: SET, "label"?: str}, ...]}
    SEXPR = prefix expression such as "(+ 1 (pow (var 0) 2))"; operators
            + * pow abs min max sin cos neg, leaves (var i) and numbers.

Infinite bounds are written as the strings "inf" and "-inf".  Numbers are
printed with ``repr`` so a round trip preserves every float bit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from . import expr as ex
from .checker.config import LyapunovSpec
from .sets import ConstraintSet, Region, set_from_dict
from .systems import DisturbedHybridSystem, HybridSystem, Selection, SetValuedMap

FORMAT = "hybridinv-scenario/1"


class ScenarioError(ValueError):
    """Malformed scenario text; ``line`` and ``column`` are 1-based."""

    def __init__(self, message: str, line: int = 1, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.message = message
        self.line = line
        self.column = column


@dataclass
class Scenario:
    system: HybridSystem | DisturbedHybridSystem
    candidate_sets: dict = field(default_factory=dict)
    lyapunov: LyapunovSpec | None = None
    variants: dict = field(default_factory=dict)
    window: tuple | None = None
    x0: tuple | None = None
    solver: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    name: str = ""

    @property
    def disturbed(self) -> bool:
        return isinstance(self.system, DisturbedHybridSystem)


# ---------------------------------------------------------------------------
# writing
# ---------------------------------------------------------------------------


def map_to_dict(M: SetValuedMap) -> dict:
    sels = []
    for s in M.selections:
        d = {"components": [ex.to_sexpr(c) for c in s.components]}
        if s.guard is not None:
            d["guard"] = s.guard.to_dict()
        if s.label:
            d["label"] = s.label
        sels.append(d)
    return {"in_dim": M.in_dim, "out_dim": M.out_dim, "selections": sels}


def system_to_dict(H) -> dict:
    if isinstance(H, DisturbedHybridSystem):
        return {
            "name": H.name, "dim": H.dim, "dc": H.dc, "dd": H.dd,
            "C_w": H.C_w.to_dict(), "F_w": map_to_dict(H.F_w),
            "D_w": H.D_w.to_dict(), "G_w": map_to_dict(H.G_w),
            "W_c": H.W_c.to_dict(), "W_d": H.W_d.to_dict(), "wdata": H.wdata,
        }
    return {"name": H.name, "dim": H.dim, "C": H.C.to_dict(), "F": map_to_dict(H.F),
            "D": H.D.to_dict(), "G": map_to_dict(H.G)}


def scenario_to_dict(sc: Scenario) -> dict:
    d = {"format": FORMAT, **system_to_dict(sc.system)}
    if sc.name:
        d["name"] = sc.name
    if sc.candidate_sets:
        d["K"] = {k: S.to_dict() for k, S in sc.candidate_sets.items()}
    if sc.lyapunov is not None:
        d.update(V=ex.to_sexpr(sc.lyapunov.V), r=sc.lyapunov.r, r_star=sc.lyapunov.r_star)
    if sc.variants:
        d["variants"] = {k: system_to_dict(v) for k, v in sc.variants.items()}
    if sc.window is not None:
        d["window"] = [[_enc(v) for v in side] for side in sc.window]
    if sc.x0 is not None:
        d["x0"] = [float(v) for v in sc.x0]
    if sc.solver:
        d["solver"] = {k: list(v) if isinstance(v, tuple) else v for k, v in sc.solver.items()}
    if sc.tolerances:
        d["tolerances"] = dict(sc.tolerances)
    return d


def dumps(sc: Scenario) -> str:
    return json.dumps(scenario_to_dict(sc), indent=2, sort_keys=True) + "\n"


def _enc(v):
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


# ---------------------------------------------------------------------------
# reading
# ---------------------------------------------------------------------------


def _position(text: str, offset: int) -> tuple[int, int]:
    line = text.count("\n", 0, offset) + 1
    col = offset - (text.rfind("\n", 0, offset) + 1) + 1
    return line, col


class _Reader:
    """Builds objects from parsed JSON, mapping failures back to text positions."""

    def __init__(self, text: str):
        self.text = text

    def fail(self, message: str, needle: str | None = None, inner: int = 0):
        off = self.text.find(needle) if needle else -1
        line, col = _position(self.text, off + inner) if off >= 0 else (1, 1)
        raise ScenarioError(message, line, col)

    def expr(self, s):
        if not isinstance(s, str):
            self.fail(f"expected an s-expression string, got {s!r}", json.dumps(s))
        try:
            return ex.parse(s)
        except ex.ExprSyntaxError as e:
            # column inside the expression; +1 skips the opening quote
            self.fail(f"bad expression {s!r}: {e}", json.dumps(s), e.column)

    def set(self, d, key: str, dim: int | None = None) -> ConstraintSet:
        self._check_exprs(d)
        try:
            S = set_from_dict(d, dim)
        except (ValueError, KeyError, TypeError) as e:
            self.fail(f"bad set for {key!r}: {e}", f'"{key}"')
        if dim is not None and S.dim != dim:
            self.fail(f"set {key!r} has dimension {S.dim}, expected {dim}", f'"{key}"')
        return S

    def _check_exprs(self, d):
        # parse sublevel expressions first so their errors carry a position
        if isinstance(d, dict):
            if "sublevel" in d and isinstance(d["sublevel"], dict):
                self.expr(d["sublevel"].get("expr"))
            for v in d.values():
                self._check_exprs(v)
        elif isinstance(d, list):
            for v in d:
                self._check_exprs(v)

    def map(self, d, key: str, in_dim: int, out_dim: int) -> SetValuedMap:
        if not isinstance(d, dict) or not isinstance(d.get("selections"), list):
            self.fail(f"{key!r} must be an object with a 'selections' list", f'"{key}"')
        sels = []
        for s in d["selections"]:
            if not isinstance(s, dict) or not isinstance(s.get("components"), list):
                self.fail(f"each selection of {key!r} needs a 'components' list", f'"{key}"')
            comps = tuple(self.expr(c) for c in s["components"])
            guard = self.set(s["guard"], key, in_dim) if s.get("guard") is not None else None
            sels.append(Selection(comps, guard, str(s.get("label", ""))))
        try:
            return SetValuedMap(int(d.get("in_dim", in_dim)), int(d.get("out_dim", out_dim)), tuple(sels))
        except ValueError as e:
            self.fail(f"bad map {key!r}: {e}", f'"{key}"')

    def require(self, d: dict, key: str):
        if key not in d:
            self.fail(f"missing key {key!r}")
        return d[key]

    def system(self, d: dict):
        n = self.require(d, "dim")
        if not isinstance(n, int) or n <= 0:
            self.fail("'dim' must be a positive integer", '"dim"')
        name = str(d.get("name", ""))
        if "C_w" in d or "F_w" in d:
            dc, dd = int(self.require(d, "dc")), int(self.require(d, "dd"))
            Cw = self.set(self.require(d, "C_w"), "C_w", n + dc)
            Fw = self.map(self.require(d, "F_w"), "F_w", n + dc, n)
            Dw = self.set(self.require(d, "D_w"), "D_w", n + dd)
            Gw = self.map(self.require(d, "G_w"), "G_w", n + dd, n)
            Wc = self.set(self.require(d, "W_c"), "W_c", dc)
            Wd = self.set(self.require(d, "W_d"), "W_d", dd)
            if not isinstance(Wc, Region) or not isinstance(Wd, Region):
                self.fail("disturbance sets must be boxes", '"W_c"')
            try:
                return DisturbedHybridSystem(n, dc, dd, Cw, Fw, Dw, Gw, Wc, Wd, bool(d.get("wdata", True)), name)
            except ValueError as e:
                self.fail(str(e), '"C_w"')
        C = self.set(self.require(d, "C"), "C", n)
        F = self.map(self.require(d, "F"), "F", n, n)
        D = self.set(self.require(d, "D"), "D", n)
        G = self.map(self.require(d, "G"), "G", n, n)
        try:
            return HybridSystem(n, C, F, D, G, name)
        except ValueError as e:
            self.fail(str(e), '"F"')


def loads(text: str) -> Scenario:
    """Parse scenario text; errors raise :class:`ScenarioError` with a position."""
    try:
        d = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError(e.msg, e.lineno, e.colno) from None
    rd = _Reader(text)
    if not isinstance(d, dict):
        rd.fail("a scenario must be a JSON object")
    fmt = d.get("format", FORMAT)
    if fmt != FORMAT:
        rd.fail(f"unsupported format {fmt!r}", '"format"')
    H = rd.system(d)
    n = H.dim
    K = {str(k): rd.set(v, str(k), n) for k, v in (d.get("K") or {}).items()}
    lyap = None
    if "V" in d:
        V = rd.expr(d["V"])
        try:
            lyap = LyapunovSpec(V, float(rd.require(d, "r")), float(rd.require(d, "r_star")))
        except (TypeError, ValueError) as e:
            rd.fail(f"bad sublevel data: {e}", '"r"')
    variants = {str(k): rd.system(v) for k, v in (d.get("variants") or {}).items()}
    window = None
    if d.get("window") is not None:
        try:
            lo, hi = d["window"]
            window = (tuple(float(v) for v in lo), tuple(float(v) for v in hi))
        except (TypeError, ValueError):
            rd.fail("'window' must be [[lo...], [hi...]]", '"window"')
    x0 = tuple(float(v) for v in d["x0"]) if d.get("x0") is not None else None
    solver = {k: tuple(v) if isinstance(v, list) else v for k, v in (d.get("solver") or {}).items()}
    return Scenario(H, K, lyap, variants, window, x0, solver, dict(d.get("tolerances") or {}),
                    str(d.get("name", "")))


def load(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def from_entry(entry) -> Scenario:
    """Scenario for a catalog entry."""
    return Scenario(entry.system, dict(entry.candidate_sets), entry.lyapunov, dict(entry.variants),
                    entry.window, entry.x0, dict(entry.solver), name=entry.id)
