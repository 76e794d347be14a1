"""Uniform access to flow and jump options of nominal and disturbed systems.

A nominal system offers one option per selection.  A disturbed system offers
one option per (selection, disturbance grid point); the option is available
at ``x`` when ``(x, w)`` lies in the joint flow (jump) set and the selection's
guard admits ``x``.  With singleton zero disturbance boxes both views produce
the same options on the same sets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..sets import ConstraintSet, union
from ..systems import DisturbedHybridSystem, HybridSystem, SetValuedMap
from .config import CheckConfig


@dataclass
class Option:
    values: np.ndarray  # (n, m)
    avail: np.ndarray  # (m,)
    selection: int
    w: np.ndarray | None = None
    group: int = 0  # index of the disturbance value the option belongs to


class NominalView:
    robust = False

    def __init__(self, H: HybridSystem, cfg: CheckConfig):
        self.system = H
        self.cfg = cfg
        self.dim = H.dim
        self.C = H.C
        self.D = H.D

    @property
    def C_or_D(self) -> ConstraintSet:
        return self.system.C_or_D

    def flow_maps(self):
        """``(set, map, w)`` triples whose options make up the flow map."""
        return [(self.C, self.system.F, None)]

    def jump_maps(self):
        return [(self.D, self.system.G, None)]

    def flow_options(self, X, zero_only: bool = False) -> list[Option]:
        return _options(self.flow_maps(), X, self.cfg.eps_act)

    def jump_options(self, X) -> tuple[list[Option], bool]:
        opts = _options(self.jump_maps(), X, self.cfg.eps_act)
        cap = self.cfg.jump_enumeration_cap
        return opts[:cap], len(opts) > cap


class RobustView(NominalView):
    robust = True

    def __init__(self, Hw: DisturbedHybridSystem, cfg: CheckConfig):
        self.system = Hw
        self.cfg = cfg
        self.dim = Hw.dim
        res = cfg.disturbance_grid
        self.C = Hw.proj_c(res)
        self.D = Hw.proj_d(res)
        self._flow = [(*Hw.flow_slice(w), w) for w in Hw.grid_c(res).T]
        self._jump = [(*Hw.jump_slice(w), w) for w in Hw.grid_d(res).T]
        self._zero = [t for t in self._flow if not np.any(t[2])]

    @property
    def C_or_D(self) -> ConstraintSet:
        if self.D.is_empty:
            return self.C
        return union(self.C, self.D)

    def flow_maps(self, zero_only: bool = False):
        return self._zero if zero_only else self._flow

    def jump_maps(self):
        return self._jump

    def flow_options(self, X, zero_only: bool = False) -> list[Option]:
        return _options(self.flow_maps(zero_only), X, self.cfg.eps_act)


def _options(maps, X, tol) -> list[Option]:
    X = np.asarray(X, dtype=float)
    out = []
    for g, (S, M, w) in enumerate(maps):
        M: SetValuedMap
        if X.shape[1] == 0:
            inside = np.zeros(0, dtype=bool)
        else:
            inside = np.asarray(S.contains(X, tol))
        for i, sel in enumerate(M.selections):
            vals = sel(X) if X.shape[1] else np.zeros((M.out_dim, 0))
            avail = inside & np.asarray(sel.available(X)) if X.shape[1] else inside
            out.append(Option(vals, avail, i, None if w is None else np.asarray(w, dtype=float), g))
    return out


def view_for(system, cfg: CheckConfig) -> NominalView:
    if isinstance(system, DisturbedHybridSystem):
        return RobustView(system, cfg)
    return NominalView(system, cfg)
