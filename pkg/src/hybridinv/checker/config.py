"""Checker configuration and the Lyapunov data of the sublevel theorem."""

from __future__ import annotations

from dataclasses import dataclass

from .. import expr as ex
from ..geometry import DELTA_CONE, EPS_STRICT
from ..sets import EPS_ACT, EPS_MEM


@dataclass(frozen=True)
class CheckConfig:
    boundary_samples: int = 2000
    member_samples: int = 1000
    disturbance_grid: int = 9
    jump_enumeration_cap: int = 64
    eps_strict: float = EPS_STRICT
    lipschitz_samples: int = 500
    seed: int = 0
    window: tuple | None = None  # (lo, hi) sampling box for unbounded sets
    eps_mem: float = EPS_MEM
    eps_act: float = EPS_ACT
    delta_cone: float = DELTA_CONE
    lipschitz_flag: float = 1e6
    growth_scales: tuple = (1.0, 10.0, 100.0, 1000.0)
    max_witnesses: int = 5

    def __post_init__(self):
        for name in ("boundary_samples", "member_samples", "disturbance_grid",
                     "jump_enumeration_cap", "lipschitz_samples"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class LyapunovSpec:
    V: ex.Expr
    r: float
    r_star: float

    def __post_init__(self):
        if isinstance(self.V, str):
            object.__setattr__(self, "V", ex.parse(self.V))
        if not self.r < self.r_star:
            raise ValueError(f"need r < r_star, got r={self.r}, r_star={self.r_star}")
