"""Simulation and invariance checking for hybrid inclusions.

A hybrid system ``H = (C, F, D, G)`` flows by ``x' in F(x)`` on ``C`` and
jumps by ``x+ in G(x)`` on ``D``.  This package provides the model types,
a hybrid-time integrator with event localization, tangent cone machinery,
sampled checks of the invariance conditions and a catalog of worked systems.
"""

from . import expr
from .catalog import CatalogEntry, list_ids, load_example
from .checker import (CheckConfig, CheckReport, LyapunovSpec, Verdict, check_assumption_data,
                      check_completeness, check_forward_invariance, check_lyapunov_sublevel,
                      check_robust_forward, check_robust_weak, check_weak_forward_invariance,
                      run_theorem)
from .geometry import (ConeStatus, distance_to_set, project_onto_set, tangent_cone_batch,
                       tangent_cone_contains)
from .scenario import Scenario, ScenarioError
from .sets import ConstraintSet, ball, box, halfspace, intersection, sublevel, union
from .solver import DisturbancePolicy, Priority, SolverConfig, simulate, simulate_disturbed
from .systems import (DisturbedHybridSystem, HybridArc, HybridSystem, Selection, SetValuedMap,
                      TerminationClass, single_valued)

__version__ = "0.1.0"

__all__ = [
    "expr", "CatalogEntry", "list_ids", "load_example", "CheckConfig", "CheckReport", "LyapunovSpec",
    "Verdict", "check_assumption_data", "check_completeness", "check_forward_invariance",
    "check_lyapunov_sublevel", "check_robust_forward", "check_robust_weak",
    "check_weak_forward_invariance", "run_theorem", "ConeStatus", "distance_to_set", "project_onto_set",
    "tangent_cone_batch", "tangent_cone_contains", "Scenario", "ScenarioError", "ConstraintSet",
    "ball", "box", "halfspace", "intersection", "sublevel", "union", "DisturbancePolicy", "Priority",
    "SolverConfig", "simulate", "simulate_disturbed", "DisturbedHybridSystem", "HybridArc",
    "HybridSystem", "Selection", "SetValuedMap", "TerminationClass", "single_valued",
]
