"""Verdicts, per-condition entries and check reports."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

import numpy as np


class Verdict(str, enum.Enum):
    CERTIFIED = "CertifiedPass"
    SAMPLED = "SampledPass"
    VIOLATED = "Violated"
    NOT_APPLICABLE = "NotApplicable"
    INDETERMINATE = "Indeterminate"

    def __str__(self) -> str:
        return self.value

    @property
    def passed(self) -> bool:
        return self in (Verdict.CERTIFIED, Verdict.SAMPLED, Verdict.NOT_APPLICABLE)


_RANK = {Verdict.CERTIFIED: 0, Verdict.SAMPLED: 1, Verdict.INDETERMINATE: 2, Verdict.VIOLATED: 3}


def combine(verdicts) -> Verdict:
    """Conjunction: the weakest verdict wins; ``NotApplicable`` is neutral."""
    vs = [Verdict(v) for v in verdicts if Verdict(v) is not Verdict.NOT_APPLICABLE]
    if not vs:
        return Verdict.NOT_APPLICABLE
    return max(vs, key=_RANK.__getitem__)


@dataclass
class Witness:
    point: tuple
    direction: tuple | None = None
    disturbance: tuple | None = None
    margin: float = float("nan")
    note: str = ""

    def to_dict(self) -> dict:
        d = {"point": list(self.point), "margin": _num(self.margin)}
        if self.direction is not None:
            d["direction"] = list(self.direction)
        if self.disturbance is not None:
            d["disturbance"] = list(self.disturbance)
        if self.note:
            d["note"] = self.note
        return d


def witness(x, direction=None, disturbance=None, margin=float("nan"), note="") -> Witness:
    tup = lambda v: None if v is None else tuple(float(a) for a in np.atleast_1d(v))
    return Witness(tup(x), tup(direction), tup(disturbance), float(margin), note)


@dataclass
class Entry:
    """Outcome of one condition.

    ``points`` and ``margins`` keep the evaluated samples (one margin per
    column) for inspection; only their count reaches the JSON export.
    """

    id: str
    verdict: Verdict
    witnesses: list = field(default_factory=list)
    n_samples: int = 0
    note: str = ""
    points: np.ndarray | None = field(default=None, repr=False)
    margins: np.ndarray | None = field(default=None, repr=False)
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.verdict = Verdict(self.verdict)
        if self.verdict is Verdict.VIOLATED and not self.witnesses:
            raise ValueError(f"violated entry {self.id} needs a witness")

    @property
    def worst_margin(self) -> float:
        if self.margins is None or self.margins.size == 0:
            return float("nan")
        finite = self.margins[np.isfinite(self.margins)]
        return float(np.max(finite)) if finite.size else float("nan")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "verdict": str(self.verdict),
            "samples": self.n_samples,
            "worst_margin": _num(self.worst_margin),
            "witnesses": [w.to_dict() for w in self.witnesses],
            "note": self.note,
            "info": self.info,
        }


@dataclass
class CheckReport:
    theorem: str
    set_name: str = "K"
    entries: list = field(default_factory=list)
    conclusions: dict = field(default_factory=dict)  # name -> (condition ids, Verdict)
    notes: list = field(default_factory=list)
    overall: Verdict = Verdict.NOT_APPLICABLE

    def add(self, entry: Entry) -> Entry:
        self.entries.append(entry)
        return entry

    def __getitem__(self, cid: str) -> Entry:
        for e in self.entries:
            if e.id == cid:
                return e
        raise KeyError(f"no condition {cid!r} in report (have {[e.id for e in self.entries]})")

    def __contains__(self, cid: str) -> bool:
        return any(e.id == cid for e in self.entries)

    def verdicts(self) -> dict:
        return {e.id: e.verdict for e in self.entries}

    def conclude(self, name: str, ids, override: Verdict | None = None) -> Verdict:
        v = combine(self[i].verdict for i in ids if i in self)
        if override is not None:
            v = combine([v, override])
        self.conclusions[name] = (tuple(ids), v)
        return v

    def finish(self, main: str) -> "CheckReport":
        self.overall = self.conclusions[main][1]
        return self

    def to_dict(self) -> dict:
        return {
            "theorem": self.theorem,
            "set": self.set_name,
            "overall": str(self.overall),
            "conclusions": {k: {"conditions": list(ids), "verdict": str(v)}
                            for k, (ids, v) in self.conclusions.items()},
            "entries": [e.to_dict() for e in self.entries],
            "notes": list(self.notes),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def text(self) -> str:
        lines = [f"{self.theorem} for {self.set_name}: {self.overall}"]
        w = max([len(e.id) for e in self.entries] + [9])
        lines.append(f"  {'condition':<{w}}  {'verdict':<14} {'samples':>7}  worst margin")
        for e in self.entries:
            m = e.worst_margin
            ms = "" if np.isnan(m) else f"{m:.3g}"
            lines.append(f"  {e.id:<{w}}  {str(e.verdict):<14} {e.n_samples:>7}  {ms}")
            for wt in e.witnesses[:1]:
                lines.append(f"    witness x={_vec(wt.point)}"
                             + (f" dir={_vec(wt.direction)}" if wt.direction else "")
                             + (f" w={_vec(wt.disturbance)}" if wt.disturbance else "")
                             + (f" ({wt.note})" if wt.note else ""))
        for name, (_, v) in self.conclusions.items():
            lines.append(f"  => {name}: {v}")
        for n in self.notes:
            lines.append(f"  note: {n}")
        return "\n".join(lines) + "\n"


def _vec(v) -> str:
    return "(" + ", ".join(f"{a:.6g}" for a in v) + ")"


def _num(v: float):
    v = float(v)
    if np.isnan(v):
        return None
    if np.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v
