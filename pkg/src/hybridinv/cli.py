"""Command-line front end.

    python -m hybridinv simulate --id ex_inverter --x0 3.013,0 --q0 0 --horizon 0.1,5000 --out inv.csv
    python -m hybridinv check --id ex_oscillator_nominal --set K1 --theorem fi
    python -m hybridinv catalog
    python -m hybridinv export --id ex_gamma_corner --out gamma.json

Trailing ``section.key=value`` arguments override configuration fields, e.g.
``solver.dt_max=1e-4`` or ``check.boundary_samples=500``.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import catalog, scenario
from .checker import THEOREMS, CheckConfig, run_theorem
from .solver import DisturbancePolicy, NoNontrivialSolutionError, SolverConfig, simulate, simulate_disturbed
from .systems import DisturbedHybridSystem

EXIT_USAGE = 2


class UsageError(Exception):
    pass


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _horizon(text: str) -> tuple[float, int]:
    vals = _floats(text)
    if len(vals) != 2 or vals[1] != int(vals[1]):
        raise argparse.ArgumentTypeError(f"expected T,J (J an integer), got {text!r}")
    return vals[0], int(vals[1])


def _add_source(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--id", help="catalog entry id")
    src.add_argument("--scenario", type=Path, help="scenario JSON file")
    p.add_argument("--variant", default="main", help="system variant of the entry (default: main)")
    p.add_argument("--seed", type=int, help="random seed for sampling and random selections")
    p.add_argument("overrides", nargs="*", metavar="section.key=value",
                   help="configuration overrides (sections: solver, check)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hybridinv", allow_abbrev=False,
                                     description="Simulate hybrid systems and check invariance conditions.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="{simulate,check,catalog,export}")

    p = sub.add_parser("simulate", allow_abbrev=False, help="simulate one solution, write CSV and termination JSON")
    _add_source(p)
    p.add_argument("--x0", type=_floats, help="initial state, comma separated")
    p.add_argument("--q0", type=float, help="leading discrete coordinate prepended to --x0")
    p.add_argument("--horizon", type=_horizon, help="T,J limits of hybrid time")
    p.add_argument("--priority", choices=("jump_first", "flow_first"))
    p.add_argument("--wc", type=_floats, help="constant flow disturbance (disturbed systems)")
    p.add_argument("--wd", type=_floats, help="constant jump disturbance (disturbed systems)")
    p.add_argument("--out", type=Path, help="arc CSV (default: standard output)")
    p.add_argument("--summary", type=Path, help="termination JSON (default: next to --out)")
    p.add_argument("--plot", type=Path, help="also render a PNG (needs matplotlib)")

    p = sub.add_parser("check", allow_abbrev=False, help="run a theorem's condition suite")
    _add_source(p)
    p.add_argument("--theorem", required=True, choices=THEOREMS)
    p.add_argument("--set", dest="set_name", help="candidate set name (not needed for ly)")
    p.add_argument("--mode", choices=("standard", "alt"), default="standard")
    p.add_argument("--out", type=Path, help="report JSON")
    p.add_argument("--text", type=Path, help="text table (always printed to standard output)")

    p = sub.add_parser("catalog", allow_abbrev=False, help="list catalog entries")
    p.add_argument("--json", action="store_true", help="machine-readable listing")
    p.add_argument("--out", type=Path)

    p = sub.add_parser("export", allow_abbrev=False, help="write a catalog entry as a scenario file")
    p.add_argument("--id", required=True)
    p.add_argument("--out", type=Path, help="scenario JSON (default: standard output)")
    return parser


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _load(args) -> scenario.Scenario:
    if args.id is not None:
        return scenario.from_entry(catalog.load_example(args.id))
    try:
        return scenario.load(args.scenario)
    except OSError as e:
        raise UsageError(f"cannot read {args.scenario}: {e.strerror}") from None


def _system(sc: scenario.Scenario, variant: str):
    if variant == "main":
        return sc.system
    if variant not in sc.variants:
        raise UsageError(f"no variant {variant!r}; available: {', '.join(['main', *sc.variants])}")
    return sc.variants[variant]


def _value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        pass
    if "," in text:
        return tuple(_value(v) for v in text.split(","))
    return text


def _overrides(items, sections: dict) -> dict:
    """``section.key=value`` strings to ``{section: {key: value}}``, validated against the dataclasses."""
    out = {name: {} for name in sections}
    for item in items:
        key, sep, raw = item.partition("=")
        section, dot, field = key.partition(".")
        if not sep or not dot:
            raise UsageError(f"override {item!r} is not of the form section.key=value")
        if section not in sections:
            raise UsageError(f"unknown override section {section!r}; use {', '.join(sections)}")
        names = {f.name for f in dataclasses.fields(sections[section])}
        if field not in names:
            raise UsageError(f"unknown {section} setting {field!r}; known: {', '.join(sorted(names))}")
        v = _value(raw)
        out[section][field] = tuple(v) if isinstance(v, list) else v
    return out


def _make(cls, **kw):
    try:
        return cls(**kw)
    except (TypeError, ValueError) as e:
        raise UsageError(f"invalid {cls.__name__}: {e}") from None


def _write(path: Path | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    sc = _load(args)
    H = _system(sc, args.variant)
    ov = _overrides(args.overrides, {"solver": SolverConfig})["solver"]
    kw = {**sc.solver, **sc.tolerances, **ov}
    if args.horizon is not None:
        kw["horizon"] = args.horizon
    if args.priority is not None:
        kw["priority"] = args.priority
    if args.seed is not None:
        kw["seed"] = args.seed
    cfg = _make(SolverConfig, **kw)

    x0 = args.x0 if args.x0 is not None else sc.x0
    if args.q0 is not None:
        # --q0 replaces the leading coordinate of the default state
        rest = args.x0 if args.x0 is not None else (sc.x0 or ())[1:]
        x0 = (args.q0, *rest)
    if x0 is None:
        raise UsageError("no initial state: pass --x0")
    if len(x0) != H.dim:
        raise UsageError(f"initial state has {len(x0)} entries, system dimension is {H.dim}")

    try:
        if isinstance(H, DisturbedHybridSystem):
            if args.wc is not None or args.wd is not None:
                wc = args.wc if args.wc is not None else (0.0,) * H.dc
                wd = args.wd if args.wd is not None else (0.0,) * H.dd
                policy = DisturbancePolicy.constant(wc, wd)
            else:
                policy = DisturbancePolicy.zero()
            arc = simulate_disturbed(H, x0, policy, cfg)
        else:
            arc = simulate(H, x0, cfg)
    except NoNontrivialSolutionError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1

    _write(args.out, arc.to_csv())
    summary = args.summary
    if summary is None and args.out is not None:
        summary = args.out.with_suffix(".json")
    if summary is not None:
        _write(summary, arc.to_json() + "\n")
    if args.plot is not None:
        from .plotting import plot_arc

        plot_arc(arc, args.plot, title=f"{sc.name or H.name}: {arc.termination}")
    if args.out is not None:
        print(f"{arc.termination} T={arc.T:.9g} J={arc.J}")
    return 0


def cmd_check(args) -> int:
    sc = _load(args)
    H = _system(sc, args.variant)
    ov = _overrides(args.overrides, {"check": CheckConfig})["check"]
    kw = {**sc.tolerances, **ov}
    if args.seed is not None:
        kw["seed"] = args.seed
    cfg = _make(CheckConfig, **kw)
    K = None
    if args.theorem != "ly":
        if args.set_name is None:
            raise UsageError("--set is required for this theorem")
        if args.set_name not in sc.candidate_sets:
            raise UsageError(f"no candidate set {args.set_name!r}; available: {', '.join(sc.candidate_sets)}")
        K = sc.candidate_sets[args.set_name]
    elif sc.lyapunov is None:
        raise UsageError("this scenario has no sublevel data (V, r, r_star)")
    window = cfg.window if cfg.window is not None else sc.window
    report = run_theorem(args.theorem, H, K, cfg, window=window, mode=args.mode, lyapunov=sc.lyapunov,
                         set_name=args.set_name or "M_r")
    text = report.text()
    sys.stdout.write(text)
    if args.text is not None:
        _write(args.text, text)
    if args.out is not None:
        _write(args.out, report.to_json() + "\n")
    return 0


def cmd_catalog(args) -> int:
    rows = [(i, catalog.load_example(i)) for i in catalog.list_ids()]
    if args.json:
        text = json.dumps([{"id": i, "provenance": e.provenance, "description": e.description,
                            "candidate_sets": list(e.candidate_sets), "variants": ["main", *e.variants]}
                           for i, e in rows], indent=2) + "\n"
    else:
        w = max(len(i) for i, _ in rows)
        text = "".join(f"{i:<{w}}  {e.provenance}\n" for i, e in rows)
    _write(args.out, text)
    return 0


def cmd_export(args) -> int:
    _write(args.out, scenario.dumps(scenario.from_entry(catalog.load_example(args.id))))
    return 0


VECTOR_OPTIONS = ("--x0", "--q0", "--wc", "--wd", "--horizon")


def _attach_vectors(argv):
    """``--x0 -5,-5`` to ``--x0=-5,-5``: argparse takes ``-5,-5`` for an option."""
    out, it = [], iter(argv)
    for a in it:
        if a in VECTOR_OPTIONS:
            nxt = next(it, None)
            out.append(a if nxt is None else f"{a}={nxt}")
        else:
            out.append(a)
    return out


COMMANDS = {"simulate": cmd_simulate, "check": cmd_check, "catalog": cmd_catalog, "export": cmd_export}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(_attach_vectors(sys.argv[1:] if argv is None else argv))
    try:
        return COMMANDS[args.command](args)
    except catalog.UnknownExampleError as e:
        parser.print_usage(sys.stderr)
        print(f"error: {e}", file=sys.stderr)
    except scenario.ScenarioError as e:
        print(f"error: {args.scenario}:{e.line}:{e.column}: {e.message}", file=sys.stderr)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"error: {e}", file=sys.stderr)
    return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
