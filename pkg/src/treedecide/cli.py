"""Command-line entry point: ``treedecide <command> --tree FILE --values LIST --sigma S``.

Every flag may instead come from a JSON ``--config`` file whose keys are the
flag names (``t_final`` or ``t-final``); flags given on the command line win.

Exit codes: 0 success, 1 validation or I/O error, 2 numerical failure,
3 audit failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .analysis import (
    ScenarioSpec,
    SweepSpec,
    audit_equivariance,
    list_equilibria,
    run_scenario,
    run_sweep,
    write_csv,
)
from .numerics import ConvergenceError, IntegrationError, IntegratorConfig
from .tree import TreeSpecError, canonical_form, enumerate_group, load_tree

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_AUDIT = 0, 1, 2, 3

log = logging.getLogger("treedecide")


class ConfigError(ValueError):
    pass


def _float_list(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(x) for x in text]
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _common(p: argparse.ArgumentParser, values_required: bool = True) -> None:
    p.add_argument("--config", type=Path, help="JSON file supplying any of the flags below")
    p.add_argument("--tree", type=Path, help="tree document (JSON)")
    p.add_argument("--values", type=_float_list, help="comma-separated option values" + ("" if values_required else " (optional)"))
    p.add_argument("--sigma", type=float, help="cross-inhibition strength (default 4)")
    p.add_argument("-v", "--verbose", action="store_true", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="treedecide", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="integrate one scenario and write the projected trajectory")
    _common(sim)
    sim.add_argument("--initial", help='stacked pairs "m1,m2,..." or a preset: deadlock, deadlock-perturbed')
    sim.add_argument("--seed", type=int)
    sim.add_argument("--perturbation", type=float)
    sim.add_argument("--method", choices=["rk4", "rk45"])
    sim.add_argument("--t-final", dest="t_final", type=float)
    sim.add_argument("--step", type=float)
    sim.add_argument("--rtol", type=float)
    sim.add_argument("--atol", type=float)
    sim.add_argument("--stride", type=float)
    sim.add_argument("--csv", type=Path, help="trajectory CSV path")
    sim.add_argument("--summary", type=Path, help="JSON summary path")

    sw = sub.add_parser("sweep", help="track equilibria over a grid of v or sigma")
    _common(sw, values_required=False)
    sw.add_argument("--parameter", choices=["v", "sigma"])
    sw.add_argument("--start", type=float)
    sw.add_argument("--stop", type=float)
    sw.add_argument("--points", type=int)
    sw.add_argument("--csv", type=Path)

    eq = sub.add_parser("equilibria", help="list reduced or Newton-refined full equilibria")
    _common(eq)
    eq.add_argument("--mode", choices=["reduced", "full"])
    eq.add_argument("--gain", type=float, help="value scaling K for full mode")
    eq.add_argument("--csv", type=Path)

    au = sub.add_parser("audit", help="check equivariance over the whole symmetry group")
    _common(au)
    au.add_argument("--trials", type=int)
    au.add_argument("--seed", type=int)
    au.add_argument("--cap", type=int)

    iso = sub.add_parser("isomorphisms", help="list the symmetry group of a tree")
    _common(iso, values_required=False)
    iso.add_argument("--cap", type=int)
    return parser


DEFAULTS = {
    "sigma": 4.0,
    "initial": "deadlock-perturbed",
    "seed": 0,
    "perturbation": 1e-2,
    "method": "rk45",
    "t_final": 100.0,
    "step": 1e-3,
    "rtol": 1e-8,
    "atol": 1e-10,
    "stride": 0.1,
    "parameter": "v",
    "start": 1.2,
    "stop": 3.0,
    "points": 200,
    "mode": "reduced",
    "gain": 1.0,
    "trials": 50,
    "cap": 20,
    "verbose": False,
}


def _line_of(text: str, key: str) -> int:
    for n, line in enumerate(text.splitlines(), start=1):
        if f'"{key}"' in line:
            return n
    return 0


def _merge_config(args: argparse.Namespace) -> argparse.Namespace:
    ns = vars(args)
    if ns.get("config"):
        path = ns["config"]
        text = path.read_text(encoding="utf-8")
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}:1: configuration must be a JSON object")
        for raw, value in doc.items():
            key = raw.replace("-", "_")
            where = f"{path}:{_line_of(text, raw)}"
            if key not in ns or key in ("command", "config"):
                raise ConfigError(f"{where}: unknown option {raw!r} for {args.command}")
            if ns[key] is not None:
                continue
            try:
                if key == "values":
                    value = _float_list(value)
                elif key in ("tree", "csv", "summary"):
                    value = Path(value) if Path(value).is_absolute() else path.parent / value
                elif key == "initial" and isinstance(value, list):
                    value = [float(x) for x in value]
                elif isinstance(DEFAULTS.get(key), float):
                    value = float(value)
                elif isinstance(DEFAULTS.get(key), int) and not isinstance(DEFAULTS.get(key), bool):
                    value = int(value)
            except (TypeError, ValueError, argparse.ArgumentTypeError) as exc:
                raise ConfigError(f"{where}: bad value for {raw!r}: {exc}") from None
            ns[key] = value
    for key, value in DEFAULTS.items():
        if key in ns and ns[key] is None:
            ns[key] = value
    return args


def _require(args, *names):
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        raise ConfigError("missing required option(s): " + ", ".join("--" + m.replace("_", "-") for m in missing))


def _print_table(header, rows, out) -> None:
    def cell(c):
        return f"{c:.6g}" if isinstance(c, (float, np.floating)) else str(c)

    out.write("\t".join(header) + "\n")
    for row in rows:
        out.write("\t".join(cell(c) for c in row) + "\n")


def _cmd_simulate(args, out) -> int:
    _require(args, "tree", "values")
    initial = args.initial
    if isinstance(initial, str) and initial not in ("deadlock", "deadlock-perturbed"):
        initial = _float_list(initial)
    cfg = IntegratorConfig(args.method, args.t_final, args.step, args.rtol, args.atol, args.stride)
    spec = ScenarioSpec(args.tree, args.values, args.sigma, initial, args.seed, args.perturbation, cfg, args.csv, args.summary)
    res = run_scenario(spec)
    out.write("final m_o: " + ", ".join(f"{c:.10g}" for c in res.final_projected) + "\n")
    if res.nearest is not None:
        out.write(f"nearest equilibrium ({res.nearest.stability.value}) at distance {res.distance:.3e}\n")
    return EXIT_OK


def _cmd_sweep(args, out) -> int:
    _require(args, "tree")
    if args.parameter == "v":
        fixed = args.sigma
    else:
        _require(args, "values")
        if len(set(args.values)) != 1:
            raise ConfigError("a sigma sweep needs equal option values")
        fixed = args.values[0]
    spec = SweepSpec(args.tree, args.parameter, args.start, args.stop, args.points, fixed, csv_path=args.csv)
    res = run_sweep(spec)
    for (lo, hi), crit in zip(res.brackets, res.critical):
        out.write(f"sign change of the leading eigenvalue in [{lo:.10g}, {hi:.10g}]; critical {args.parameter} = {crit:.12g}\n")
    if not res.brackets:
        out.write("no sign change of the leading eigenvalue on this grid\n")
    for bid, info in res.lost.items():
        out.write(f"branch {bid} lost at {args.parameter}={info['parameter']:.10g}: {info['reason']}\n")
    return EXIT_NUMERICAL if 0 in res.lost else EXIT_OK


def _cmd_equilibria(args, out) -> int:
    _require(args, "tree", "values")
    header, rows = list_equilibria(args.tree, args.values, args.sigma, args.mode, args.gain)
    _print_table(header, rows, out)
    if args.csv:
        write_csv(args.csv, header, rows)
    return EXIT_OK


def _cmd_audit(args, out) -> int:
    _require(args, "tree", "values")
    rep = audit_equivariance(args.tree, args.values, args.sigma, args.trials, args.seed, args.cap)
    out.write("\n".join(rep.lines()) + "\n")
    return EXIT_OK if rep.passed else EXIT_AUDIT


def _cmd_isomorphisms(args, out) -> int:
    _require(args, "tree")
    tree = load_tree(args.tree)
    out.write(f"canonical form: {canonical_form(tree)}\n")
    out.write("flips\toption order\tstate permutation\tautomorphism\n")
    for g in enumerate_group(tree, args.cap):
        flips = ",".join(str(i) for i in sorted(g.flip_set)) or "-"
        options = ",".join(tree.labels[k] for k in g.option_perm)
        state = ",".join(str(k) for k in g.state_perm)
        out.write(f"{flips}\t{options}\t{state}\t{'yes' if g.is_automorphism else 'no'}\n")
    return EXIT_OK


COMMANDS = {
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
    "equilibria": _cmd_equilibria,
    "audit": _cmd_audit,
    "isomorphisms": _cmd_isomorphisms,
}


def main(argv: list[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_VALIDATION
    try:
        args = _merge_config(args)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
        return COMMANDS[args.command](args, out)
    except (IntegrationError, ConvergenceError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (TreeSpecError, ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
