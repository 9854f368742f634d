"""Command line: ``thermosmc {run,check,equilibrium,bound} SCENARIO``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .harness import AbortedRunError, ScenarioError, load_scenario, prepare, run_scenario, write_report
from .series import export_csv


def _cmd_run(args) -> int:
    s = load_scenario(args.scenario)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    try:
        result = run_scenario(s)
    except AbortedRunError as exc:
        print(f"run aborted: {exc}", file=sys.stderr)
        return 3
    csv_path, prof_path = export_csv(result.series, out / f"{s.name}.csv")
    report = write_report(result, out / f"{s.name}_report.txt")
    print(report.read_text(), end="")
    print(f"\nwrote {csv_path}" + (f", {prof_path}" if prof_path else "") + f", {report}")
    return 0 if result.certificate.passed else 1


def _cmd_check(args) -> int:
    prep = prepare(load_scenario(args.scenario))
    for line in prep.validation.lines() + prep.notes:
        print(line)
    return 0 if prep.validation.passed else 1


def _cmd_equilibrium(args) -> int:
    s = load_scenario(args.scenario)
    prep = prepare(s)
    prof = prep.profile
    if prof is None:
        print("normalized plant: the reference equilibrium is z = 0")
        return 0
    print(f"omega = {prof.omega:.6g} 1/m, L = {prof.length:.6g} m")
    print(f"C1 = {prof.c1:.10g}, C2 = {prof.c2:.10g}")
    print(f"u_e0 = {prof.u_e0:.10g}, u_e1 = {prof.u_e1:.10g}")
    print(f"{'zeta_m':>10} {'T_e_C':>12}")
    for z in np.linspace(0.0, prof.length, args.points):
        print(f"{z:10.5f} {float(prof(z)):12.6f}")
    return 0


def _cmd_bound(args) -> int:
    s = load_scenario(args.scenario)
    prep = prepare(s)
    if prep.ultimate is None:
        print("no ultimate bound: needs bidirectional mode with passing gain conditions")
        for line in prep.notes:
            print(line)
        return 1
    for line in prep.ultimate.lines():
        print(line)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="thermosmc", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="simulate, write CSV and report")
    r.add_argument("scenario")
    r.add_argument("-o", "--out", help="output directory (default: current)")
    r.set_defaults(func=_cmd_run)
    c = sub.add_parser("check", help="report the tuning conditions")
    c.add_argument("scenario")
    c.set_defaults(func=_cmd_check)
    e = sub.add_parser("equilibrium", help="print the reference profile")
    e.add_argument("scenario")
    e.add_argument("--points", type=int, default=11)
    e.set_defaults(func=_cmd_equilibrium)
    b = sub.add_parser("bound", help="print B with eta, rho and beta_min")
    b.add_argument("scenario")
    b.set_defaults(func=_cmd_bound)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ScenarioError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
