"""Command-line front end: run scenarios, list/describe built-ins, scan gradient norms.

Exit codes: 0 all checks passed, 2 at least one check failed, 1 malformed
input or configuration.  Reports land in --out as <scenario-id>.csv and
<scenario-id>.json; two runs of the same scenario produce bit-identical
files (seeded sampling, fixed reduction order, no timestamps).
"""

from __future__ import annotations

import os

# Thread cap must land in the environment before numpy initializes its BLAS.
_threads = os.environ.get("BERGMAN_LAB_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .domains import Annulus, Ball, Polydisc, domain_from_json
from .gradient import grad_logP_norm, representative_map
from .kernels import closed_form_kernel, laurent_kernel, numeric_kernel
from .maps import MapError
from .quadrature import build_rule
from .scenarios import (BUILTIN_SCENARIOS, ScenarioError, builtin_scenario, fmt_point,
                        list_builtin, run_scenario)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_CHECK_FAILED = 2


def _load_scenario(ref: str) -> dict:
    path = Path(ref)
    if path.exists():
        try:
            with open(path) as fh:
                scenario = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"{path}: invalid JSON at line {exc.lineno}, "
                                f"column {exc.colno}: {exc.msg}") from exc
        if not isinstance(scenario, dict):
            raise ScenarioError(f"{path}: scenario must be a JSON object")
        scenario.setdefault("id", path.stem)
        return scenario
    if ref in BUILTIN_SCENARIOS:
        return builtin_scenario(ref)
    raise ScenarioError(f"scenario {ref!r}: no such file and no such built-in "
                        f"(try 'bergman-lab list')")


def _cmd_run(args) -> int:
    scenario = _load_scenario(args.scenario)
    if args.strict:
        scenario.pop("tolerances", None)
    report = run_scenario(scenario, order=args.order, degree=args.degree)
    csv_path, json_path = report.write(args.out)
    status = "PASS" if report.passed else "FAIL"
    print(f"[{status}] {report.scenario_id}: {len(report.rows)} row(s) -> {csv_path}")
    for msg in report.failures:
        print(f"  check failed: {msg}")
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def _cmd_list(_args) -> int:
    for sid in list_builtin():
        print(sid)
    return EXIT_OK


def _cmd_describe(args) -> int:
    scenario = builtin_scenario(args.id)
    json.dump(scenario, sys.stdout, indent=2, sort_keys=True)
    print()
    return EXIT_OK


def _gradnorm_domain(args):
    if args.domain == "ball":
        return Ball(args.dim)
    if args.domain == "polydisc":
        return Polydisc(args.dim)
    if args.domain == "annulus":
        return Annulus(args.r)
    raise ScenarioError(f"unknown domain {args.domain!r}")


def _cmd_gradnorm(args) -> int:
    domain = _gradnorm_domain(args)
    if args.backend == "closed":
        kernel = closed_form_kernel(domain)
    elif args.backend == "laurent":
        kernel = laurent_kernel(domain, args.truncation)
    elif args.backend == "numeric":
        kernel = numeric_kernel(domain, build_rule(domain, args.order), args.degree)
    else:
        raise ScenarioError(f"unknown backend {args.backend!r}")

    rng = np.random.default_rng(args.seed)
    margin = 0.1 if not isinstance(domain, Annulus) else (1 - domain.r) / 8
    zs = domain.sample_interior(rng, args.count, margin=margin)
    xis = domain.sample_interior(rng, args.count, margin=margin)

    out = sys.stdout if args.out is None else open(args.out, "w", newline="")
    try:
        writer = csv.writer(out)
        writer.writerow(["domain", "z", "xi", "grad_norm", "rep_norm", "residual"])
        for z, xi in zip(zs, xis):
            g = grad_logP_norm(kernel, z, xi)
            rep = representative_map(kernel, z, xi).norm_sq
            writer.writerow([domain.kind, fmt_point(z), fmt_point(xi),
                             repr(float(g)), repr(float(rep)), repr(float(abs(g - rep)))])
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bergman-lab",
        description="Bergman kernel, metric, and Berezin-model verification scenarios.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario file or built-in id")
    p_run.add_argument("scenario", help="path to a scenario JSON file, or a built-in id")
    p_run.add_argument("--out", default="reports", help="output directory (default: reports)")
    p_run.add_argument("--order", type=int, default=None, help="override quadrature order")
    p_run.add_argument("--degree", type=int, default=None, help="override numeric-basis degree")
    p_run.add_argument("--strict", action="store_true",
                       help="ignore the scenario's tolerance overrides, use package defaults")
    p_run.set_defaults(fn=_cmd_run)

    p_list = sub.add_parser("list", help="list built-in scenario ids")
    p_list.set_defaults(fn=_cmd_list)

    p_desc = sub.add_parser("describe", help="print a built-in scenario as JSON")
    p_desc.add_argument("id")
    p_desc.set_defaults(fn=_cmd_describe)

    p_grad = sub.add_parser("gradnorm",
                            help="emit gradient-norm / representative-map CSV for random pairs")
    p_grad.add_argument("--domain", choices=["ball", "polydisc", "annulus"], default="ball")
    p_grad.add_argument("--dim", type=int, default=1)
    p_grad.add_argument("--r", type=float, default=0.5, help="annulus inner radius")
    p_grad.add_argument("--backend", choices=["closed", "laurent", "numeric"], default="closed")
    p_grad.add_argument("--degree", type=int, default=20)
    p_grad.add_argument("--truncation", type=int, default=15)
    p_grad.add_argument("--order", type=int, default=40)
    p_grad.add_argument("--count", type=int, default=20)
    p_grad.add_argument("--seed", type=int, default=99)
    p_grad.add_argument("--out", default=None, help="CSV path (default: stdout)")
    p_grad.set_defaults(fn=_cmd_gradnorm)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ScenarioError, MapError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
