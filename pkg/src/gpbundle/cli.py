"""Command line entry point: run, verify, bench, bounds."""
from __future__ import annotations

import argparse
import json
import os
import sys

from . import bounds as B
from .errors import ConfigurationError
from .harness import ExperimentConfig, bench_csv, run_bench, run_experiment

EXIT_FAILED = 1
EXIT_CONFIG = 2


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"malformed JSON in {path}: {exc}") from exc


def _dump(obj, path=None):
    text = json.dumps(obj, indent=2, sort_keys=True, default=lambda v: v.item() if hasattr(v, "item") else str(v))
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def cmd_run(args):
    cfg = ExperimentConfig.from_dict(_load_json(args.config))
    out = args.out or "."
    summary = run_experiment(cfg, out, seed=args.seed)
    print(json.dumps({k: summary[k] for k in ("method", "instance", "status", "iterations_total", "serious",
                                              "null_max_block", "phi_gap_final", "audit_violations")}))
    if summary["status"] == "failed" or summary["audit_violations"]:
        return EXIT_FAILED
    return 0


def cmd_verify(args):
    from .verify import run_suite

    try:
        entries = run_suite(args.suite, seed=args.seed or 0)
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from exc
    report = {"suite": args.suite, "passed": all(e["passed"] for e in entries), "checks": entries}
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        _dump(report, os.path.join(args.out, f"verify_{args.suite}.json"))
    _dump(report)
    return 0 if report["passed"] else EXIT_FAILED


def cmd_bench(args):
    matrix = _load_json(args.config) if args.config else None
    if matrix is not None and not isinstance(matrix, dict):
        raise ConfigurationError("bench config must be a JSON object")
    rows = run_bench(matrix, workers=args.workers)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        bench_csv(rows, os.path.join(args.out, "bench.csv"))
    sys.stdout.write(bench_csv(rows))
    return 0


def cmd_bounds(args):
    if args.config:
        d = _load_json(args.config)
        if not isinstance(d, dict):
            raise ConfigurationError("bounds config must be a JSON object")
        pairs = d.pop("pairs", None)
        tau = d.pop("tau", None)
        try:
            inp = B.TheoryInputs(**d)
        except TypeError as exc:
            raise ConfigurationError(str(exc)) from exc
        result = B.all_quantities(inp, pairs=pairs, tau=tau)
    else:
        result = B.regression_table()
    _dump(result, os.path.join(args.out, "bounds.json") if args.out else None)
    if args.out:
        _dump(result)
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="gpbundle", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run one configured experiment")
    r.add_argument("--config", required=True, help="experiment config JSON")
    r.set_defaults(func=cmd_run)
    v = sub.add_parser("verify", help="run invariant suites")
    v.add_argument("--suite", default="all", help="subproblem, model, recursion, bounds or all")
    v.set_defaults(func=cmd_verify)
    b = sub.add_parser("bench", help="run a methods x instances x lambda-policies matrix")
    b.add_argument("--config", help="bench matrix JSON (default: built-in matrix)")
    b.add_argument("--workers", type=int, default=None)
    b.set_defaults(func=cmd_bench)
    q = sub.add_parser("bounds", help="print theory quantities")
    q.add_argument("--config", help="JSON with TheoryInputs fields (+ optional pairs, tau)")
    q.set_defaults(func=cmd_bounds)
    for s in (r, v, b, q):
        s.add_argument("--out", help="output directory")
        s.add_argument("--seed", type=int, default=None)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
