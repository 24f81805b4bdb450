"""Experiment configuration, single runs with summaries, and the bench matrix."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields

from . import bounds as B
from .adaptive import audit_1c_apb, audit_a_cs, audit_cs_cs, run_1c_apb, run_a_cs, run_cs_cs
from .engine import GpbConfig, audit_run, model_check_summary, run_gpb, theory_inputs
from .errors import ConfigurationError
from .problem import parse_instance_spec

METHODS = ("gpb-e1", "gpb-e2", "gpb-e3", "1c-apb", "cs-cs", "a-cs")
LAMBDA_POLICIES = ("range-low", "range-high", "range-geomean")
TAU_POLICIES = ("theorem", "bar")


@dataclass
class ExperimentConfig:
    """One run.  ``lam`` is a number or a lambda policy name; ``tau`` is a
    number or a tau policy name (bundle methods only)."""
    instance: object
    method: str = "gpb-e3"
    lam: object = "range-geomean"
    eps_bar: float = 1e-2
    tau: object = "theorem"
    stop_rule: str = "known_gap"
    max_iterations: int = 2000000
    audit: bool = True
    audit_models: bool = False
    repetitions: int = 1
    seed: int = 0
    C: float = 1.0
    lambda_range: str = "theorem31"
    e3_reset: str = "active"
    max_cuts: int | None = None
    outputs: dict = field(default_factory=lambda: {"trace_csv": "trace.csv", "trace_jsonl": "trace.jsonl",
                                                   "summary": "summary.json"})

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise ConfigurationError("config must be a JSON object")
        d = dict(d)
        if "lambda" in d:
            d["lam"] = d.pop("lambda")
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ConfigurationError(f"unknown config keys: {', '.join(sorted(extra))}")
        if "instance" not in d:
            raise ConfigurationError("config needs an 'instance'")
        cfg = cls(**d)
        cfg.check()
        return cfg

    def check(self):
        if self.method not in METHODS:
            raise ConfigurationError(f"unknown method {self.method!r}; choose from {', '.join(METHODS)}")
        if isinstance(self.lam, str):
            if self.lam not in LAMBDA_POLICIES:
                raise ConfigurationError(f"unknown lambda policy {self.lam!r}")
        elif not isinstance(self.lam, (int, float)) or not self.lam > 0:
            raise ConfigurationError("lambda must be a positive number or a policy name")
        if isinstance(self.tau, str):
            if self.tau not in TAU_POLICIES:
                raise ConfigurationError(f"unknown tau policy {self.tau!r}")
        elif not isinstance(self.tau, (int, float)) or not 0.0 <= self.tau < 1.0:
            raise ConfigurationError("tau must be a number in [0, 1) or a policy name")
        if not isinstance(self.eps_bar, (int, float)) or not self.eps_bar > 0:
            raise ConfigurationError("eps_bar must be positive")
        if int(self.repetitions) < 1:
            raise ConfigurationError("repetitions must be >= 1")


@dataclass
class Resolved:
    instance: object
    method: str
    lam: float
    tau: float
    eps_bar: float
    theory: object = None
    T: float | None = None


def resolve(cfg, instance=None):
    """Turn policies into numbers; lambda policies need instance parameters."""
    inst = parse_instance_spec(cfg.instance) if instance is None else instance
    eps = float(cfg.eps_bar)
    have_params = bool(inst.pair_candidates) and inst.reference is not None
    if isinstance(cfg.lam, str):
        if not have_params:
            raise ConfigurationError("lambda policies need instance parameters and a reference")
        inp, T = theory_inputs(inst, eps, 1.0, cfg.C)
        mode = "cs" if cfg.method == "cs-cs" else cfg.lambda_range
        rng = B.lambda_range(inp, mode, T=T, M_f0=inst.M_f0)
        if rng.empty:
            raise ConfigurationError(f"empty lambda range [{rng.lo}, {rng.hi}]")
        lam = {"range-low": rng.lo, "range-high": rng.hi, "range-geomean": rng.geomean}[cfg.lam]
        if not math.isfinite(lam):
            raise ConfigurationError(f"lambda policy {cfg.lam} is not finite here")
    else:
        lam = float(cfg.lam)
    inp, T = (theory_inputs(inst, eps, lam, cfg.C) if have_params else (None, None))
    if cfg.method in ("1c-apb", "cs-cs", "a-cs"):
        tau = 0.0
    elif isinstance(cfg.tau, str):
        if inp is None:
            raise ConfigurationError("tau policies need instance parameters")
        tau = B.theorem_tau(inp) if cfg.tau == "theorem" else B.bar_tau(lam, inp.mu, eps, T)
    else:
        tau = float(cfg.tau)
    return Resolved(inst, cfg.method, lam, tau, eps, inp, T)


def execute(cfg, res, seed=None):
    """Run the method; returns (record, audit_json, adaptive_counters_or_None)."""
    inst, eps, lam = res.instance, res.eps_bar, res.lam
    counters = None
    audit = {}
    if res.method.startswith("gpb"):
        gc = GpbConfig(lam=lam, eps_bar=eps, tau=res.tau, scheme=res.method[-2:].upper(),
                       max_iterations=cfg.max_iterations, stop_rule=cfg.stop_rule, e3_reset=cfg.e3_reset,
                       max_cuts=cfg.max_cuts, audit_models=cfg.audit_models,
                       seed=cfg.seed if seed is None else seed)
        rec = run_gpb(inst, gc)
        if cfg.audit and rec.n_rows:
            audit = audit_run(rec, inst).to_json()
        if cfg.audit_models:
            audit["model_condition"] = model_check_summary(rec)
    elif res.method == "1c-apb":
        rec, counters = run_1c_apb(inst, lam=lam, eps_bar=eps, stop_rule=cfg.stop_rule,
                                   max_iterations=cfg.max_iterations)
        if cfg.audit:
            audit = {**audit_run(rec, inst).to_json(), **audit_1c_apb(rec, inst).to_json()}
    elif res.method == "cs-cs":
        rec = run_cs_cs(inst, lam=lam, eps_bar=eps, stop_rule=cfg.stop_rule, max_iterations=cfg.max_iterations)
        if cfg.audit:
            audit = audit_cs_cs(rec, inst).to_json()
    else:
        rec, counters = run_a_cs(inst, lambda0=lam, eps_bar=eps, stop_rule=cfg.stop_rule,
                                 max_iterations=cfg.max_iterations)
        if cfg.audit:
            audit = audit_a_cs(rec, inst, lam).to_json()
    return rec, audit, counters


def bound_values(res, rec):
    """Theory values that apply to the run's method; empty without parameters."""
    inp, T = res.theory, res.T
    if inp is None:
        return {}
    out = {"serious_bound": B.serious_bound(inp), "asymptotic_bound": B.asymptotic_bound(inp, T)}
    m = res.method
    if m.startswith("gpb"):
        out["total_bound"] = B.total_bound(inp, "generic_tau", tau=res.tau)
        out["null_block_bound"] = B.null_block_bound(res.tau, B.bar_t(inp), inp.eps_bar)
        out["bar_tau"] = B.bar_tau(inp.lam, inp.mu, inp.eps_bar, T)
    elif m == "1c-apb":
        out["total_bound"] = B.total_bound(inp, "adaptive", T=T)
        ln, l2 = B.update_count_bounds(inp.lam, inp.mu, T, inp.eps_bar, "tau_updates")
        out["tau_updates_ln"], out["tau_updates_log2"] = ln, l2
    elif m == "cs-cs":
        out["total_bound"] = B.cs_cs_bound(inp)
        out["max_lambda"] = B.cs_cs_max_lambda(inp.M_f, inp.L_f, inp.eps_bar)
    else:
        ln, l2 = B.update_count_bounds(inp.lam, 0.0, T, inp.eps_bar, "lambda_halvings")
        out["lambda_halvings_ln"], out["lambda_halvings_log2"] = ln, l2
    return out


def theory_checked(res):
    """True when the run's own parameters put it under the total bound."""
    inp = res.theory
    if inp is None:
        return False
    if res.method.startswith("gpb"):
        tb = B.bar_tau(inp.lam, inp.mu, inp.eps_bar, res.T)
        rng = B.lambda_range(inp, "theorem31")
        return res.tau >= tb and rng.lo <= inp.lam <= rng.hi
    if res.method == "cs-cs":
        return inp.lam <= B.cs_cs_max_lambda(inp.M_f, inp.L_f, inp.eps_bar) * (1 + 1e-12)
    return res.method == "1c-apb"


def summarize(res, rec, audit, counters):
    tot = rec.totals()
    bv = bound_values(res, rec)
    ratios = {}
    if "total_bound" in bv and bv["total_bound"] > 0:
        ratios["total"] = tot["iterations_total"] / bv["total_bound"]
    if bv.get("serious_bound"):
        ratios["serious"] = tot["serious"] / bv["serious_bound"]
    if bv.get("null_block_bound"):
        ratios["null_max_block"] = tot["null_max_block"] / bv["null_block_bound"]
    if counters is not None:
        if "tau_updates_log2" in bv and bv["tau_updates_log2"] > 0:
            ratios["tau_updates"] = counters.tau_updates / bv["tau_updates_log2"]
        if "lambda_halvings_log2" in bv and bv["lambda_halvings_log2"] > 0:
            ratios["lambda_halvings"] = counters.lambda_halvings / bv["lambda_halvings_log2"]
    violations = sum(c.get("violations", 0) for c in audit.values() if isinstance(c, dict))
    return {
        "method": res.method, "instance": res.instance.name, "status": rec.status, "message": rec.message,
        "lambda": res.lam, "tau": res.tau, "eps_bar": res.eps_bar,
        "iterations_total": tot["iterations_total"], "serious": tot["serious"],
        "null_max_block": tot["null_max_block"], "phi_gap_final": rec.phi_gap_final,
        "counters": rec.counters, "bound_values": bv, "bound_ratios": ratios,
        "theory_checked": theory_checked(res), "audit": audit, "audit_violations": violations,
    }


def run_experiment(cfg, out_dir=None, seed=None):
    """Run one config; writes trace and summary files when ``out_dir`` is given.

    Returns the summary dict of the last repetition.
    """
    res = resolve(cfg)
    summary = None
    reps = int(cfg.repetitions)
    for r in range(reps):
        s = (cfg.seed if seed is None else seed) + r
        rec, audit, counters = execute(cfg, res, seed=s)
        summary = summarize(res, rec, audit, counters)
        summary["seed"] = s
        if out_dir is not None:
            d = out_dir if reps == 1 else os.path.join(out_dir, f"rep{r}")
            os.makedirs(d, exist_ok=True)
            outs = cfg.outputs or {}
            if outs.get("trace_csv"):
                rec.to_csv(os.path.join(d, outs["trace_csv"]))
            if outs.get("trace_jsonl"):
                rec.to_jsonl(os.path.join(d, outs["trace_jsonl"]))
            with open(os.path.join(d, outs.get("summary") or "summary.json"), "w") as fh:
                json.dump(summary, fh, indent=2, sort_keys=True, allow_nan=False, default=_json_default)
                fh.write("\n")
    return summary


def _json_default(v):
    if hasattr(v, "item"):
        return v.item()
    raise TypeError(f"cannot serialize {type(v).__name__}")


# --------------------------------------------------------------------------
# Bench
# --------------------------------------------------------------------------

BENCH_COLUMNS = ("method", "instance", "lambda_policy", "lambda", "tau", "status", "iterations", "serious",
                 "null", "oracle_calls", "total_bound", "bound_ratio", "theory_checked", "wall_time", "error")

DEFAULT_MATRIX = {
    "methods": list(METHODS),
    "instances": ["abs1d", "maxaffine,2,0", "lasso_like,5,0"],
    "lambda_policies": ["range-geomean"],
    "eps_bar": 1e-2,
    "tau": "theorem",
}


def bench_cells(matrix):
    base = {k: v for k, v in matrix.items() if k not in ("methods", "instances", "lambda_policies", "workers")}
    cells = []
    for m in matrix.get("methods", []):
        for inst in matrix.get("instances", []):
            for pol in matrix.get("lambda_policies", []):
                key = (m, inst if isinstance(inst, str) else json.dumps(inst, sort_keys=True), str(pol))
                cells.append((key, dict(base, method=m, instance=inst, lam=pol, audit=False)))
    cells.sort(key=lambda c: c[0])
    return cells


def run_cell(cell):
    key, d = cell
    row = dict.fromkeys(BENCH_COLUMNS, "")
    row.update(method=key[0], instance=key[1], lambda_policy=key[2])
    t0 = time.perf_counter()
    try:
        cfg = ExperimentConfig.from_dict(d)
        res = resolve(cfg)
        rec, _, _ = execute(cfg, res)
        tot = rec.totals()
        bv = bound_values(res, rec)
        tb = bv.get("total_bound")
        row.update({"lambda": repr(res.lam), "tau": repr(res.tau), "status": rec.status,
                    "iterations": tot["iterations_total"], "serious": tot["serious"], "null": tot["null"],
                    "oracle_calls": rec.counters.get("oracle_calls", ""),
                    "total_bound": "" if tb is None else repr(float(tb)),
                    "bound_ratio": "" if not tb else repr(tot["iterations_total"] / tb),
                    "theory_checked": int(theory_checked(res))})
    except Exception as exc:  # per-cell failures are recorded, the bench goes on
        row["status"] = "error"
        row["error"] = f"{type(exc).__name__}: {exc}"
    row["wall_time"] = f"{time.perf_counter() - t0:.4f}"
    return row


def run_bench(matrix=None, workers=None):
    """Run every cell of the matrix; rows come back sorted by cell key."""
    matrix = DEFAULT_MATRIX if matrix is None else matrix
    cells = bench_cells(matrix)
    if not cells:
        return []
    workers = workers or matrix.get("workers") or min(len(cells), os.cpu_count() or 1)
    if workers <= 1:
        rows = [run_cell(c) for c in cells]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(run_cell, cells))
    rows.sort(key=lambda r: (r["method"], r["instance"], r["lambda_policy"]))
    return rows


def bench_csv(rows, path=None):
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=BENCH_COLUMNS, lineterminator="\r\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text
