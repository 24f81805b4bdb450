"""Invariant suites behind ``gpbundle verify``.

Each check returns a dict {suite, name, passed, worst_slack, detail}.
Slack is "bound minus measured" so negative values are violations.
"""
from __future__ import annotations

import math
import time

import numpy as np

from . import bounds as B
from .adaptive import audit_1c_apb, audit_a_cs, audit_cs_cs, run_1c_apb, run_a_cs, run_cs_cs
from .engine import SCHEMES, GpbConfig, audit_run, model_check_summary, run_gpb, theory_inputs
from .model import MultiCut
from .problem import Cut, catalog, h_ball, h_box, h_l1, h_quadratic, h_sum, h_zero, parse_instance_spec
from .subproblem import BoxTooSmall, brute_force_oracle, solve_model

SUITES = ("subproblem", "model", "recursion", "bounds")


def _entry(suite, name, passed, worst_slack=None, **detail):
    ws = None if worst_slack is None or not math.isfinite(worst_slack) else float(worst_slack)
    return {"suite": suite, "name": name, "passed": bool(passed), "worst_slack": ws, "detail": detail}


def random_h(rng, n, k):
    """The k-th simple function kind (cycled) in dimension n."""
    kind = k % 6
    if kind == 0:
        return h_zero()
    if kind == 1:
        return h_l1(float(rng.uniform(0.1, 1.0)))
    if kind == 2:
        return h_quadratic(rng.uniform(-1, 1, n), float(rng.uniform(0.2, 2.0)))
    if kind == 3:
        lo = -rng.uniform(0.2, 1.0, n)
        return h_box(lo, lo + rng.uniform(0.3, 2.0, n))
    if kind == 4:
        return h_ball(rng.uniform(-0.5, 0.5, n), float(rng.uniform(0.3, 1.0)))
    return h_sum(h_quadratic(rng.uniform(-1, 1, n), float(rng.uniform(0.2, 1.0))), h_l1(float(rng.uniform(0.1, 0.5))))


def random_multicut(rng, n, max_cuts, k):
    m = int(rng.integers(2, max_cuts + 1))
    h = random_h(rng, n, k)
    cuts = tuple(Cut(rng.uniform(-2, 2, n), float(rng.normal()), 2.0 * rng.normal(size=n)) for _ in range(m))
    return MultiCut(cuts, h)


def oracle_equivalence(cases=50, seed=0, argmin_tol=1e-4, value_tol=1e-6):
    """Multi-cut solver against the grid oracle on random 1-D/2-D instances."""
    t0 = time.perf_counter()
    worst_x = worst_v = 0.0
    failures = []
    for k in range(cases):
        rng = np.random.default_rng([seed, k])
        n = 1 + k % 2
        model = random_multicut(rng, n, 8, k)
        xc = model.h.project(rng.uniform(-1, 1, n))
        lam = float(rng.uniform(0.1, 2.0))
        sol = solve_model(model, xc, lam)
        half = 10.0
        while True:
            try:
                xb, vb = brute_force_oracle(model, xc, lam, (-half, half))
                break
            except BoxTooSmall:
                half *= 4.0
        ex, ev = float(np.linalg.norm(sol.x - xb)), abs(sol.value - vb)
        worst_x, worst_v = max(worst_x, ex), max(worst_v, ev)
        if ex > argmin_tol or ev > value_tol:
            failures.append(k)
    elapsed = time.perf_counter() - t0
    slack = min(argmin_tol - worst_x, value_tol - worst_v)
    return _entry("subproblem", "oracle_equivalence", not failures and elapsed < 5.0, slack, cases=cases,
                  passed_cases=cases - len(failures), worst_argmin_error=worst_x, worst_value_error=worst_v,
                  seconds=elapsed)


def prox_distance(cases=100, seed=1, tol=1e-8):
    """|x+ - x_c| <= (lam/lam~) |x~+ - x_c| for lam~ < lam."""
    worst = math.inf
    bad = []
    for k in range(cases):
        rng = np.random.default_rng([seed, k])
        n = int(rng.integers(1, 6))
        model = random_multicut(rng, n, 8, k)
        xc = model.h.project(rng.uniform(-1, 1, n))
        lam = float(rng.uniform(0.1, 3.0))
        lam_t = lam * float(rng.uniform(0.05, 0.99))
        a = solve_model(model, xc, lam)
        b = solve_model(model, xc, lam_t)
        slack = (lam / lam_t) * float(np.linalg.norm(b.x - xc)) + tol - float(np.linalg.norm(a.x - xc))
        worst = min(worst, slack)
        if slack < 0:
            bad.append(k)
    return _entry("subproblem", "prox_distance", not bad, worst, cases=cases, violations=len(bad))


def suite_subproblem(seed=0):
    return [oracle_equivalence(seed=seed), prox_distance(seed=seed + 1)]


def _lam_policies(inst, eps):
    inp, _ = theory_inputs(inst, eps, 1.0)
    rng = B.lambda_range(inp)
    return {"range-low": rng.lo, "range-geomean": rng.geomean, "range-high": rng.hi}


def suite_model(eps=1e-2, points=20, seed=0):
    """Model-condition audit on full catalog runs of every scheme."""
    out = []
    for inst in catalog():
        lam = _lam_policies(inst, eps)["range-geomean"]
        inp, _ = theory_inputs(inst, eps, lam)
        tau = B.theorem_tau(inp)
        for scheme in SCHEMES:
            rec = run_gpb(inst, GpbConfig(lam=lam, eps_bar=eps, tau=tau, scheme=scheme, audit_models=True,
                                          audit_points=points, seed=seed))
            mc = model_check_summary(rec)
            out.append(_entry("model", f"model_condition/{inst.name}/gpb-{scheme.lower()}",
                              mc["violations"] == 0 and rec.ok, mc["worst_slack"], status=rec.status,
                              null_steps_checked=mc["null_steps_checked"], violations=mc["violations"]))
    return out


def _merge(entries, suite, name, reports):
    """Fold several CheckResults of the same name into one entry."""
    checked = sum(r.checked for r in reports)
    viol = sum(len(r.violations) for r in reports)
    worst = min((r.worst_slack for r in reports if r.checked), default=math.inf)
    entries.append(_entry(suite, name, viol == 0, worst, checked=checked, violations=viol))


def gpb_catalog_runs(eps_values=(1e-1, 1e-2), policies=("range-low", "range-geomean", "range-high")):
    """Yield (instance, eps, policy, scheme, lam, tau, record, seconds) for the theorem-tau sweep.

    Each run may use up to its total bound in iterations.
    """
    for inst in catalog():
        for eps in eps_values:
            lams = _lam_policies(inst, eps)
            for pol in policies:
                lam = lams[pol]
                inp, _ = theory_inputs(inst, eps, lam)
                tau = B.theorem_tau(inp)
                cap = int(min(math.floor(B.total_bound(inp, "generic_tau", tau=tau)), 10 ** 8))
                for scheme in SCHEMES:
                    t0 = time.perf_counter()
                    rec = run_gpb(inst, GpbConfig(lam=lam, eps_bar=eps, tau=tau, scheme=scheme, max_iterations=cap))
                    yield inst, eps, pol, scheme, lam, tau, rec, time.perf_counter() - t0


def suite_recursion():
    out = []
    groups = {k: [] for k in ("null_recursion", "serious_sat", "serious_dist", "first_null_gap",
                              "center_constant", "t_nonneg")}
    total_worst = math.inf
    total_bad = []
    slow = []
    n_total = 0
    for inst, eps, pol, scheme, lam, tau, rec, secs in gpb_catalog_runs():
        rep = audit_run(rec, inst)
        for k in groups:
            groups[k].append(rep.checks[k])
        if inst.name.startswith(("abs1d", "maxaffine")):
            n_total += 1
            inp, _ = theory_inputs(inst, eps, lam)
            tb = B.total_bound(inp, "generic_tau", tau=tau)
            total_worst = min(total_worst, tb - rec.iterations)
            if rec.status != "converged" or rec.iterations > tb:
                total_bad.append((inst.name, eps, pol, scheme))
            if secs >= 2.0:
                slow.append((inst.name, eps, pol, scheme, secs))
    for k, reps in groups.items():
        _merge(out, "recursion", k, reps)
    out.append(_entry("recursion", "total_iterations", not total_bad and not slow, total_worst, runs=n_total,
                      over_bound=total_bad, slow_runs=slow))
    out.extend(apb_checks())
    out.extend(acs_checks())
    out.extend(cscs_checks())
    return out


def apb_checks(eps_values=(1e-1, 1e-2)):
    names = ("tau_key", "tau_nondecreasing", "tau_cap", "tau_update_count", "resolvent_calls")
    groups = {k: [] for k in names}
    failed = []
    for inst in catalog():
        for eps in eps_values:
            for lam in _lam_policies(inst, eps).values():
                rec, _ = run_1c_apb(inst, lam=lam, eps_bar=eps)
                if rec.status != "converged":
                    failed.append((inst.name, eps, lam, rec.status))
                rep = audit_1c_apb(rec, inst)
                for k in names:
                    groups[k].append(rep.checks[k])
    out = []
    for k, reps in groups.items():
        _merge(out, "recursion", f"1c-apb/{k}", reps)
    out.append(_entry("recursion", "1c-apb/converged", not failed, None, failures=failed))
    return out


def acs_checks(eps_values=(1e-1, 1e-2), lambda0s=(1e-3, 1.0, 1e6)):
    names = ("accepted_step", "lambda_nonincreasing", "lambda_floor", "halving_count")
    groups = {k: [] for k in names}
    failed = []
    for spec in ("abs1d,1,0", "hybrid_norm,2,0"):
        inst = parse_instance_spec(spec)
        for eps in eps_values:
            for l0 in lambda0s:
                rec, _ = run_a_cs(inst, lambda0=l0, eps_bar=eps)
                if rec.status != "converged":
                    failed.append((inst.name, eps, l0, rec.status))
                rep = audit_a_cs(rec, inst, l0)
                for k in names:
                    groups[k].append(rep.checks[k])
    out = []
    for k, reps in groups.items():
        _merge(out, "recursion", f"a-cs/{k}", reps)
    out.append(_entry("recursion", "a-cs/converged", not failed, None, failures=failed))
    return out


def cscs_checks(eps_values=(1e-1, 1e-2)):
    worst = math.inf
    bad = []
    steps = []
    for spec in ("abs1d,1,0", "strongly_convex_pwl,2,0"):
        inst = parse_instance_spec(spec)
        for eps in eps_values:
            _, (M, L) = B.t_eps(inst.pair_candidates, eps)
            lam = B.cs_cs_max_lambda(M, L, eps)
            inp, _ = theory_inputs(inst, eps, lam)
            bound = B.cs_cs_bound(inp)
            rec = run_cs_cs(inst, lam=lam, eps_bar=eps, max_iterations=bound)
            worst = min(worst, bound - rec.iterations)
            if rec.status != "converged":
                bad.append((inst.name, eps, rec.iterations, bound))
            steps.append(audit_cs_cs(rec, inst).checks["cs_step"])
    out = [_entry("recursion", "cs-cs/iteration_bound", not bad, worst, failures=bad)]
    _merge(out, "recursion", "cs-cs/step_inequality", steps)
    return out


def suite_bounds():
    diffs = B.compare_to_pinned()
    out = [_entry("bounds", "pinned_regression", not diffs, None, mismatches=[list(map(str, d)) for d in diffs[:10]])]
    tb = B.bar_tau(1.0, 0.0, 1.0, 1.0)
    out.append(_entry("bounds", "bar_tau_anchor", tb == 8.0 / 9.0, None, value=tb))
    bt = B.bar_t(B.TheoryInputs(M_f=1.0, L_f=0.0, mu=0.0, eps_bar=1.0, lam=1.0, d0=1.0))
    out.append(_entry("bounds", "bar_t_anchor", bt == 33.0, None, value=bt))
    return out


def run_suite(name, seed=0):
    if name == "subproblem":
        return suite_subproblem(seed)
    if name == "model":
        return suite_model(seed=seed)
    if name == "recursion":
        return suite_recursion()
    if name == "bounds":
        return suite_bounds()
    if name == "all":
        return [e for s in SUITES for e in run_suite(s, seed)]
    raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES + ('all',))}")
