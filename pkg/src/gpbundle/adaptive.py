"""Composite subgradient baselines and the adaptive one-cut bundle method."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import bounds as B
from ._backend import kernels
from .engine import (
    STOP_RULES, AuditReport, CheckResult, _check_start, one_cut_columns, theory_inputs,
)
from .errors import ConfigurationError
from .trace import RunRecord, TraceBuilder

MAX_UPDATES = 60


@dataclass
class AdaptiveCounters:
    tau_updates: int = 0
    lambda_halvings: int = 0
    resolvent_calls: int = 0

    def to_json(self):
        return asdict(self)


def _setup(instance, x0, lam, eps_bar, stop_rule, phi_star):
    if not (math.isfinite(lam) and lam > 0):
        raise ConfigurationError(f"lambda must be positive, got {lam}")
    if not (math.isfinite(eps_bar) and eps_bar > 0):
        raise ConfigurationError(f"eps_bar must be positive, got {eps_bar}")
    if stop_rule not in STOP_RULES:
        raise ConfigurationError(f"unknown stop rule {stop_rule!r}")
    x0 = _check_start(instance, x0)
    if phi_star is None and instance.reference is not None:
        phi_star = instance.reference.phi_star
    if stop_rule == "known_gap":
        if phi_star is None:
            raise ConfigurationError("known-gap stopping needs phi_star or a reference solution")
        target = phi_star + eps_bar
    else:
        target = -math.inf
    return x0, phi_star, target


def _cs_loop(instance, x0, lam0, eps_bar, target, max_iterations, adaptive):
    """Shared loop of CS-CS (fixed lambda) and A-CS (halving lambda)."""
    f, h = instance.f, instance.h
    hp = h.packed(instance.n)
    half = 0.5 * eps_bar
    lam = float(lam0)
    counters = AdaptiveCounters()
    oracle_calls = 1
    fx, g = f(x0)
    phi = fx + h(x0)
    tr = TraceBuilder()
    tr.append(x0, 0, 0, phi, 0.0, math.nan, phi, 0, 0.0, 0, lam)
    best, best_phi = 0, phi
    status, message = ("converged" if best_phi <= target else "max_iter"), ""
    j = 0
    x = x0
    while status != "converged" and j < max_iterations:
        c_int = fx - float(g @ x)
        while True:
            u, val = kernels.one_cut(g, c_int, x, lam, hp)
            counters.resolvent_calls += 1
            fu, gu = f(u)
            oracle_calls += 1
            d = u - x
            q = float(d @ d) / (2.0 * lam)
            lin_gap = fu - (float(g @ u) + c_int)
            if adaptive and lin_gap - q > half:
                counters.lambda_halvings += 1
                if counters.lambda_halvings > MAX_UPDATES:
                    status, message = "failed", f"more than {MAX_UPDATES} stepsize halvings"
                    break
                lam *= 0.5
                continue
            break
        if status == "failed":
            break
        j += 1
        phi = fu + h(u)
        if phi < best_phi:
            best, best_phi = j, phi
        tr.append(u, best, j - 1, val, lin_gap, math.nan, phi, 0, lin_gap - q, 1, lam)
        x, fx, g = u, fu, gu
        if best_phi <= target:
            status = "converged"
    return tr.build(), status, message, counters, oracle_calls


def run_cs_cs(instance, x0=None, lam=1.0, eps_bar=1e-2, stop_rule="known_gap", max_iterations=1000000,
              phi_star=None):
    """Constant-stepsize composite subgradient method.

    Row j stores x_j, the best point so far as y_j, the model minimum m_j and
    t_j = f(x_j) - l_f(x_j; x_{j-1}).  ``residual`` holds t_j minus the
    stabilizer term.
    """
    x0, phi_star, target = _setup(instance, x0, lam, eps_bar, stop_rule, phi_star)
    cols, status, message, counters, calls = _cs_loop(instance, x0, lam, eps_bar, target, max_iterations, False)
    rec = RunRecord("cs-cs", cols, status=status, message=message, eps_bar=eps_bar, lam=lam, phi_star=phi_star,
                    serious=np.ones(len(cols["t"]), dtype=bool))
    rec.counters = {"oracle_calls": calls, "prox_calls": counters.resolvent_calls, **counters.to_json()}
    return rec


def run_a_cs(instance, x0=None, lambda0=1.0, eps_bar=1e-2, stop_rule="known_gap", max_iterations=1000000,
             phi_star=None):
    """Composite subgradient method that halves lambda until the step test passes.

    Returns (RunRecord, AdaptiveCounters); the ``lam`` column holds lambda_j.
    """
    x0, phi_star, target = _setup(instance, x0, lambda0, eps_bar, stop_rule, phi_star)
    cols, status, message, counters, calls = _cs_loop(instance, x0, lambda0, eps_bar, target, max_iterations,
                                                      True)
    rec = RunRecord("a-cs", cols, status=status, message=message, eps_bar=eps_bar, lam=lambda0,
                    phi_star=phi_star, serious=np.ones(len(cols["t"]), dtype=bool))
    rec.counters = {"oracle_calls": calls, "prox_calls": counters.resolvent_calls, **counters.to_json()}
    return rec, counters


def run_1c_apb(instance, x0=None, lam=1.0, eps_bar=1e-2, stop_rule="known_gap", max_iterations=2000000,
               phi_star=None, tau0=0.0):
    """Adaptive one-cut bundle method.

    tau starts at ``tau0`` and is replaced by (1 + tau)/2 whenever a null
    step fails t+ - eps/4 <= tau (t - eps/4); the step is then redone from
    the saved state.  Returns (RunRecord, AdaptiveCounters).
    """
    x0, phi_star, target = _setup(instance, x0, lam, eps_bar, stop_rule, phi_star)
    if not 0.0 <= tau0 < 1.0:
        raise ConfigurationError(f"tau0 must lie in [0, 1), got {tau0}")
    cols, status, calls, proxes, updates = one_cut_columns(
        instance, x0, lam, eps_bar, tau0, max_iterations, target, adaptive=1, max_updates=MAX_UPDATES)
    counters = AdaptiveCounters(tau_updates=updates, resolvent_calls=proxes)
    rec = RunRecord("1c-apb", cols, eps_bar=eps_bar, lam=lam, tau=tau0, phi_star=phi_star)
    rec.status = {0: "converged", 1: "max_iter", 2: "failed"}[status]
    if status == 2:
        rec.message = f"more than {MAX_UPDATES} tau escalations"
    rec.counters = {"oracle_calls": calls, "prox_calls": proxes, **counters.to_json()}
    return rec, counters


# --------------------------------------------------------------------------
# Audits
# --------------------------------------------------------------------------


def _count_check(name, value, bound, **info):
    c = CheckResult(name, info=dict(info, value=value, bound=bound))
    c.add(-1, float(bound - value), 0.0)
    return c


def audit_cs_cs(record, instance, tol=1e-8):
    """Per-step inequality at x* when lambda is in the admissible range."""
    c = record.cols
    eps, lam = record.eps_bar, record.lam
    chk = CheckResult("cs_step")
    if instance.reference is None or not instance.pair_candidates:
        chk.skipped = "instance has no reference or parameters"
        return AuditReport({"cs_step": chk})
    inp, _ = theory_inputs(instance, eps, lam)
    if lam > B.cs_cs_max_lambda(inp.M_f, inp.L_f, eps) * (1 + 1e-12):
        chk.skipped = "lambda above the admissible range"
        return AuditReport({"cs_step": chk})
    xs, ps = instance.reference.x_star, instance.reference.phi_star
    D = c["X"] - xs
    dsq = np.einsum("ij,ij->i", D, D)
    lhs = c["phi_x"][1:] - ps - dsq[:-1] / (2 * lam) + (1 + lam * inp.mu) * dsq[1:] / (2 * lam)
    chk.add_many(np.arange(1, record.n_rows), 0.5 * eps - lhs, tol)
    return AuditReport({"cs_step": chk})


def audit_a_cs(record, instance, lambda0, tol=1e-9):
    eps = record.eps_bar
    lamc = record.cols["lam"][1:]
    checks = {}
    acc = CheckResult("accepted_step")
    acc.add_many(np.arange(1, record.n_rows), 0.5 * eps - record.cols["residual"][1:], tol)
    checks["accepted_step"] = acc
    mono = CheckResult("lambda_nonincreasing")
    lam_all = np.concatenate([[lambda0], lamc])
    mono.add_many(np.arange(1, len(lam_all)), lam_all[:-1] - lam_all[1:], 0.0)
    checks["lambda_nonincreasing"] = mono
    if instance.pair_candidates:
        T, _ = B.t_eps(instance.pair_candidates, eps)
        floor = min(eps / (8 * T * T), lambda0) if T > 0 else lambda0
        low = CheckResult("lambda_floor")
        low.add_many(np.arange(len(lam_all)), lam_all - floor + 1e-15, 0.0)
        checks["lambda_floor"] = low
        ln_bound, log2_bound = B.update_count_bounds(lambda0, 0.0, T, eps, "lambda_halvings")
        checks["halving_count"] = _count_check("halving_count", record.counters["lambda_halvings"], log2_bound,
                                               natural_log_bound=ln_bound)
    return AuditReport(checks)


def audit_1c_apb(record, instance, tol=1e-9):
    c = record.cols
    eps, lam = record.eps_bar, record.lam
    t, taus = c["t"], c["tau"]
    N = record.n_rows
    checks = {}
    key = CheckResult("tau_key")
    sel = np.flatnonzero(~record.serious[:-1])
    lhs = t[sel + 1] - 0.25 * eps
    rhs = taus[sel + 1] * (t[sel] - 0.25 * eps)
    key.add_many(sel, rhs - lhs, tol * (1.0 + np.abs(t[sel + 1]) + np.abs(t[sel])))
    checks["tau_key"] = key
    mono = CheckResult("tau_nondecreasing")
    mono.add_many(np.arange(1, N), taus[1:] - taus[:-1], 0.0)
    checks["tau_nondecreasing"] = mono
    res = record.counters["resolvent_calls"]
    checks["resolvent_calls"] = _count_check("resolvent_calls", res, record.iterations + record.counters["tau_updates"])
    if instance.pair_candidates:
        T, _ = B.t_eps(instance.pair_candidates, eps)
        mu = instance.params.mu if instance.params is not None else 0.0
        tb = B.bar_tau(lam, mu, eps, T)
        cap = CheckResult("tau_cap")
        cap.add_many(np.arange(N), 0.5 * (1.0 + tb) + 1e-12 - taus, 0.0)
        checks["tau_cap"] = cap
        ln_bound, log2_bound = B.update_count_bounds(lam, mu, T, eps, "tau_updates")
        checks["tau_update_count"] = _count_check("tau_update_count", record.counters["tau_updates"], log2_bound,
                                                  natural_log_bound=ln_bound)
    return AuditReport(checks)
