"""The generic proximal bundle loop with serious/null classification and traces."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import bounds as B
from .errors import ConfigurationError, SolverFailure
from .model import (
    E3_RESET_POLICIES, OneCut, active_set, auxiliary_model, blend,
    check_model_condition, serious_reset, update_multi_cut, update_two_cuts,
)
from ._backend import kernels
from .problem import AbsValue, Cut, HybridNorm, LeastSquares, MaxAffine
from .subproblem import TOL_SUB, solve_affine, solve_multi_cut, solve_two_cut
from .trace import RunRecord, TraceBuilder

SCHEMES = ("E1", "E2", "E3")
STOP_RULES = ("known_gap", "max_iter")


@dataclass
class GpbConfig:
    lam: float
    eps_bar: float
    tau: float = 0.0
    scheme: str = "E3"
    max_iterations: int = 2000000
    stop_rule: str = "known_gap"
    phi_star: float | None = None
    e3_reset: str = "active"
    e3_keep_all: bool = False
    max_cuts: int | None = None
    audit_models: bool = False
    audit_points: int = 20
    seed: int = 0
    tol_sub: float = TOL_SUB

    def validate(self):
        if not (math.isfinite(self.lam) and self.lam > 0):
            raise ConfigurationError(f"lambda must be positive, got {self.lam}")
        if not (math.isfinite(self.eps_bar) and self.eps_bar > 0):
            raise ConfigurationError(f"eps_bar must be positive, got {self.eps_bar}")
        if not 0.0 <= self.tau < 1.0:
            raise ConfigurationError(f"tau must lie in [0, 1), got {self.tau}")
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"unknown scheme {self.scheme!r}")
        if self.scheme == "E1" and not self.tau > 0.0:
            raise ConfigurationError("the one-cut scheme needs tau in (0, 1)")
        if self.stop_rule not in STOP_RULES:
            raise ConfigurationError(f"unknown stop rule {self.stop_rule!r}")
        if self.e3_reset not in E3_RESET_POLICIES:
            raise ConfigurationError(f"unknown E3 reset policy {self.e3_reset!r}")
        if self.max_iterations < 0:
            raise ConfigurationError("max_iterations must be nonnegative")


def classify_iteration(t_j, eps_bar):
    """'serious' when t_j <= eps_bar / 2, else 'null'."""
    if not math.isfinite(t_j):
        raise ConfigurationError("t_j must be finite")
    return "serious" if t_j <= 0.5 * eps_bar else "null"


def _sample_points(rng, h, x, xc, k):
    scale = max(float(np.linalg.norm(x - xc)), 1e-2)
    n = x.shape[0]
    pts = [x, xc]
    for i in range(max(k - 2, 0)):
        s = scale * (10.0 ** (i % 4 - 1))
        pts.append(h.project(x + s * rng.standard_normal(n)))
    return pts


def _resolve_phi_star(instance, config):
    if config.stop_rule != "known_gap":
        return config.phi_star if config.phi_star is not None else (
            instance.reference.phi_star if instance.reference is not None else None)
    if config.phi_star is not None:
        return float(config.phi_star)
    if instance.reference is None:
        raise ConfigurationError("known-gap stopping needs phi_star or a reference solution")
    return instance.reference.phi_star


def _check_start(instance, x0):
    x0 = np.array(instance.x0 if x0 is None else x0, dtype=float)
    if x0.shape != (instance.n,):
        raise ConfigurationError("x0 has the wrong dimension")
    if not math.isfinite(instance.h(x0)):
        raise ConfigurationError("x0 is not in dom h")
    return x0


def _fast_oracle(f):
    """(kind, matrix, vector, callable) for the compiled one-cut loop."""
    if type(f) is AbsValue:
        return 0, None, None, None
    if type(f) is MaxAffine:
        return 1, np.asarray(f.slopes, dtype=float), np.asarray(f.intercepts, dtype=float), None
    if type(f) is HybridNorm:
        return 2, None, None, None
    if type(f) is LeastSquares:
        return 3, np.asarray(f.A, dtype=float), np.asarray(f.b, dtype=float), None
    return -1, None, None, f


def one_cut_columns(instance, x0, lam, eps, tau, max_iter, target, adaptive=0, max_updates=60):
    """Run the compiled one-cut loop; returns (columns, status, oracle_calls, prox_calls, tau_updates)."""
    okind, oA, ob, fcall = _fast_oracle(instance.f)
    X, y_idx, c_idx, m, t, phi_x, taus, status, calls, proxes, updates = kernels.e1_loop(
        okind, oA, ob, fcall, instance.h.packed(instance.n), x0, float(lam), float(eps), float(tau),
        int(max_iter), float(target), int(adaptive), int(max_updates))
    N = len(t)
    cols = {"X": X, "y_idx": y_idx.astype(np.int64), "c_idx": c_idx.astype(np.int64), "m": m, "t": t,
            "tau": taus, "phi_x": phi_x, "inner": np.zeros(N, dtype=np.int64), "residual": np.zeros(N),
            "n_cuts": np.where(np.arange(N) == 0, 0, 1), "lam": np.full(N, float(lam))}
    return cols, int(status), int(calls), int(proxes), int(updates)


def _run_e1_fast(instance, config, x0, phi_star, target):
    lam, eps, tau = float(config.lam), float(config.eps_bar), float(config.tau)
    cols, status, calls, proxes, _ = one_cut_columns(instance, x0, lam, eps, tau, config.max_iterations, target)
    rec = RunRecord("gpb-e1", cols, eps_bar=eps, lam=lam, tau=tau, phi_star=phi_star)
    rec.status = "converged" if status == 0 else "max_iter"
    rec.counters = {"oracle_calls": calls, "prox_calls": proxes, "inner_iterations": 0}
    return rec


def run_gpb(instance, config, x0=None):
    """Run the bundle loop; returns a RunRecord (status 'failed' on solver failure)."""
    config.validate()
    x0 = _check_start(instance, x0)
    phi_star = _resolve_phi_star(instance, config)
    stop_known = config.stop_rule == "known_gap"
    eps = float(config.eps_bar)
    target = (phi_star + eps) if stop_known else -math.inf
    scheme = config.scheme
    if scheme == "E1" and not config.audit_models:
        return _run_e1_fast(instance, config, x0, phi_star, target)

    f, h = instance.f, instance.h
    n = instance.n
    hp = h.packed(n)
    lam = float(config.lam)
    half_eps = 0.5 * eps
    inv2lam = 1.0 / (2.0 * lam)
    tau = float(config.tau)
    rng = np.random.default_rng(config.seed)
    max_cuts = config.max_cuts

    counters = {"oracle_calls": 0, "prox_calls": 0, "inner_iterations": 0}
    tr = TraceBuilder()
    checks = []

    fx, gx = f(x0)
    counters["oracle_calls"] += 1
    cut = Cut(x0, fx, gx)
    phi_x = fx + h(x0)
    x, xc = x0, x0
    yi, ci = 0, 0
    phi_y = phi_x
    t = 0.0
    tr.append(x0, 0, 0, phi_x, 0.0, tau, phi_x, 0, 0.0, 0, lam)
    model = None
    last_w = None
    status, message = "max_iter", ""
    if stop_known and phi_y <= target:
        status = "converged"
    j = 0
    while status != "converged" and j < config.max_iterations:
        serious = t <= half_eps
        old = model
        theta = None
        if serious:
            xc, ci = x, j
            model = serious_reset(scheme, old, x, cut, policy=config.e3_reset, h=h, max_size=max_cuts)
            last_w = None
        elif scheme == "E1":
            model = OneCut(blend(old.agg, cut, tau), h)
        elif scheme == "E2":
            theta = float(last_w[0]) if last_w is not None else 1.0
            model = update_two_cuts(old, x, cut, theta)
        else:
            keep = range(old.size) if config.e3_keep_all else active_set(old, x)
            model = update_multi_cut(old, x, cut, keep, last_w)
            if last_w is not None:
                pos = {id(c): i for i, c in enumerate(old.cuts)}
                last_w = np.array([last_w[pos[id(c)]] if id(c) in pos else 0.0 for c in model.cuts])
        if config.audit_models and not serious:
            bar = auxiliary_model(scheme, old, x, theta)
            pts = _sample_points(rng, h, x, xc, config.audit_points)
            rep = check_model_condition(model, bar, cut, tau, pts, x=x, gamma=old)
            checks.append((j, rep.n_points, len(rep.violations), rep.worst_slack, rep.bar_matches_at_x))

        try:
            if scheme == "E1":
                sol = solve_affine(model.agg.slope, model.agg.intercept, h, xc, lam, hp)
            elif scheme == "E2":
                sol = solve_two_cut(model.agg, model.last, h, xc, lam, hp, config.tol_sub)
            else:
                G, b = model.pieces()
                sol = solve_multi_cut(G, b, h, xc, lam, config.tol_sub, w0=last_w, hp=hp)
        except SolverFailure as exc:
            status, message = "failed", str(exc)
            break
        counters["prox_calls"] += 1
        counters["inner_iterations"] += sol.inner_iterations
        last_w = sol.multipliers

        x = sol.x
        fx, gx = f(x)
        counters["oracle_calls"] += 1
        cut = Cut(x, fx, gx)
        phi_x = fx + h(x)
        j += 1
        d = x - xc
        philam_x = phi_x + float(d @ d) * inv2lam
        d = tr.X[yi] - xc
        philam_y = phi_y + float(d @ d) * inv2lam
        if philam_x < philam_y:
            yi, phi_y, philam_y = j, phi_x, philam_x
        t = philam_y - sol.value
        tr.append(x, yi, ci, sol.value, t, tau, phi_x, sol.inner_iterations, sol.residual, model.size, lam)
        if stop_known and phi_y <= target:
            status = "converged"
    rec = RunRecord(f"gpb-{scheme.lower()}", tr.build(), status=status, message=message, eps_bar=eps,
                    lam=lam, tau=tau, phi_star=phi_star, counters=counters, model_checks=checks)
    return rec


# --------------------------------------------------------------------------
# Audit
# --------------------------------------------------------------------------


@dataclass
class CheckResult:
    name: str
    checked: int = 0
    violations: list = field(default_factory=list)
    worst_slack: float = math.inf
    skipped: str = ""
    info: dict = field(default_factory=dict)

    def add(self, idx, slack, tol):
        self.checked += 1
        self.worst_slack = min(self.worst_slack, slack)
        if slack < -tol:
            self.violations.append((idx, slack))

    def add_many(self, idx, slack, tol):
        slack = np.asarray(slack, dtype=float)
        if slack.size == 0:
            return
        tol = np.broadcast_to(np.asarray(tol, dtype=float), slack.shape)
        self.checked += int(slack.size)
        self.worst_slack = min(self.worst_slack, float(slack.min()))
        bad = np.flatnonzero(slack < -tol)
        self.violations.extend((int(idx[i]), float(slack[i])) for i in bad)

    @property
    def ok(self):
        return not self.violations

    def to_json(self):
        return {"name": self.name, "checked": self.checked, "violations": len(self.violations),
                "first_violations": self.violations[:5],
                "worst_slack": None if self.checked == 0 else self.worst_slack, "skipped": self.skipped,
                **({"info": self.info} if self.info else {})}


@dataclass
class AuditReport:
    checks: dict

    @property
    def ok(self):
        return all(c.ok for c in self.checks.values())

    @property
    def n_violations(self):
        return sum(len(c.violations) for c in self.checks.values())

    def to_json(self):
        return {k: c.to_json() for k, c in self.checks.items()}


def theory_inputs(instance, eps_bar, lam, C=1.0):
    """TheoryInputs built from the instance's tightest candidate pair."""
    if not instance.pair_candidates or instance.reference is None:
        raise ConfigurationError("theory checks need pair candidates and a reference solution")
    T, (M, L) = B.t_eps(instance.pair_candidates, eps_bar)
    mu = instance.params.mu if instance.params is not None else 0.0
    return B.TheoryInputs(M, L, mu, eps_bar, lam, instance.d0, C), T


def first_solution_index(record, phi_star, eps_bar):
    """Index k (in the serious view) of the first eps-solution y-hat, or None."""
    sidx = record.serious_indices
    hits = np.flatnonzero(record.phi_y[sidx][1:] - phi_star <= eps_bar)
    return int(hits[0]) + 1 if len(hits) else None


def _sq_dist(P, x):
    D = P - x
    return np.einsum("ij,ij->i", D, D)


def audit_run(record, instance, config=None, rel_tol=1e-8, abs_tol=1e-8):
    """Check the trace against the null-block recursion, the serious-step
    inequality, the distance bound, and the first-null-gap bound."""
    eps = record.eps_bar
    lam = record.lam
    checks = {name: CheckResult(name) for name in ("t_nonneg", "null_recursion", "serious_sat",
                                                   "serious_dist", "first_null_gap", "center_constant")}
    c = record.cols
    t = c["t"]
    N = record.n_rows
    jj = np.arange(N)
    checks["t_nonneg"].add_many(jj, t + 1e-9, 0.0)
    starts = record.block_starts()
    null = ~record.serious
    same = np.all(c["X"][c["c_idx"]] == c["X"][starts], axis=1)
    checks["center_constant"].add_many(jj[null], np.where(same, 0.0, -1.0)[null], 0.0)
    if instance.reference is None or not instance.pair_candidates:
        for name in ("null_recursion", "serious_sat", "serious_dist", "first_null_gap"):
            checks[name].skipped = "instance has no reference or parameters"
        return AuditReport(checks)

    inp, T = theory_inputs(instance, eps, lam)
    mu = inp.mu
    tau_bar = B.bar_tau(lam, mu, eps, T)
    x_star = instance.reference.x_star
    phi_star = instance.reference.phi_star

    # every null j has t_{j+1} - eps/4 <= tau (t_j - eps/4)
    rc = checks["null_recursion"]
    sel = np.flatnonzero(null[:-1])
    if record.method == "1c-apb":
        taus = c["tau"][sel + 1]
    elif record.method == "gpb-e1":
        taus = np.full(len(sel), record.tau)
    else:
        taus = np.full(len(sel), max(record.tau, tau_bar))
    low = ~(taus >= tau_bar)
    if low.any():
        rc.skipped = f"tau={taus[low][0]} below tau_bar={tau_bar}"
    sel, taus = sel[~low], taus[~low]
    lhs = t[sel + 1] - 0.25 * eps
    rhs = taus * (t[sel] - 0.25 * eps)
    rc.add_many(sel, rhs - lhs, rel_tol * (1.0 + np.abs(t[sel + 1]) + np.abs(t[sel])))

    sidx = record.serious_indices
    K = first_solution_index(record, phi_star, eps)
    lam_mu = B.lambda_mu(lam, mu)
    Xs = c["X"][sidx]
    ds = _sq_dist(Xs, x_star)
    if len(sidx) > 1:
        lhs = record.phi_y[sidx[1:]] - phi_star
        rhs = ds[:-1] / (2 * lam) - ds[1:] / (2 * lam_mu) + 0.5 * eps
        checks["serious_sat"].add_many(sidx[1:], rhs - lhs, abs_tol * (1.0 + np.abs(lhs) + np.abs(rhs)))
    upto = len(sidx) if K is None else K
    checks["serious_dist"].add_many(sidx[:upto], math.sqrt(2.0) * inp.d0 + 1e-8 - np.sqrt(ds[:upto]), 0.0)

    tb = B.bar_t(inp)
    nxt = sidx[:upto] + 1
    nxt = nxt[nxt < N]
    checks["first_null_gap"].add_many(nxt, tb - t[nxt], 1e-9 * (1.0 + tb))
    return AuditReport(checks)


def model_check_summary(record):
    n = len(record.model_checks)
    viol = sum(c[2] for c in record.model_checks) + sum(1 for c in record.model_checks if not c[4])
    worst = min((c[3] for c in record.model_checks), default=math.inf)
    return {"null_steps_checked": n, "violations": viol, "worst_slack": None if n == 0 else worst}
