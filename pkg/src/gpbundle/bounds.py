"""Closed-form theory quantities and complexity bounds.

All logarithms are natural unless a function returns both readings.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from importlib import resources

from .errors import ConfigurationError


@dataclass(frozen=True)
class TheoryInputs:
    M_f: float
    L_f: float
    mu: float
    eps_bar: float
    lam: float
    d0: float
    C: float = 1.0

    def __post_init__(self):
        for name in ("M_f", "L_f", "mu", "d0"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ConfigurationError(f"{name} must be finite and nonnegative, got {v}")
        for name in ("eps_bar", "lam", "C"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ConfigurationError(f"{name} must be finite and positive, got {v}")

    @property
    def hybrid_sq(self):
        """M^2 + eps * L."""
        return self.M_f ** 2 + self.eps_bar * self.L_f


def t_eps(pairs, eps_bar):
    """Smallest sqrt(M^2 + eps L) over the candidate pairs; ties go to smaller M."""
    pairs = list(pairs)
    if not pairs:
        raise ConfigurationError("need at least one (M, L) pair")
    best = min(pairs, key=lambda p: (math.sqrt(p[0] ** 2 + eps_bar * p[1]), p[0]))
    return math.sqrt(best[0] ** 2 + eps_bar * best[1]), best


def lambda_mu(lam, mu):
    return lam / (1.0 + lam * mu)


def bar_tau(lam, mu_bar, eps_bar, T):
    """[1 + (1 + lam mu) eps / (8 lam T^2)]^-1, equal to 0 when T = 0."""
    if T == 0.0:
        return 0.0
    return 1.0 / (1.0 + (1.0 + lam * mu_bar) * eps_bar / (8.0 * lam * T * T))


def theorem_tau(inp):
    return bar_tau(inp.lam, inp.mu, inp.eps_bar, math.sqrt(inp.hybrid_sq))


def bar_t(inp):
    """M^2 + 4 (L + 2) (max{1, 2 lam L} d0 + lam M)^2."""
    M, L, lam = inp.M_f, inp.L_f, inp.lam
    return M * M + 4.0 * (L + 2.0) * (max(1.0, 2.0 * lam * L) * inp.d0 + lam * M) ** 2


@dataclass(frozen=True)
class LambdaRange:
    lo: float
    hi: float

    @property
    def empty(self):
        return self.lo > self.hi

    @property
    def geomean(self):
        return math.sqrt(self.lo * self.hi)


def lambda_range(inp, mode="theorem31", T=None, M_f0=None):
    """Admissible stepsize interval; ``empty`` when lo > hi.

    Modes theorem31, cor32 and cor33 are the bundle-method intervals; mode
    cs is the subgradient-method interval [eps/(4 C S), eps/(4 S)] with
    S = M^2 + eps L.
    """
    if mode == "cs":
        S = inp.hybrid_sq
        if S == 0.0:
            return LambdaRange(math.inf, math.inf)
        return LambdaRange(inp.eps_bar / (4.0 * inp.C * S), inp.eps_bar / (4.0 * S))
    if mode == "theorem31":
        scale = inp.hybrid_sq
    elif mode == "cor32":
        if T is None:
            raise ConfigurationError("cor32 range needs T")
        scale = T * T
    elif mode == "cor33":
        if M_f0 is None:
            raise ConfigurationError("cor33 range needs a finite M_f0")
        scale = M_f0 * M_f0
    else:
        raise ConfigurationError(f"unknown lambda-range mode {mode!r}")
    lo = math.inf if scale == 0.0 else inp.eps_bar / (inp.C * scale)
    hi = inp.C * inp.d0 ** 2 / inp.eps_bar
    return LambdaRange(lo, hi)


def _serious_terms(d0, lam, eps, mu):
    first = d0 * d0 / (lam * eps)
    if mu == 0.0:
        return first, first
    second = math.log(mu * d0 * d0 / eps + 1.0) / (mu * lambda_mu(lam, mu))
    return first, second


def serious_bound(inp):
    """min{d0^2/(lam eps), log(mu d0^2/eps + 1)/(mu lam_mu)} + 1."""
    return min(_serious_terms(inp.d0, inp.lam, inp.eps_bar, inp.mu)) + 1.0


def null_block_bound(tau, bar_t_val, eps_bar):
    """log(4 t-bar / eps) / (1 - tau), with the log clamped at zero."""
    if not 0.0 <= tau < 1.0:
        raise ConfigurationError(f"tau must lie in [0, 1), got {tau}")
    if bar_t_val <= 0.0:
        return 0.0
    return max(math.log(4.0 * bar_t_val / eps_bar), 0.0) / (1.0 - tau)


TOTAL_VARIANTS = ("generic_tau", "theorem_tau", "tau_free", "adaptive")


def total_bound(inp, variant="theorem_tau", tau=None, T=None):
    """Total iteration bound.

    generic_tau: [null bound with ``tau`` + 1] * serious bound.
    theorem_tau: the same with tau from ``theorem_tau``; the null factor is
      written as (1 + 8 lam_mu (M^2 + eps L) / eps) log(4 t-bar / eps).
    tau_free: as theorem_tau with T^2 in place of M^2 + eps L.
    adaptive: one-cut adaptive bound with the factor 2 (1 + 8 lam_mu T^2/eps).
    """
    tb = bar_t(inp)
    sb = serious_bound(inp)
    lg = max(math.log(4.0 * tb / inp.eps_bar), 0.0) if tb > 0 else 0.0
    lm = lambda_mu(inp.lam, inp.mu)
    if variant == "generic_tau":
        if tau is None:
            raise ConfigurationError("generic_tau needs tau")
        return (null_block_bound(tau, tb, inp.eps_bar) + 1.0) * sb
    if variant == "theorem_tau":
        return ((1.0 + 8.0 * lm * inp.hybrid_sq / inp.eps_bar) * lg + 1.0) * sb
    if variant in ("tau_free", "adaptive"):
        if T is None:
            T = math.sqrt(inp.hybrid_sq)
        factor = 1.0 + 8.0 * lm * T * T / inp.eps_bar
        if variant == "adaptive":
            factor *= 2.0
        return (factor * lg + 1.0) * sb
    raise ConfigurationError(f"unknown total-bound variant {variant!r}")


def asymptotic_bound(inp, T=None):
    """min{S d0^2/eps^2, (S/(mu eps) + 1) log(mu d0^2/eps + 1)}, S = M^2 + eps L or T^2."""
    S = inp.hybrid_sq if T is None else T * T
    eps, d0, mu = inp.eps_bar, inp.d0, inp.mu
    first = S * d0 * d0 / (eps * eps)
    if mu == 0.0:
        return first
    second = (S / (mu * eps) + 1.0) * math.log(mu * d0 * d0 / eps + 1.0)
    return min(first, second)


def cs_cs_bound(inp):
    """floor(min{d0^2/(lam eps), ((1 + lam mu)/(lam mu)) log(mu d0^2/eps + 1)}) + 1."""
    first, second = _serious_terms(inp.d0, inp.lam, inp.eps_bar, inp.mu)
    return math.floor(min(first, second)) + 1


def cs_cs_max_lambda(M, L, eps_bar):
    return eps_bar / (4.0 * (M * M + eps_bar * L))


def update_count_bounds(lam, mu_bar, T, eps_bar, which="tau_updates"):
    """(natural-log reading, base-2 reading) of the adaptive update counts."""
    if which == "tau_updates":
        arg = 1.0 + 8.0 * lambda_mu(lam, mu_bar) * T * T / eps_bar
    elif which == "lambda_halvings":
        arg = max(8.0 * lam * T * T / eps_bar, 1.0)
    else:
        raise ConfigurationError(f"unknown counter {which!r}")
    return math.ceil(math.log(arg)), math.ceil(math.log2(arg))


def all_quantities(inp, pairs=None, tau=None):
    """Every quantity for one input set, as a JSON-friendly dict."""
    T = math.sqrt(inp.hybrid_sq) if pairs is None else t_eps(pairs, inp.eps_bar)[0]
    rng = lambda_range(inp, "theorem31")
    rng32 = lambda_range(inp, "cor32", T=T)
    th_tau = theorem_tau(inp)
    out = {
        "inputs": asdict(inp),
        "T_eps": T,
        "lambda_mu": lambda_mu(inp.lam, inp.mu),
        "bar_tau": bar_tau(inp.lam, inp.mu, inp.eps_bar, T),
        "theorem_tau": th_tau,
        "bar_t": bar_t(inp),
        "lambda_range_theorem31": [rng.lo, rng.hi],
        "lambda_range_cor32": [rng32.lo, rng32.hi],
        "serious_bound": serious_bound(inp),
        "null_block_bound": null_block_bound(th_tau if tau is None else tau, bar_t(inp), inp.eps_bar),
        "total_bound_theorem_tau": total_bound(inp, "theorem_tau"),
        "total_bound_generic_tau": total_bound(inp, "generic_tau", tau=th_tau if tau is None else tau),
        "total_bound_tau_free": total_bound(inp, "tau_free", T=T),
        "total_bound_adaptive": total_bound(inp, "adaptive", T=T),
        "asymptotic_bound": asymptotic_bound(inp),
        "cs_cs_bound": cs_cs_bound(inp),
        "tau_update_bounds": list(update_count_bounds(inp.lam, inp.mu, T, inp.eps_bar, "tau_updates")),
        "lambda_halving_bounds": list(update_count_bounds(inp.lam, inp.mu, T, inp.eps_bar, "lambda_halvings")),
    }
    return out


# inputs pinned in the regression file
REGRESSION_CASES = [
    dict(M_f=1.0, L_f=0.0, mu=0.0, eps_bar=1.0, lam=1.0, d0=1.0),
    dict(M_f=1.0, L_f=1.0, mu=0.0, eps_bar=1.0, lam=1.0, d0=1.0),
    dict(M_f=1.0, L_f=1.0, mu=2.0, eps_bar=1.0, lam=0.5, d0=1.0),
    dict(M_f=1.0, L_f=0.0, mu=0.0, eps_bar=0.1, lam=1.0, d0=1.0),
    dict(M_f=0.0, L_f=1.0, mu=0.0, eps_bar=0.1, lam=1.0, d0=1.0),
    dict(M_f=1.0, L_f=0.0, mu=1.0, eps_bar=1.0, lam=1.0, d0=1.0),
    dict(M_f=2.5, L_f=3.0, mu=0.5, eps_bar=0.01, lam=0.03, d0=2.0, C=2.0),
    dict(M_f=0.0, L_f=0.0, mu=0.0, eps_bar=1.0, lam=1.0, d0=0.0),
]


def regression_table():
    return [all_quantities(TheoryInputs(**case)) for case in REGRESSION_CASES]


def pinned_table():
    text = resources.files("gpbundle").joinpath("data/bounds_regression.json").read_text()
    return json.loads(text)


def compare_to_pinned():
    """List of mismatches (case index, key, current, pinned); empty when exact."""
    current = json.loads(json.dumps(regression_table()))
    pinned = pinned_table()
    diffs = []
    if len(current) != len(pinned):
        return [(None, "length", len(current), len(pinned))]
    for i, (c, p) in enumerate(zip(current, pinned)):
        for key in sorted(set(c) | set(p)):
            if c.get(key) != p.get(key):
                diffs.append((i, key, c.get(key), p.get(key)))
    return diffs
