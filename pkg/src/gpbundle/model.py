"""Bundle models: one aggregate cut, aggregate plus last cut, or a cut set.

Every model stands for ``pieces + h``; ``h`` is carried along so that the
model can be evaluated on its own.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolation, ConfigurationError
from .problem import Cut, h_from_json

ACTIVE_RTOL = 1e-8
CHECK_TOL = 1e-9


def tol_active(gamma_x):
    """Tolerance used to decide membership in the active set C(x)."""
    return ACTIVE_RTOL * (1.0 + abs(gamma_x))


# --------------------------------------------------------------------------
# Aggregates
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class _Node:
    """Persistent list of provenance entries (newest first)."""

    prev: "_Node | None"
    anchor: np.ndarray
    logc: float
    length: int


@dataclass(frozen=True, eq=False)
class AggregateAffine:
    """Affine minorant ``<slope, u> + intercept`` with convex provenance.

    Provenance weights are stored as log coefficients relative to a common
    log scale, so blending is O(1) and branches share history.
    """

    slope: np.ndarray
    intercept: float
    _prov: _Node | None = field(default=None, repr=False)
    _scale: float = 0.0

    def __call__(self, u):
        return float(self.slope @ u) + self.intercept

    @classmethod
    def from_cut(cls, cut):
        node = _Node(None, cut.anchor, 0.0, 1)
        return cls(cut.grad, cut.fval - float(cut.grad @ cut.anchor), node, 0.0)

    @property
    def provenance(self):
        """(anchors, weights), oldest contribution first."""
        anchors, logs = [], []
        node = self._prov
        while node is not None:
            anchors.append(node.anchor)
            logs.append(node.logc)
            node = node.prev
        anchors.reverse()
        w = np.exp(np.array(logs[::-1]) + self._scale)
        return anchors, w

    @property
    def weights(self):
        return self.provenance[1]

    def to_json(self):
        anchors, w = self.provenance
        return {"slope": self.slope.tolist(), "intercept": self.intercept,
                "anchors": [a.tolist() for a in anchors], "weights": w.tolist()}

    @classmethod
    def from_json(cls, d):
        node = None
        total = 0.0
        for a, w in zip(d.get("anchors", []), d.get("weights", [])):
            total += 1
            node = _Node(node, np.array(a, dtype=float), math.log(w) if w > 0 else -math.inf, int(total))
        return cls(np.array(d["slope"], dtype=float), float(d["intercept"]), node, 0.0)


def blend(agg, cut, tau):
    """tau * agg + (1 - tau) * cut for tau in [0, 1]."""
    if tau == 0.0:
        return AggregateAffine.from_cut(cut)
    if tau == 1.0:
        return agg
    c_int = cut.fval - float(cut.grad @ cut.anchor)
    slope = tau * agg.slope + (1.0 - tau) * cut.grad
    intercept = tau * agg.intercept + (1.0 - tau) * c_int
    scale = agg._scale + math.log(tau)
    prev_len = agg._prov.length if agg._prov is not None else 0
    node = _Node(agg._prov, cut.anchor, math.log1p(-tau) - scale, prev_len + 1)
    return AggregateAffine(slope, intercept, node, scale)


# --------------------------------------------------------------------------
# Model variants
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class OneCut:
    agg: AggregateAffine
    h: object
    kind = "one_cut"

    def pieces(self):
        return self.agg.slope[None, :], np.array([self.agg.intercept])

    @property
    def size(self):
        return 1


@dataclass(frozen=True, eq=False)
class TwoCuts:
    agg: AggregateAffine
    last: Cut
    h: object
    kind = "two_cuts"

    def pieces(self):
        return (np.vstack([self.agg.slope, self.last.grad]),
                np.array([self.agg.intercept, self.last.intercept]))

    @property
    def size(self):
        return 2


@dataclass(frozen=True, eq=False)
class MultiCut:
    cuts: tuple
    h: object
    max_size: int | None = None
    ages: tuple = ()
    kind = "multi_cut"

    def __post_init__(self):
        if len(self.cuts) == 0:
            raise ContractViolation("a cut-set model needs at least one cut")
        if self.max_size is not None and self.max_size < 1:
            raise ConfigurationError("max_size must be positive")
        if len(self.ages) != len(self.cuts):
            object.__setattr__(self, "ages", tuple(0 for _ in self.cuts))
        G = np.array([c.grad for c in self.cuts], dtype=float)
        b = np.array([c.intercept for c in self.cuts], dtype=float)
        object.__setattr__(self, "_G", G)
        object.__setattr__(self, "_b", b)

    def pieces(self):
        return self._G, self._b

    @property
    def size(self):
        return len(self.cuts)


BundleModel = OneCut | TwoCuts | MultiCut


def piece_values(model, u):
    G, b = model.pieces()
    return G @ np.asarray(u, dtype=float) + b


def model_eval(model, u):
    """Gamma(u) = max of the affine pieces at u, plus h(u)."""
    u = np.asarray(u, dtype=float)
    if isinstance(model, OneCut):
        val = model.agg(u)
    elif isinstance(model, TwoCuts):
        val = max(model.agg(u), model.last(u))
    else:
        val = float(np.max(piece_values(model, u)))
    return val + model.h(u)


def active_set(model, x):
    """Indices of pieces active at x within tol_active."""
    vals = piece_values(model, x)
    mx = float(vals.max())
    hx = model.h(x)
    tol = tol_active(mx + hx if math.isfinite(hx) else mx)
    return np.flatnonzero(vals >= mx - tol)


# --------------------------------------------------------------------------
# Updates
# --------------------------------------------------------------------------


def update_one_cut(model, new_cut, tau):
    """Aggregate update tau * Gamma + (1 - tau) * (cut + h)."""
    if not 0.0 < tau < 1.0:
        raise ContractViolation(f"one-cut update needs tau in (0, 1), got {tau}")
    return OneCut(blend(model.agg, new_cut, tau), model.h)


def two_cut_theta_branch(agg_x, last_x, gamma_x):
    """Which branch of the theta rule applies: 1, 0, or None (dual multiplier)."""
    tol = tol_active(gamma_x)
    if agg_x > last_x + tol:
        return 1.0
    if agg_x < last_x - tol:
        return 0.0
    return None


def update_two_cuts(model, x, new_cut, theta):
    """A+ = theta * A + (1 - theta) * last; last+ = new_cut."""
    if not 0.0 <= theta <= 1.0:
        raise ContractViolation(f"theta must lie in [0, 1], got {theta}")
    x = np.asarray(x, dtype=float)
    a, l = model.agg(x), model.last(x)
    branch = two_cut_theta_branch(a, l, max(a, l) + model.h(x))
    if branch is not None and theta != branch:
        raise ContractViolation(f"theta={theta} contradicts the branch rule (expected {branch})")
    return TwoCuts(blend(model.agg, model.last, theta), new_cut, model.h)


def update_multi_cut(model, x, new_cut, active, multipliers=None):
    """C+ = {cuts in ``active``} + {new_cut}, pruned to max_size if needed.

    ``active`` must contain every cut active at x.  When ``max_size`` binds,
    cuts outside the active set are dropped first, smallest multiplier then
    oldest first; active cuts and the new cut are never dropped.
    """
    x = np.asarray(x, dtype=float)
    m = model.size
    keep = sorted(set(int(i) for i in active))
    if keep and (keep[0] < 0 or keep[-1] >= m):
        raise ContractViolation("active set refers to a missing cut")
    required = set(active_set(model, x).tolist())
    missing = required.difference(keep)
    if missing:
        raise ContractViolation(f"active set omits active cuts {sorted(missing)}")
    if model.max_size is not None and len(keep) + 1 > model.max_size:
        w = np.zeros(m) if multipliers is None else np.asarray(multipliers, dtype=float)
        droppable = [i for i in keep if i not in required]
        droppable.sort(key=lambda i: (w[i], -model.ages[i], i))
        excess = len(keep) + 1 - model.max_size
        drop = set(droppable[:excess])
        keep = [i for i in keep if i not in drop]
    cuts = tuple(model.cuts[i] for i in keep) + (new_cut,)
    ages = tuple(model.ages[i] + 1 for i in keep) + (0,)
    return MultiCut(cuts, model.h, model.max_size, ages)


E3_RESET_POLICIES = ("active", "fresh", "keep_all")


def serious_reset(scheme, current, x_j, new_cut, policy="active", h=None, max_size=None):
    """Model used right after a serious step at x_j."""
    h = current.h if current is not None else h
    if scheme == "E1":
        return OneCut(AggregateAffine.from_cut(new_cut), h)
    if scheme == "E2":
        return TwoCuts(AggregateAffine.from_cut(new_cut), new_cut, h)
    if scheme != "E3":
        raise ConfigurationError(f"unknown scheme {scheme!r}")
    if current is None or policy == "fresh" or not isinstance(current, MultiCut):
        ms = max_size if current is None or not isinstance(current, MultiCut) else current.max_size
        return MultiCut((new_cut,), h, ms)
    if policy == "keep_all":
        idx = list(range(current.size))
    elif policy == "active":
        idx = active_set(current, x_j).tolist()
    else:
        raise ConfigurationError(f"unknown E3 reset policy {policy!r}")
    cuts = tuple(current.cuts[i] for i in idx) + (new_cut,)
    ages = tuple(current.ages[i] + 1 for i in idx) + (0,)
    if current.max_size is not None and len(cuts) > current.max_size:
        cuts, ages = cuts[-current.max_size:], ages[-current.max_size:]
    return MultiCut(cuts, h, current.max_size, ages)


def auxiliary_model(scheme, model, x, theta=None):
    """The comparison model Gamma-bar of the null-update condition."""
    if scheme == "E1":
        return model
    if scheme == "E2":
        return OneCut(blend(model.agg, model.last, theta), model.h)
    idx = active_set(model, x)
    return MultiCut(tuple(model.cuts[i] for i in idx), model.h, None)


@dataclass
class ConditionReport:
    n_points: int
    violations: list
    worst_slack: float
    bar_matches_at_x: bool = True

    @property
    def ok(self):
        return not self.violations and self.bar_matches_at_x


def check_model_condition(gamma_plus, bar_gamma, new_cut, tau, sample_points, x=None, gamma=None,
                          tol=CHECK_TOL):
    """Check tau*bar + (1-tau)*(cut + h) <= Gamma+ at each sample point.

    When ``x`` and the pre-update model ``gamma`` are given, also check that
    the auxiliary model agrees with it at x.  Slack is Gamma+ minus the left
    side (nonnegative when the condition holds).
    """
    violations = []
    worst = math.inf
    h = gamma_plus.h
    for k, u in enumerate(sample_points):
        hu = h(u)
        if not math.isfinite(hu):
            continue
        lhs = tau * model_eval(bar_gamma, u) + (1.0 - tau) * (new_cut(u) + hu)
        slack = model_eval(gamma_plus, u) - lhs
        worst = min(worst, slack)
        if slack < -tol:
            violations.append((k, slack))
    matches = True
    if x is not None and gamma is not None:
        matches = abs(model_eval(bar_gamma, x) - model_eval(gamma, x)) <= tol * (1.0 + abs(model_eval(gamma, x)))
    return ConditionReport(len(sample_points), violations, worst, matches)


# --------------------------------------------------------------------------
# Snapshots
# --------------------------------------------------------------------------


def model_to_json(model):
    d = {"kind": model.kind, "h": model.h.to_json()}
    if isinstance(model, OneCut):
        d["agg"] = model.agg.to_json()
    elif isinstance(model, TwoCuts):
        d["agg"] = model.agg.to_json()
        d["last"] = model.last.to_json()
    else:
        d["cuts"] = [c.to_json() for c in model.cuts]
        d["max_size"] = model.max_size
        d["ages"] = list(model.ages)
    return d


def model_from_json(d):
    h = h_from_json(d["h"])
    if d["kind"] == "one_cut":
        return OneCut(AggregateAffine.from_json(d["agg"]), h)
    if d["kind"] == "two_cuts":
        return TwoCuts(AggregateAffine.from_json(d["agg"]), Cut.from_json(d["last"]), h)
    if d["kind"] == "multi_cut":
        return MultiCut(tuple(Cut.from_json(c) for c in d["cuts"]), h, d.get("max_size"), tuple(d.get("ages", ())))
    raise ConfigurationError(f"unknown model kind {d['kind']!r}")
