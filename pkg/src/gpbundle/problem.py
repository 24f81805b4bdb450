"""Problem abstraction: first-order oracles for f, prox-friendly h, benchmark catalog."""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, OracleError

BENCHMARKS = ("abs1d", "maxaffine", "hybrid_norm", "lasso_like", "strongly_convex_pwl")


def _vec(x, n=None):
    arr = np.array(x, dtype=float).reshape(-1)
    if n is not None and arr.shape[0] != n:
        raise ConfigurationError(f"expected a vector of length {n}, got {arr.shape[0]}")
    return arr


# --------------------------------------------------------------------------
# oracles for f
# --------------------------------------------------------------------------


def _norm(x):
    with np.errstate(over="ignore", invalid="ignore"):
        return float(np.linalg.norm(np.asarray(x, dtype=float)))


class FirstOrderOracle:
    """Value and a fixed subgradient selection of a convex function.

    Subclasses implement ``_value`` and ``_subgrad``.  Both must be pure
    functions of the point.
    """

    kind = "abstract"

    def __init__(self, dimension):
        self.dimension = int(dimension)

    def value(self, x):
        with np.errstate(over="ignore", invalid="ignore"):
            v = float(self._value(x))
        if not math.isfinite(v):
            raise OracleError(f"{self.kind}: non-finite value {v} at a point of norm {_norm(x):.3e}")
        return v

    def subgrad(self, x):
        with np.errstate(over="ignore", invalid="ignore"):
            g = np.asarray(self._subgrad(x), dtype=float)
        if not np.all(np.isfinite(g)):
            raise OracleError(f"{self.kind}: non-finite subgradient at a point of norm {_norm(x):.3e}")
        return g

    def __call__(self, x):
        return self.value(x), self.subgrad(x)

    def to_json(self):
        raise NotImplementedError


class AbsValue(FirstOrderOracle):
    """f(u) = ||u||_1, with the selection f'(0) = 0 at kinks."""

    kind = "abs"

    def _value(self, x):
        return np.abs(x).sum()

    def _subgrad(self, x):
        return np.sign(x)

    def to_json(self):
        return {"kind": self.kind, "n": self.dimension}


class MaxAffine(FirstOrderOracle):
    """f(u) = max_i <a_i, u> + b_i; ties pick the lowest index."""

    kind = "maxaffine"

    def __init__(self, slopes, intercepts):
        slopes = np.atleast_2d(np.array(slopes, dtype=float))
        intercepts = _vec(intercepts, slopes.shape[0])
        super().__init__(slopes.shape[1])
        self.slopes = slopes
        self.intercepts = intercepts

    def _value(self, x):
        return np.max(self.slopes @ x + self.intercepts)

    def _subgrad(self, x):
        return self.slopes[int(np.argmax(self.slopes @ x + self.intercepts))].copy()

    def __call__(self, x):
        vals = self.slopes @ x + self.intercepts
        i = int(np.argmax(vals))
        v = float(vals[i])
        if not math.isfinite(v):
            raise OracleError(f"maxaffine: non-finite value at a point of norm {_norm(x):.3e}")
        return v, self.slopes[i].copy()

    def to_json(self):
        return {"kind": self.kind, "slopes": self.slopes.tolist(), "intercepts": self.intercepts.tolist()}


class HybridNorm(FirstOrderOracle):
    """f(u) = ||u|| + ||u||^2 / 2 (nonsmooth at the origin, where f'(0) = 0)."""

    kind = "hybrid_norm"

    def _value(self, x):
        r = np.linalg.norm(x)
        return r + 0.5 * r * r

    def _subgrad(self, x):
        r = np.linalg.norm(x)
        if r == 0.0:
            return np.zeros_like(x)
        return x / r + x

    def to_json(self):
        return {"kind": self.kind, "n": self.dimension}


class LeastSquares(FirstOrderOracle):
    """f(u) = ||A u - b||^2 / 2."""

    kind = "least_squares"

    def __init__(self, A, b):
        A = np.atleast_2d(np.array(A, dtype=float))
        super().__init__(A.shape[1])
        self.A = A
        self.b = _vec(b, A.shape[0])

    def _value(self, x):
        r = self.A @ x - self.b
        return 0.5 * float(r @ r)

    def _subgrad(self, x):
        return self.A.T @ (self.A @ x - self.b)

    def __call__(self, x):
        with np.errstate(over="ignore", invalid="ignore"):
            r = self.A @ x - self.b
            v = 0.5 * float(r @ r)
            g = self.A.T @ r
        if not (math.isfinite(v) and np.all(np.isfinite(g))):
            raise OracleError(f"least_squares: non-finite value at a point of norm {_norm(x):.3e}")
        return v, g

    def to_json(self):
        return {"kind": self.kind, "A": self.A.tolist(), "b": self.b.tolist()}


def oracle_from_json(d):
    kind = d.get("kind")
    if kind == "abs":
        return AbsValue(int(d.get("n", 1)))
    if kind == "maxaffine":
        return MaxAffine(d["slopes"], d["intercepts"])
    if kind == "hybrid_norm":
        return HybridNorm(int(d["n"]))
    if kind == "least_squares":
        return LeastSquares(d["A"], d["b"])
    raise ConfigurationError(f"unknown oracle kind {kind!r}")


# --------------------------------------------------------------------------
# Linearizations
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Cut:
    """Linearization l(u) = fval + <grad, u - anchor> of f at ``anchor``."""

    anchor: np.ndarray
    fval: float
    grad: np.ndarray

    def __call__(self, u):
        return self.fval + float(self.grad @ (np.asarray(u, dtype=float) - self.anchor))

    @property
    def slope(self):
        return self.grad

    @property
    def intercept(self):
        return self.fval - float(self.grad @ self.anchor)

    def to_json(self):
        return {"anchor": self.anchor.tolist(), "fval": self.fval, "grad": self.grad.tolist()}

    @classmethod
    def from_json(cls, d):
        return cls(_vec(d["anchor"]), float(d["fval"]), _vec(d["grad"]))


def linearize(f, x):
    """Return the cut of ``f`` anchored at ``x``."""
    x = np.array(x, dtype=float)
    fval, grad = f(x)
    return Cut(x, fval, grad)


# --------------------------------------------------------------------------
# Simple functions h
# --------------------------------------------------------------------------

BASE_CODES = {"zero": 0, "l1": 1, "box": 2, "ball": 3}
_FEAS_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SimpleFunction:
    """h(u) = quad_weight/2 ||u - quad_center||^2 + base(u).

    ``base`` is one of zero, a weighted l1 norm, or the indicator of a box or a
    Euclidean ball.  A pure quadratic is ``base="zero"`` with a positive
    weight; the strong-convexity modulus of h is ``quad_weight``.
    """

    base: str = "zero"
    quad_weight: float = 0.0
    quad_center: np.ndarray | None = None
    l1_weight: float = 0.0
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    ball_center: np.ndarray | None = None
    radius: float = 0.0

    def __post_init__(self):
        if self.base not in BASE_CODES:
            raise ConfigurationError(f"unknown h kind {self.base!r}")
        if self.quad_weight < 0 or self.l1_weight < 0:
            raise ConfigurationError("h weights must be nonnegative")
        if self.base == "box":
            if self.lower is None or self.upper is None or np.any(self.lower > self.upper):
                raise ConfigurationError("empty box in indicator h")
        if self.base == "ball" and (self.ball_center is None or not self.radius >= 0):
            raise ConfigurationError("ball indicator needs a center and radius >= 0")

    @property
    def mu(self):
        return float(self.quad_weight)

    @property
    def kind(self):
        if self.quad_weight > 0:
            return "quadratic" if self.base == "zero" else "sum"
        return self.base

    def _qc(self, n):
        return np.zeros(n) if self.quad_center is None else self.quad_center

    def contains(self, u):
        if self.base == "box":
            tol = _FEAS_TOL * (1.0 + np.abs(self.lower) + np.abs(self.upper))
            return bool(np.all(u >= self.lower - tol) and np.all(u <= self.upper + tol))
        if self.base == "ball":
            return bool(np.linalg.norm(u - self.ball_center) <= self.radius * (1 + _FEAS_TOL) + _FEAS_TOL)
        return True

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        if not self.contains(u):
            return math.inf
        val = 0.0
        if self.quad_weight > 0:
            d = u - self._qc(u.shape[0])
            val += 0.5 * self.quad_weight * float(d @ d)
        if self.base == "l1":
            val += self.l1_weight * float(np.abs(u).sum())
        return val

    def project(self, z):
        """Nearest point of dom h (identity for finite-valued kinds)."""
        z = np.asarray(z, dtype=float)
        if self.base == "box":
            return np.minimum(np.maximum(z, self.lower), self.upper)
        if self.base == "ball":
            d = z - self.ball_center
            r = np.linalg.norm(d)
            return z.copy() if r <= self.radius else self.ball_center + (self.radius / r) * d
        return z.copy()

    def values(self, P):
        """Vectorized h over the rows of ``P``."""
        P = np.atleast_2d(np.asarray(P, dtype=float))
        out = np.zeros(P.shape[0])
        if self.quad_weight > 0:
            D = P - self._qc(P.shape[1])
            out += 0.5 * self.quad_weight * np.einsum("ij,ij->i", D, D)
        if self.base == "l1":
            out += self.l1_weight * np.abs(P).sum(axis=1)
        elif self.base == "box":
            tol = _FEAS_TOL * (1.0 + np.abs(self.lower) + np.abs(self.upper))
            bad = np.any((P < self.lower - tol) | (P > self.upper + tol), axis=1)
            out[bad] = math.inf
        elif self.base == "ball":
            r = np.linalg.norm(P - self.ball_center, axis=1)
            out[r > self.radius * (1 + _FEAS_TOL) + _FEAS_TOL] = math.inf
        return out

    def prox(self, z, alpha):
        """argmin_u h(u) + ||u - z||^2 / (2 alpha)."""
        if not alpha > 0:
            raise ConfigurationError("prox step must be positive")
        z = np.asarray(z, dtype=float)
        if self.quad_weight > 0:
            s = 1.0 + alpha * self.quad_weight
            z = (z + alpha * self.quad_weight * self._qc(z.shape[0])) / s
            alpha = alpha / s
        if self.base == "zero":
            return z.copy()
        if self.base == "l1":
            t = alpha * self.l1_weight
            return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)
        if self.base == "box":
            return np.minimum(np.maximum(z, self.lower), self.upper)
        d = z - self.ball_center
        r = np.linalg.norm(d)
        if r <= self.radius:
            return z.copy()
        return self.ball_center + (self.radius / r) * d

    def subdiff_distance(self, x, v):
        """Distance from ``v`` to the subdifferential of h at ``x``."""
        x = np.asarray(x, dtype=float)
        r = np.asarray(v, dtype=float).copy()
        if self.quad_weight > 0:
            r -= self.quad_weight * (x - self._qc(x.shape[0]))
        if self.base == "zero":
            return float(np.linalg.norm(r))
        if self.base == "l1":
            w = self.l1_weight
            res = np.where(x != 0, r - w * np.sign(x), np.maximum(np.abs(r) - w, 0.0))
            return float(np.linalg.norm(res))
        if self.base == "box":
            tol = _FEAS_TOL * (1.0 + np.abs(self.lower) + np.abs(self.upper))
            at_lo = x <= self.lower + tol
            at_hi = x >= self.upper - tol
            res = r.copy()
            res[at_lo] = np.maximum(res[at_lo], 0.0)
            res[at_hi] = np.minimum(res[at_hi], 0.0)
            res[at_lo & at_hi] = 0.0
            return float(np.linalg.norm(res))
        d = x - self.ball_center
        nd = np.linalg.norm(d)
        if nd < self.radius * (1 - 1e-12) or nd == 0.0:
            return float(np.linalg.norm(r))
        # normal cone is the ray spanned by d
        t = max(float(r @ d) / (nd * nd), 0.0)
        return float(np.linalg.norm(r - t * d))

    def packed(self, n):
        """Flat representation consumed by the compiled kernels."""
        zeros = np.zeros(n)
        return (
            BASE_CODES[self.base],
            float(self.l1_weight),
            np.ascontiguousarray(self.lower if self.lower is not None else zeros, dtype=float),
            np.ascontiguousarray(self.upper if self.upper is not None else zeros, dtype=float),
            np.ascontiguousarray(self.ball_center if self.ball_center is not None else zeros, dtype=float),
            float(self.radius),
            float(self.quad_weight),
            np.ascontiguousarray(self._qc(n), dtype=float),
        )

    def to_json(self):
        d = {"kind": self.base}
        if self.base == "l1":
            d["weight"] = self.l1_weight
        elif self.base == "box":
            d["lower"], d["upper"] = self.lower.tolist(), self.upper.tolist()
        elif self.base == "ball":
            d["center"], d["radius"] = self.ball_center.tolist(), self.radius
        if self.quad_weight > 0:
            q = {"kind": "quadratic", "weight": self.quad_weight,
                 "center": None if self.quad_center is None else self.quad_center.tolist()}
            return q if self.base == "zero" else {"kind": "sum", "quadratic": q, "other": d}
        return d


def h_zero():
    return SimpleFunction()


def h_quadratic(center, weight):
    return SimpleFunction(quad_weight=float(weight), quad_center=_vec(center))


def h_l1(weight):
    return SimpleFunction(base="l1", l1_weight=float(weight))


def h_box(lower, upper):
    return SimpleFunction(base="box", lower=_vec(lower), upper=_vec(upper))


def h_ball(center, radius):
    return SimpleFunction(base="ball", ball_center=_vec(center), radius=float(radius))


def h_sum(quadratic, other):
    """Sum of a quadratic term with one of zero / l1 / box / ball."""
    if other.quad_weight > 0 or quadratic.base != "zero":
        raise ConfigurationError("h_sum takes one quadratic and one non-quadratic term")
    return SimpleFunction(
        base=other.base, quad_weight=quadratic.quad_weight, quad_center=quadratic.quad_center,
        l1_weight=other.l1_weight, lower=other.lower, upper=other.upper,
        ball_center=other.ball_center, radius=other.radius,
    )


def h_from_json(d):
    kind = d.get("kind", "zero")
    if kind == "zero":
        return h_zero()
    if kind == "quadratic":
        c = d.get("center")
        return SimpleFunction(quad_weight=float(d["weight"]), quad_center=None if c is None else _vec(c))
    if kind == "l1":
        return h_l1(d["weight"])
    if kind == "box":
        return h_box(d["lower"], d["upper"])
    if kind == "ball":
        return h_ball(d["center"], d["radius"])
    if kind == "sum":
        return h_sum(h_from_json(d["quadratic"]), h_from_json(d["other"]))
    raise ConfigurationError(f"unknown h kind {kind!r}")


def prox_h(h, z, alpha):
    return h.prox(z, alpha)


# --------------------------------------------------------------------------
# Instances
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ProblemParams:
    L_f: float
    M_f: float
    mu: float


@dataclass(frozen=True, eq=False)
class Reference:
    x_star: np.ndarray
    phi_star: float


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    f: FirstOrderOracle
    h: SimpleFunction
    x0: np.ndarray
    params: ProblemParams | None = None
    pair_candidates: tuple = ()
    reference: Reference | None = None
    name: str = "custom"
    M_f0: float | None = None  # smallest M with (M, 0) valid; None when infinite/unknown
    meta: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.f.dimension

    @property
    def d0(self):
        if self.reference is None:
            return None
        return float(np.linalg.norm(self.x0 - self.reference.x_star))

    def phi(self, x):
        return eval_phi(self, x)

    def to_json(self):
        d = {
            "name": self.name,
            "f": self.f.to_json(),
            "h": self.h.to_json(),
            "x0": self.x0.tolist(),
            "pairs": [list(p) for p in self.pair_candidates],
        }
        if self.params is not None:
            d["params"] = {"L_f": self.params.L_f, "M_f": self.params.M_f, "mu": self.params.mu}
        if self.reference is not None:
            d["reference"] = {"x_star": self.reference.x_star.tolist(), "phi_star": self.reference.phi_star}
        if self.M_f0 is not None:
            d["M_f0"] = self.M_f0
        return d


def eval_phi(instance, x):
    """phi(x) = f(x) + h(x); +inf outside dom h."""
    x = np.asarray(x, dtype=float)
    hv = instance.h(x)
    if math.isinf(hv):
        return math.inf
    return instance.f.value(x) + hv


def instance_from_json(d):
    f = oracle_from_json(d["f"])
    h = h_from_json(d.get("h", {"kind": "zero"}))
    n = f.dimension
    x0 = _vec(d.get("x0", np.zeros(n)), n)
    pairs = tuple((float(M), float(L)) for M, L in d.get("pairs", []))
    params = None
    if "params" in d:
        p = d["params"]
        params = ProblemParams(float(p["L_f"]), float(p["M_f"]), float(p.get("mu", h.mu)))
    elif pairs:
        M, L = pairs[0]
        params = ProblemParams(L, M, float(d.get("mu", h.mu)))
    ref = None
    if "reference" in d:
        r = d["reference"]
        xs = _vec(r["x_star"], n)
        ref = Reference(xs, float(r.get("phi_star", np.nan)))
    inst = ProblemInstance(f, h, x0, params, pairs, ref, d.get("name", "custom"), d.get("M_f0"))
    if ref is not None and not math.isfinite(ref.phi_star):
        inst = ProblemInstance(f, h, x0, params, pairs, Reference(ref.x_star, eval_phi(inst, ref.x_star)),
                               inst.name, inst.M_f0)
    if not math.isfinite(h(x0)):
        raise ConfigurationError("x0 is not in dom h")
    return inst


def load_instance(path):
    try:
        d = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read instance {path}: {exc}") from exc
    return instance_from_json(d)


# --------------------------------------------------------------------------
# Reference solutions
# --------------------------------------------------------------------------


def pwl_minimize(slopes, intercepts, mu=0.0, center=None, max_systems=200000):
    """Minimize max_i <a_i,u> + b_i + mu/2 ||u - c||^2 by KKT enumeration.

    Every support of size 1..n+1 is tried; the KKT system on the support is
    linear.  Returns None when enumeration would be too large.
    """
    A = np.atleast_2d(np.asarray(slopes, dtype=float))
    b = np.asarray(intercepts, dtype=float)
    m, n = A.shape
    c = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    sizes = range(1, min(m, n + 1) + 1)
    if sum(math.comb(m, k) for k in sizes) > max_systems:
        return None

    def objective(u):
        return float(np.max(A @ u + b)) + 0.5 * mu * float((u - c) @ (u - c))

    best = None
    for k in sizes:
        for S in itertools.combinations(range(m), k):
            AS = A[list(S)]
            # unknowns: u (n), s (1), w (k)
            K = np.zeros((n + k + 1, n + 1 + k))
            rhs = np.zeros(n + k + 1)
            K[:n, :n] = mu * np.eye(n)
            K[:n, n + 1:] = AS.T
            rhs[:n] = mu * c
            K[n:n + k, :n] = AS
            K[n:n + k, n] = -1.0
            rhs[n:n + k] = -b[list(S)]
            K[n + k, n + 1:] = 1.0
            rhs[n + k] = 1.0
            try:
                sol = np.linalg.solve(K, rhs)
            except np.linalg.LinAlgError:
                continue
            if not np.allclose(K @ sol, rhs, rtol=0, atol=1e-10):
                continue
            u, s, w = sol[:n], sol[n], sol[n + 1:]
            if np.any(w < -1e-12):
                continue
            if np.max(A @ u + b) > s + 1e-10 * (1 + abs(s)):
                continue
            val = objective(u)
            if best is None or val < best[1] - 1e-14:
                best = (u, val)
    return best


def _lasso_reference(A, b, weight, max_iter=200000):
    L = np.linalg.norm(A, 2) ** 2
    x = np.zeros(A.shape[1])
    yk, t = x.copy(), 1.0
    for _ in range(max_iter):
        g = A.T @ (A @ yk - b)
        z = yk - g / L
        xn = np.sign(z) * np.maximum(np.abs(z) - weight / L, 0.0)
        tn = 0.5 * (1 + math.sqrt(1 + 4 * t * t))
        if float((xn - x) @ (yk - xn)) > 0:  # adaptive restart
            tn, yk = 1.0, xn.copy()
        else:
            yk = xn + ((t - 1) / tn) * (xn - x)
        if np.max(np.abs(xn - x)) <= 1e-16 * (1 + np.max(np.abs(xn))):
            x = xn
            break
        x, t = xn, tn
    return x


# --------------------------------------------------------------------------
# Catalog
# --------------------------------------------------------------------------


def _random_pwl(n, rng, radius=1.0):
    k = n + 2
    slopes = np.vstack([radius * np.eye(n), -radius * np.eye(n), rng.normal(size=(k, n))])
    intercepts = -rng.uniform(0.0, 1.0, size=slopes.shape[0])
    intercepts[int(rng.integers(slopes.shape[0]))] = 0.0
    return slopes, intercepts


def make_benchmark(name, n=None, seed=0):
    """Build a catalog instance addressed by (name, n, seed)."""
    rng = np.random.default_rng(seed)
    if name == "abs1d":
        if n not in (None, 1):
            raise ConfigurationError("abs1d is one-dimensional")
        f = AbsValue(1)
        return ProblemInstance(
            f, h_zero(), np.array([1.0]), ProblemParams(0.0, 1.0, 0.0), ((1.0, 0.0),),
            Reference(np.array([0.0]), 0.0), name, M_f0=1.0,
        )
    n = 2 if n is None else int(n)
    if n < 1:
        raise ConfigurationError("dimension must be positive")
    if name == "maxaffine":
        slopes, intercepts = _random_pwl(n, rng)
        f = MaxAffine(slopes, intercepts)
        G = float(np.max(np.linalg.norm(slopes, axis=1)))
        x0 = rng.uniform(-2.0, 2.0, size=n)
        ref = None
        if n <= 2:
            u, val = pwl_minimize(slopes, intercepts)
            ref = Reference(u, f.value(u))
        return ProblemInstance(f, h_zero(), x0, ProblemParams(0.0, G, 0.0), ((G, 0.0),), ref, name, M_f0=G,
                               meta={"seed": seed})
    if name == "hybrid_norm":
        f = HybridNorm(n)
        x0 = rng.uniform(-2.0, 2.0, size=n)
        return ProblemInstance(f, h_zero(), x0, ProblemParams(1.0, 1.0, 0.0), ((1.0, 1.0),),
                               Reference(np.zeros(n), 0.0), name, M_f0=None, meta={"seed": seed})
    if name == "lasso_like":
        m = 2 * n
        A = rng.normal(size=(m, n)) / math.sqrt(m)
        x_true = np.where(rng.uniform(size=n) < 0.5, rng.normal(size=n), 0.0)
        b = A @ x_true + 0.1 * rng.normal(size=m)
        weight = 0.1
        f = LeastSquares(A, b)
        h = h_l1(weight)
        L = float(np.linalg.norm(A, 2) ** 2)
        xs = _lasso_reference(A, b, weight)
        inst = ProblemInstance(f, h, np.zeros(n), ProblemParams(L, 0.0, 0.0), ((0.0, L),), None, name,
                               M_f0=None, meta={"seed": seed})
        return ProblemInstance(f, h, np.zeros(n), inst.params, inst.pair_candidates,
                               Reference(xs, eval_phi(inst, xs)), name, None, {"seed": seed})
    if name == "strongly_convex_pwl":
        slopes, intercepts = _random_pwl(n, rng)
        f = MaxAffine(slopes, intercepts)
        mu = 1.0
        center = rng.uniform(-1.0, 1.0, size=n)
        h = h_quadratic(center, mu)
        G = float(np.max(np.linalg.norm(slopes, axis=1)))
        x0 = rng.uniform(-2.0, 2.0, size=n)
        best = pwl_minimize(slopes, intercepts, mu, center)
        ref = None
        if best is not None:
            u = best[0]
            ref = Reference(u, f.value(u) + h(u))
        return ProblemInstance(f, h, x0, ProblemParams(0.0, G, mu), ((G, 0.0),), ref, name, M_f0=G,
                               meta={"seed": seed})
    raise ConfigurationError(f"unknown benchmark {name!r}; choose from {', '.join(BENCHMARKS)}")


CATALOG_SPECS = ("abs1d,1,0", "maxaffine,2,0", "hybrid_norm,2,0", "lasso_like,5,0", "strongly_convex_pwl,2,0")


def catalog():
    """The five reference instances used by the audits and the bench."""
    return [parse_instance_spec(s) for s in CATALOG_SPECS]


def parse_instance_spec(spec):
    """Resolve 'name[,n[,seed]]' or a JSON path into an instance."""
    if isinstance(spec, dict):
        if "path" in spec:
            return load_instance(spec["path"])
        if "f" in spec:
            return instance_from_json(spec)
        return make_benchmark(spec["name"], spec.get("n"), int(spec.get("seed", 0)))
    spec = str(spec)
    if spec.endswith(".json"):
        return load_instance(spec)
    parts = spec.split(",")
    name = parts[0]
    n = int(parts[1]) if len(parts) > 1 and parts[1] else None
    seed = int(parts[2]) if len(parts) > 2 else 0
    return make_benchmark(name, n, seed)
