"""Prox subproblem  min_u  Gamma(u) + |u - x_c|^2 / (2 lam)  for each model kind."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .errors import ConfigurationError, SolverFailure
from .model import MultiCut, OneCut, TwoCuts, model_eval

TOL_SUB = 1e-10
MAX_INNER = 10000
BISECTION_STEPS = 200


@dataclass
class SubproblemSolution:
    x: np.ndarray
    value: float  # primal Gamma^lam(x)
    multipliers: np.ndarray
    residual: float
    inner_iterations: int
    gap: float = 0.0


def _gap_ok(gap, value, tol):
    return gap <= tol * max(1.0, abs(value))


def solve_affine(slope, intercept, h, x_c, lam, hp=None):
    """Closed form for one affine piece plus h."""
    if not lam > 0:
        raise ConfigurationError("lambda must be positive")
    x_c = np.asarray(x_c, dtype=float)
    if hp is None:
        hp = h.packed(x_c.shape[0])
    x, val = kernels.one_cut(np.asarray(slope, dtype=float), float(intercept), x_c, float(lam), hp)
    return SubproblemSolution(x, val, np.ones(1), 0.0, 0, 0.0)


def solve_one_cut(agg, h, x_c, lam, hp=None):
    return solve_affine(agg.slope, agg.intercept, h, x_c, lam, hp)


def solve_two_cut(agg, last, h, x_c, lam, hp=None, tol_sub=TOL_SUB):
    """Two pieces via bisection on the derivative of the concave dual in theta."""
    if not lam > 0:
        raise ConfigurationError("lambda must be positive")
    x_c = np.asarray(x_c, dtype=float)
    if hp is None:
        hp = h.packed(x_c.shape[0])
    x, theta, primal, dual, it = kernels.two_cut(
        np.asarray(agg.slope, dtype=float), float(agg.intercept),
        np.asarray(last.grad, dtype=float), float(last.intercept),
        x_c, float(lam), hp, BISECTION_STEPS)
    gap = primal - dual
    sol = SubproblemSolution(x, primal, np.array([theta, 1.0 - theta]), 0.0, it, gap)
    if not _gap_ok(gap, primal, tol_sub):
        raise SolverFailure(f"two-cut bisection stalled with gap {gap:.3e}", best=sol)
    return sol


def _affine_map(h, x_c, lam, u):
    """Locally affine description u(s) = a + c * P_F s of the prox map at u.

    Returns (a, c, free) or None when the map is not locally affine (ball
    boundary, handled separately).
    """
    n = x_c.shape[0]
    q = h.quad_weight
    qc = h._qc(n)
    denom = 1.0 + lam * q
    alpha = lam / denom
    a = (x_c + lam * q * qc) / denom
    coef = -lam / denom
    free = np.ones(n, dtype=bool)
    if h.base == "l1":
        free = u != 0.0
        a = np.where(free, a - alpha * h.l1_weight * np.sign(u), 0.0)
    elif h.base == "box":
        tol = 1e-12 * (1.0 + np.abs(h.lower) + np.abs(h.upper))
        at_lo = u <= h.lower + tol
        at_hi = u >= h.upper - tol
        free = ~(at_lo | at_hi)
        a = np.where(at_lo, h.lower, np.where(at_hi, h.upper, a))
    elif h.base == "ball":
        if np.linalg.norm(u - h.ball_center) >= h.radius * (1 - 1e-10):
            return None
    return a, coef, free


def _dual_point(G, b, w, x_c, lam, hp):
    x, val = kernels.one_cut(G.T @ w, float(b @ w), x_c, lam, hp)
    vals = G @ x + b
    primal = val - float(b @ w) - float((G.T @ w) @ x) + float(vals.max())
    return x, val, primal


def _drop_parallel(G, b, S):
    """Among selected pieces with identical slopes keep the highest one."""
    keep = {}
    for i in np.flatnonzero(S):
        key = G[i].tobytes()
        j = keep.get(key)
        if j is None or b[i] > b[j]:
            keep[key] = i
    out = np.zeros_like(S)
    out[list(keep.values())] = True
    return out


def _support_weights(GS, GF, bS, a, coef):
    """Weights w_S (and level) with G_S u + b_S constant and sum w_S = 1,
    where u = a + coef * P_F G_S^T w."""
    k = GS.shape[0]
    K = np.zeros((k + 1, k + 1))
    K[:k, :k] = coef * (GF @ GS.T)
    K[:k, k] = -1.0
    K[k, :k] = 1.0
    rhs = np.concatenate([-(GS @ a) - bS, [1.0]])
    return np.linalg.lstsq(K, rhs, rcond=None)[0][:k]


def _ball_support_weights(GS, bS, h, x_c, lam):
    """Support weights when the minimizer sits on the ball boundary.

    For a multiplier nu >= 0 on the sphere the minimizer is affine in w;
    the distance to the center decreases in nu, so nu is found by bisection.
    """
    n = x_c.shape[0]
    q = h.quad_weight
    beta = q + 1.0 / lam
    p = q * h._qc(n) + x_c / lam
    c, r = h.ball_center, h.radius

    def at(nu):
        den = beta + nu
        a = (p + nu * c) / den
        wS = _support_weights(GS, GS, bS, a, -1.0 / den)
        u = a - (GS.T @ wS) / den
        return wS, float(np.linalg.norm(u - c)) - r

    w0, d0 = at(0.0)
    if d0 <= 0.0:
        return w0
    lo, hi = 0.0, beta
    for _ in range(200):
        _, d = at(hi)
        if d <= 0.0:
            break
        lo, hi = hi, 2.0 * hi
    else:
        return None
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if at(mid)[1] > 0.0:
            lo = mid
        else:
            hi = mid
    return at(hi)[0]


def _polish(G, b, h, x_c, lam, hp, x, w):
    """Solve the KKT system on a guessed active set; None if every guess fails."""
    amap = _affine_map(h, x_c, lam, x)
    if amap is None and h.base != "ball":
        return None
    vals = G @ x + b
    mx = float(vals.max())
    scale = 1.0 + abs(mx)
    best = None
    tried = set()
    for S in (w > 1e-9, vals >= mx - 1e-9 * scale, (w > 1e-12) | (vals >= mx - 1e-7 * scale)):
        key = S.tobytes()
        if key in tried or not S.any():
            continue
        tried.add(key)
        S = _drop_parallel(G, b, S)
        GS = G[S]
        if amap is None:
            wS = _ball_support_weights(GS, b[S], h, x_c, lam)
            if wS is None:
                continue
        else:
            a, coef, free = amap
            wS = _support_weights(GS, GS * free, b[S], a, coef)
        if np.any(wS < -1e-10):
            continue
        wn = np.zeros_like(w)
        wn[S] = np.maximum(wS, 0.0)
        tot = wn.sum()
        if not tot > 0:
            continue
        wn /= tot
        xn, dual, primal = _dual_point(G, b, wn, x_c, lam, hp)
        gap = primal - dual
        if best is None or gap < best[3]:
            best = (xn, wn, primal, gap)
    return best


def solve_multi_cut(G, b, h, x_c, lam, tol_sub=TOL_SUB, max_inner=MAX_INNER, w0=None, hp=None):
    """Cut-set subproblem through its simplex dual.

    Accelerated projected gradient ascent identifies the active pieces; a
    KKT solve on that support then sharpens the minimizer.  Success requires
    a certified primal-dual gap below tol_sub.
    """
    if not lam > 0:
        raise ConfigurationError("lambda must be positive")
    G = np.ascontiguousarray(G, dtype=float)
    b = np.ascontiguousarray(b, dtype=float)
    x_c = np.asarray(x_c, dtype=float)
    m = G.shape[0]
    if m == 0:
        raise ConfigurationError("no cuts")
    if hp is None:
        hp = h.packed(x_c.shape[0])
    if m == 1:
        x, val = kernels.one_cut(G[0], float(b[0]), x_c, float(lam), hp)
        return SubproblemSolution(x, val, np.ones(1), 0.0, 0, 0.0)
    Gc = G - G.mean(axis=0)
    nrm = float(np.linalg.norm(Gc, 2)) ** 2
    step0 = 1.0 / (lam * nrm) if nrm > 1e-300 else 1e300
    step0 = min(step0, 1e300)
    if w0 is None or len(w0) != m:
        w = np.full(m, 1.0 / m)
    else:
        w = np.asarray(w0, dtype=float)
    total = 0
    chunk = 25
    best = None
    while True:
        budget = min(chunk, max_inner - total)
        x, w, primal, dual, it = kernels.multi_cut(G, b, x_c, float(lam), hp, w, step0, tol_sub, budget)
        total += max(it, 1) if budget > 0 else 0
        gap = primal - dual
        if best is None or gap < best.gap:
            best = SubproblemSolution(x, primal, w, math.nan, total, gap)
        pol = _polish(G, b, h, x_c, float(lam), hp, x, w)
        if pol is not None and _gap_ok(pol[3], pol[2], tol_sub) and pol[3] <= max(gap, 1e-14 * max(1.0, abs(primal))):
            xp, wp, pp, gp = pol
            return SubproblemSolution(xp, pp, wp, 0.0, total, gp)
        if _gap_ok(gap, primal, tol_sub):
            best.inner_iterations = total
            return best
        if total >= max_inner:
            raise SolverFailure(f"cut-set dual stopped at gap {best.gap:.3e} after {total} iterations", best=best)
        chunk *= 2


def solve_model(model, x_c, lam, hp=None, tol_sub=TOL_SUB, max_inner=MAX_INNER, w0=None):
    """Dispatch on the model kind."""
    if isinstance(model, OneCut):
        return solve_one_cut(model.agg, model.h, x_c, lam, hp)
    if isinstance(model, TwoCuts):
        return solve_two_cut(model.agg, model.last, model.h, x_c, lam, hp, tol_sub)
    if isinstance(model, MultiCut):
        G, b = model.pieces()
        return solve_multi_cut(G, b, model.h, x_c, lam, tol_sub, max_inner, w0, hp)
    raise ConfigurationError(f"unknown model {type(model).__name__}")


def subproblem_value(model, x_c, lam, u):
    u = np.asarray(u, dtype=float)
    d = u - x_c
    return model_eval(model, u) + float(d @ d) / (2.0 * lam)


def stationarity_residual(model, h, x_c, lam, x, multipliers):
    """dist(0, sum_i w_i g_i + dh(x) + (x - x_c)/lam) for the given multipliers."""
    G, _ = model.pieces()
    w = np.asarray(multipliers, dtype=float)
    v = -(G.T @ w + (np.asarray(x, dtype=float) - x_c) / lam)
    return h.subdiff_distance(x, v)


# --------------------------------------------------------------------------
# Grid oracle
# --------------------------------------------------------------------------


class BoxTooSmall(ConfigurationError):
    """The grid minimizer sits on the boundary of the search box."""


def _second_coord_range(h, x1, lo2, hi2):
    """Feasible interval for the second coordinate given the first."""
    lo = np.full_like(x1, lo2)
    hi = np.full_like(x1, hi2)
    if h.base == "box":
        lo = np.maximum(lo, h.lower[1])
        hi = np.minimum(hi, h.upper[1])
        bad = (x1 < h.lower[0]) | (x1 > h.upper[0])
        hi = np.where(bad, lo - 1.0, hi)
    elif h.base == "ball":
        c, r = h.ball_center, h.radius
        rad2 = r * r - (x1 - c[0]) ** 2
        half = np.sqrt(np.maximum(rad2, 0.0))
        lo = np.maximum(lo, c[1] - half)
        hi = np.where(rad2 >= 0, np.minimum(hi, c[1] + half), lo - 1.0)
    return lo, hi


def brute_force_oracle(model, x_c, lam, box, resolution=1e-9, points=101):
    """Grid minimization of Gamma^lam over ``box`` = (lower, upper).

    One or two dimensions.  The first coordinate is searched on a grid that
    is zoomed around the discrete minimizer (safe for a convex function of
    one variable).  In two dimensions every grid value is the exact line
    minimum over the second coordinate, found by vectorized ternary search,
    so the outer function is again convex.  Raises BoxTooSmall when the
    minimizer touches the search box.
    """
    x_c = np.asarray(x_c, dtype=float)
    n = x_c.shape[0]
    if n > 2:
        raise ConfigurationError("grid oracle supports dimension <= 2")
    G, b = model.pieces()
    h = model.h
    lo = np.broadcast_to(np.asarray(box[0], dtype=float), (n,)).copy()
    hi = np.broadcast_to(np.asarray(box[1], dtype=float), (n,)).copy()

    def evaluate(P):
        vals = np.max(P @ G.T + b, axis=1) + h.values(P)
        D = P - x_c
        return vals + np.einsum("ij,ij->i", D, D) / (2.0 * lam)

    def line_min(x1):
        if n == 1:
            P = x1[:, None]
            return P, evaluate(P)
        a, c = _second_coord_range(h, x1, lo[1], hi[1])
        ok = c >= a
        a = np.where(ok, a, lo[1])
        c = np.where(ok, c, lo[1])
        for _ in range(200):
            if np.all(c - a <= 1e-13 * (1.0 + np.abs(a))):
                break
            m1 = a + (c - a) / 3.0
            m2 = c - (c - a) / 3.0
            f1 = evaluate(np.stack([x1, m1], axis=1))
            f2 = evaluate(np.stack([x1, m2], axis=1))
            left = f1 <= f2
            c = np.where(left, m2, c)
            a = np.where(left, a, m1)
        P = np.stack([x1, 0.5 * (a + c)], axis=1)
        vals = evaluate(P)
        vals[~ok] = math.inf
        return P, vals

    a1, c1 = lo[0], hi[0]
    first = True
    while True:
        grid = np.linspace(a1, c1, points)
        P, vals = line_min(grid)
        i = int(np.argmin(vals))
        if not math.isfinite(vals[i]):
            raise BoxTooSmall("no feasible grid point in the box")
        if first and (i == 0 or i == points - 1):
            raise BoxTooSmall("grid minimizer on the box boundary")
        if n == 2:
            edge = 1e-6 * (hi[1] - lo[1])
            if P[i, 1] <= lo[1] + edge or P[i, 1] >= hi[1] - edge:
                raise BoxTooSmall("line minimizer on the box boundary")
        first = False
        spacing = (c1 - a1) / (points - 1)
        if spacing <= resolution:
            return P[i].copy(), float(vals[i])
        a1 = grid[max(i - 1, 0)]
        c1 = grid[min(i + 1, points - 1)]
