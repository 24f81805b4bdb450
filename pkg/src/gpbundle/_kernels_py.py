"""Reference implementation of the numerical kernels.

The compiled module ``_kernels`` exposes the same functions with the same
signatures.  ``hp`` is the tuple returned by ``SimpleFunction.packed``:
(code, l1_weight, lower, upper, ball_center, radius, quad_weight, quad_center)
with code 0 = zero, 1 = l1, 2 = box, 3 = ball.
"""
import math

import numpy as np

FEAS_TOL = 1e-12


def prox(z, alpha, hp):
    code, w1, lo, hi, bc, rad, qw, qc = hp
    if qw > 0.0:
        s = 1.0 + alpha * qw
        z = (z + (alpha * qw) * qc) / s
        alpha = alpha / s
    if code == 0:
        return np.array(z, dtype=float)
    if code == 1:
        t = alpha * w1
        return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)
    if code == 2:
        return np.minimum(np.maximum(z, lo), hi)
    d = z - bc
    r = math.sqrt(float(d @ d))
    if r <= rad:
        return np.array(z, dtype=float)
    return bc + (rad / r) * d


def h_eval(u, hp):
    code, w1, lo, hi, bc, rad, qw, qc = hp
    val = 0.0
    if code == 1:
        val = w1 * float(np.abs(u).sum())
    elif code == 2:
        tol = FEAS_TOL * (1.0 + np.abs(lo) + np.abs(hi))
        if np.any(u < lo - tol) or np.any(u > hi + tol):
            return math.inf
    elif code == 3:
        d = u - bc
        if math.sqrt(float(d @ d)) > rad * (1 + FEAS_TOL) + FEAS_TOL:
            return math.inf
    if qw > 0.0:
        d = u - qc
        val += 0.5 * qw * float(d @ d)
    return val


def project_simplex(v):
    """Euclidean projection onto the unit simplex (sort based)."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, v.shape[0] + 1)
    rho = np.nonzero(u - css / ind > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def one_cut(slope, intercept, xc, lam, hp):
    """Minimize <slope,u> + intercept + h(u) + |u - xc|^2/(2 lam); return (u, value)."""
    u = prox(xc - lam * slope, lam, hp)
    d = u - xc
    val = float(slope @ u) + intercept + h_eval(u, hp) + float(d @ d) / (2.0 * lam)
    return u, val


def two_cut(s1, b1, s2, b2, xc, lam, hp, max_iter):
    """Two-piece subproblem by bisection on the dual derivative.

    Returns (u, theta, primal value, dual value, iterations); theta is the
    weight on the first piece.
    """
    ds = s1 - s2
    db = b1 - b2
    u = prox(xc - lam * s1, lam, hp)
    if float(ds @ u) + db >= 0.0:
        theta = 1.0
        it = 0
    else:
        u = prox(xc - lam * s2, lam, hp)
        if float(ds @ u) + db <= 0.0:
            theta = 0.0
            it = 0
        else:
            lo_t, hi_t = 0.0, 1.0
            it = 0
            while it < max_iter:
                mid = 0.5 * (lo_t + hi_t)
                if mid <= lo_t or mid >= hi_t:
                    break
                s = s2 + mid * ds
                u = prox(xc - lam * s, lam, hp)
                if float(ds @ u) + db > 0.0:
                    lo_t = mid
                else:
                    hi_t = mid
                it += 1
            theta = 0.5 * (lo_t + hi_t)
            u = prox(xc - lam * (s2 + theta * ds), lam, hp)
    d = u - xc
    hv = h_eval(u, hp)
    quad = float(d @ d) / (2.0 * lam)
    v1 = float(s1 @ u) + b1
    v2 = float(s2 @ u) + b2
    primal = max(v1, v2) + hv + quad
    dual = theta * v1 + (1.0 - theta) * v2 + hv + quad
    return u, theta, primal, dual, it


def _dual_at(G, b, w, xc, lam, hp):
    s = G.T @ w
    u = prox(xc - lam * s, lam, hp)
    vals = G @ u + b
    d = u - xc
    rest = h_eval(u, hp) + float(d @ d) / (2.0 * lam)
    return u, vals, float(w @ vals) + rest, float(vals.max()) + rest


def multi_cut(G, b, xc, lam, hp, w0, step0, tol, max_iter):
    """Accelerated projected gradient ascent on the simplex dual.

    Returns (u, w, primal, dual, iterations) for the best certified pair.
    Uses backtracking on the step and function-value restarts.
    """
    w = project_simplex(w0)
    u, vals, q, p = _dual_at(G, b, w, xc, lam, hp)
    best = (u, w, p, q)
    if p - q <= tol:
        return u, w, p, q, 0
    step = step0
    v = w.copy()
    qv, gv = q, vals
    t = 1.0
    it = 0
    while it < max_iter:
        it += 1
        while True:
            wn = project_simplex(v + step * gv)
            un, valsn, qn, pn = _dual_at(G, b, wn, xc, lam, hp)
            dw = wn - v
            if qn >= qv + float(gv @ dw) - float(dw @ dw) / (2.0 * step) - 1e-15 * (1 + abs(qv)):
                break
            step *= 0.5
            if step < 1e-300:
                break
        if pn - qn < best[2] - best[3]:
            best = (un, wn, pn, qn)
            if pn - qn <= tol:
                break
        if qn < q:
            # restart momentum
            t = 1.0
            v = w.copy()
            _, gv, qv, _ = _dual_at(G, b, v, xc, lam, hp)
            continue
        tn = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        v = wn + ((t - 1.0) / tn) * (wn - w)
        w, q, t = wn, qn, tn
        _, gv, qv, _ = _dual_at(G, b, v, xc, lam, hp)
    u, w, p, q = best
    return u, w, p, q, it


def _oracle(okind, oA, ob, fcall, x):
    if okind == 0:
        return float(np.abs(x).sum()), np.sign(x)
    if okind == 1:
        vals = oA @ x + ob
        i = int(np.argmax(vals))
        return float(vals[i]), oA[i].copy()
    if okind == 2:
        r = math.sqrt(float(x @ x))
        g = np.zeros_like(x) if r == 0.0 else x / r + x
        return r + 0.5 * r * r, g
    if okind == 3:
        res = oA @ x - ob
        return 0.5 * float(res @ res), oA.T @ res
    return fcall(x)


def e1_loop(okind, oA, ob, fcall, hp, x0, lam, eps, tau, max_iter, target, adaptive=0, max_updates=60):
    """Whole one-cut bundle loop.

    With ``adaptive`` = 0 the aggregation weight is fixed at ``tau``.  With
    ``adaptive`` = 1 it starts at ``tau`` and a null step whose new gap fails
    t+ <= tau t + (1 - tau) eps/4 is redone with tau = (1 + tau)/2.

    Returns (X, y_idx, c_idx, m, t, phi_x, taus, status, oracle_calls,
    prox_calls, tau_updates); status 0 means the target was reached, 1 that
    max_iter ran out, 2 that more than ``max_updates`` escalations happened.
    """
    n = x0.shape[0]
    X = [np.array(x0, dtype=float)]
    y_idx, c_idx = [0], [0]
    fx, g = _oracle(okind, oA, ob, fcall, X[0])
    calls, proxes, updates = 1, 0, 0
    phi_x = [fx + h_eval(X[0], hp)]
    m, t, taus = [phi_x[0]], [0.0], [tau]

    def done(status):
        return (np.array(X), np.array(y_idx), np.array(c_idx), np.array(m), np.array(t), np.array(phi_x),
                np.array(taus), status, calls, proxes, updates)

    if phi_x[0] <= target:
        return done(0)
    half = 0.5 * eps
    quarter = 0.25 * eps
    inv2lam = 1.0 / (2.0 * lam)
    slope = np.zeros(n)
    icpt = 0.0
    yi, ci = 0, 0
    j = 0
    while j < max_iter:
        x = X[j]
        c_int = fx - float(g @ x)
        serious = t[j] <= half
        if serious:
            ci = j
        xc = X[ci]
        while True:
            if serious:
                s_new, b_new = g, c_int
            else:
                s_new = tau * slope + (1.0 - tau) * g
                b_new = tau * icpt + (1.0 - tau) * c_int
            u, val = one_cut(s_new, b_new, xc, lam, hp)
            proxes += 1
            fu, gu = _oracle(okind, oA, ob, fcall, u)
            calls += 1
            pu = fu + h_eval(u, hp)
            d = u - xc
            plx = pu + float(d @ d) * inv2lam
            d = X[yi] - xc
            ply = phi_x[yi] + float(d @ d) * inv2lam
            yn = yi
            if plx < ply:
                yn, ply = j + 1, plx
            tn = ply - val
            if adaptive and not serious and tn > tau * t[j] + (1.0 - tau) * quarter:
                updates += 1
                if updates > max_updates:
                    return done(2)
                tau = 0.5 * (1.0 + tau)
                continue
            break
        slope, icpt = s_new, b_new
        fx, g = fu, gu
        yi = yn
        j += 1
        X.append(u)
        phi_x.append(pu)
        y_idx.append(yi)
        c_idx.append(ci)
        m.append(val)
        t.append(tn)
        taus.append(tau)
        if phi_x[yi] <= target:
            return done(0)
    return done(1)
