# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; same API as ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, INFINITY
from libc.stdlib cimport qsort

cnp.import_array()

cdef double FEAS_TOL = 1e-12


cdef int _cmp_desc(const void* a, const void* b) noexcept nogil:
    cdef double x = (<double*>a)[0]
    cdef double y = (<double*>b)[0]
    if x < y:
        return 1
    if x > y:
        return -1
    return 0


cdef struct HP:
    int code
    double w1
    double* lo
    double* hi
    double* bc
    double rad
    double qw
    double* qc


cdef class _Packed:
    cdef HP hp
    cdef object keep

    def __cinit__(self, tuple t):
        cdef double[::1] lo = np.ascontiguousarray(t[2], dtype=float)
        cdef double[::1] hi = np.ascontiguousarray(t[3], dtype=float)
        cdef double[::1] bc = np.ascontiguousarray(t[4], dtype=float)
        cdef double[::1] qc = np.ascontiguousarray(t[7], dtype=float)
        self.keep = (lo, hi, bc, qc)
        self.hp.code = t[0]
        self.hp.w1 = t[1]
        self.hp.rad = t[5]
        self.hp.qw = t[6]
        self.hp.lo = &lo[0] if lo.shape[0] else NULL
        self.hp.hi = &hi[0] if hi.shape[0] else NULL
        self.hp.bc = &bc[0] if bc.shape[0] else NULL
        self.hp.qc = &qc[0] if qc.shape[0] else NULL


cdef inline double _sign(double x) noexcept nogil:
    if x > 0:
        return 1.0
    if x < 0:
        return -1.0
    return 0.0


cdef void _prox(const double* z, double alpha, HP* hp, double* out, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i
    cdef double s, t, r, a
    a = alpha
    if hp.qw > 0.0:
        s = 1.0 + alpha * hp.qw
        for i in range(n):
            out[i] = (z[i] + (alpha * hp.qw) * hp.qc[i]) / s
        a = alpha / s
    else:
        for i in range(n):
            out[i] = z[i]
    if hp.code == 1:
        t = a * hp.w1
        for i in range(n):
            r = fabs(out[i]) - t
            out[i] = _sign(out[i]) * (r if r > 0.0 else 0.0)
    elif hp.code == 2:
        for i in range(n):
            if out[i] < hp.lo[i]:
                out[i] = hp.lo[i]
            if out[i] > hp.hi[i]:
                out[i] = hp.hi[i]
    elif hp.code == 3:
        r = 0.0
        for i in range(n):
            r += (out[i] - hp.bc[i]) * (out[i] - hp.bc[i])
        r = sqrt(r)
        if r > hp.rad:
            for i in range(n):
                out[i] = hp.bc[i] + (hp.rad / r) * (out[i] - hp.bc[i])


cdef double _h_eval(const double* u, HP* hp, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i
    cdef double val = 0.0, tol, r
    if hp.code == 1:
        for i in range(n):
            val += fabs(u[i])
        val *= hp.w1
    elif hp.code == 2:
        for i in range(n):
            tol = FEAS_TOL * (1.0 + fabs(hp.lo[i]) + fabs(hp.hi[i]))
            if u[i] < hp.lo[i] - tol or u[i] > hp.hi[i] + tol:
                return INFINITY
    elif hp.code == 3:
        r = 0.0
        for i in range(n):
            r += (u[i] - hp.bc[i]) * (u[i] - hp.bc[i])
        if sqrt(r) > hp.rad * (1 + FEAS_TOL) + FEAS_TOL:
            return INFINITY
    if hp.qw > 0.0:
        r = 0.0
        for i in range(n):
            r += (u[i] - hp.qc[i]) * (u[i] - hp.qc[i])
        val += 0.5 * hp.qw * r
    return val


def prox(z, double alpha, tuple hp):
    cdef _Packed p = _Packed(hp)
    cdef double[::1] zz = np.ascontiguousarray(z, dtype=float)
    cdef Py_ssize_t n = zz.shape[0]
    out = np.empty(n)
    cdef double[::1] o = out
    _prox(&zz[0], alpha, &p.hp, &o[0], n)
    return out


def h_eval(u, tuple hp):
    cdef _Packed p = _Packed(hp)
    cdef double[::1] uu = np.ascontiguousarray(u, dtype=float)
    return _h_eval(&uu[0], &p.hp, uu.shape[0])


cdef void _project_simplex(const double* v, double* out, double* buf, Py_ssize_t m) noexcept nogil:
    cdef Py_ssize_t i, rho = 0
    cdef double css = 0.0, theta = 0.0, c
    for i in range(m):
        buf[i] = v[i]
    qsort(buf, m, sizeof(double), _cmp_desc)
    for i in range(m):
        css += buf[i]
        c = (css - 1.0) / (i + 1.0)
        if buf[i] - c > 0:
            rho = i
            theta = c
    for i in range(m):
        c = v[i] - theta
        out[i] = c if c > 0.0 else 0.0


def project_simplex(v):
    cdef double[::1] vv = np.ascontiguousarray(v, dtype=float)
    cdef Py_ssize_t m = vv.shape[0]
    out = np.empty(m)
    cdef double[::1] o = out
    cdef double[::1] buf = np.empty(m)
    _project_simplex(&vv[0], &o[0], &buf[0], m)
    return out


cdef inline double _dot(const double* a, const double* b, Py_ssize_t n) noexcept nogil:
    cdef double s = 0.0
    cdef Py_ssize_t i
    for i in range(n):
        s += a[i] * b[i]
    return s


cdef inline double _quad(const double* u, const double* xc, double lam, Py_ssize_t n) noexcept nogil:
    cdef double s = 0.0
    cdef Py_ssize_t i
    for i in range(n):
        s += (u[i] - xc[i]) * (u[i] - xc[i])
    return s / (2.0 * lam)


def one_cut(slope, double intercept, xc, double lam, tuple hp):
    cdef _Packed p = _Packed(hp)
    cdef double[::1] s = np.ascontiguousarray(slope, dtype=float)
    cdef double[::1] c = np.ascontiguousarray(xc, dtype=float)
    cdef Py_ssize_t n = c.shape[0], i
    cdef double[::1] z = np.empty(n)
    out = np.empty(n)
    cdef double[::1] u = out
    for i in range(n):
        z[i] = c[i] - lam * s[i]
    _prox(&z[0], lam, &p.hp, &u[0], n)
    cdef double val = _dot(&s[0], &u[0], n) + intercept + _h_eval(&u[0], &p.hp, n) + _quad(&u[0], &c[0], lam, n)
    return out, val


cdef void _u_of(const double* s, const double* c, double lam, HP* hp, double* z, double* u, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i
    for i in range(n):
        z[i] = c[i] - lam * s[i]
    _prox(z, lam, hp, u, n)


def two_cut(s1, double b1, s2, double b2, xc, double lam, tuple hp, int max_iter):
    cdef _Packed p = _Packed(hp)
    cdef double[::1] a1 = np.ascontiguousarray(s1, dtype=float)
    cdef double[::1] a2 = np.ascontiguousarray(s2, dtype=float)
    cdef double[::1] c = np.ascontiguousarray(xc, dtype=float)
    cdef Py_ssize_t n = c.shape[0], i
    cdef double[::1] ds = np.empty(n)
    cdef double[::1] s = np.empty(n)
    cdef double[::1] z = np.empty(n)
    out = np.empty(n)
    cdef double[::1] u = out
    cdef double db = b1 - b2, theta, lo_t, hi_t, mid
    cdef int it = 0
    for i in range(n):
        ds[i] = a1[i] - a2[i]
    _u_of(&a1[0], &c[0], lam, &p.hp, &z[0], &u[0], n)
    if _dot(&ds[0], &u[0], n) + db >= 0.0:
        theta = 1.0
    else:
        _u_of(&a2[0], &c[0], lam, &p.hp, &z[0], &u[0], n)
        if _dot(&ds[0], &u[0], n) + db <= 0.0:
            theta = 0.0
        else:
            lo_t = 0.0
            hi_t = 1.0
            while it < max_iter:
                mid = 0.5 * (lo_t + hi_t)
                if mid <= lo_t or mid >= hi_t:
                    break
                for i in range(n):
                    s[i] = a2[i] + mid * ds[i]
                _u_of(&s[0], &c[0], lam, &p.hp, &z[0], &u[0], n)
                if _dot(&ds[0], &u[0], n) + db > 0.0:
                    lo_t = mid
                else:
                    hi_t = mid
                it += 1
            theta = 0.5 * (lo_t + hi_t)
            for i in range(n):
                s[i] = a2[i] + theta * ds[i]
            _u_of(&s[0], &c[0], lam, &p.hp, &z[0], &u[0], n)
    cdef double hv = _h_eval(&u[0], &p.hp, n)
    cdef double quad = _quad(&u[0], &c[0], lam, n)
    cdef double v1 = _dot(&a1[0], &u[0], n) + b1
    cdef double v2 = _dot(&a2[0], &u[0], n) + b2
    cdef double primal = (v1 if v1 > v2 else v2) + hv + quad
    cdef double dual = theta * v1 + (1.0 - theta) * v2 + hv + quad
    return out, theta, primal, dual, it


cdef struct Work:
    double* G
    double* b
    double* xc
    double* s
    double* z
    Py_ssize_t m
    Py_ssize_t n
    double lam


cdef void _dual_at(Work* wk, HP* hp, const double* w, double* u, double* vals, double* q, double* p) noexcept nogil:
    cdef Py_ssize_t i, k, n = wk.n, m = wk.m
    cdef double mx, rest, qq = 0.0
    for k in range(n):
        wk.s[k] = 0.0
    for i in range(m):
        if w[i] != 0.0:
            for k in range(n):
                wk.s[k] += w[i] * wk.G[i * n + k]
    _u_of(wk.s, wk.xc, wk.lam, hp, wk.z, u, n)
    rest = _h_eval(u, hp, n) + _quad(u, wk.xc, wk.lam, n)
    mx = -INFINITY
    for i in range(m):
        vals[i] = _dot(&wk.G[i * n], u, n) + wk.b[i]
        qq += w[i] * vals[i]
        if vals[i] > mx:
            mx = vals[i]
    q[0] = qq + rest
    p[0] = mx + rest


def multi_cut(G, b, xc, double lam, tuple hp, w0, double step0, double tol, int max_iter):
    cdef _Packed hpk = _Packed(hp)
    cdef double[:, ::1] GG = np.ascontiguousarray(G, dtype=float)
    cdef double[::1] bb = np.ascontiguousarray(b, dtype=float)
    cdef double[::1] cc = np.ascontiguousarray(xc, dtype=float)
    cdef Py_ssize_t m = GG.shape[0], n = GG.shape[1], i
    cdef double[::1] s = np.empty(n)
    cdef double[::1] z = np.empty(n)
    cdef double[::1] buf = np.empty(m)
    cdef double[::1] tmp = np.empty(m)
    cdef Work wk
    wk.G = &GG[0, 0]
    wk.b = &bb[0]
    wk.xc = &cc[0]
    wk.s = &s[0]
    wk.z = &z[0]
    wk.m = m
    wk.n = n
    wk.lam = lam

    cdef double[::1] w0v = np.ascontiguousarray(w0, dtype=float)
    w_arr = np.empty(m)
    cdef double[::1] w = w_arr
    _project_simplex(&w0v[0], &w[0], &buf[0], m)
    cdef double[::1] u = np.empty(n)
    cdef double[::1] vals = np.empty(m)
    cdef double q, p
    _dual_at(&wk, &hpk.hp, &w[0], &u[0], &vals[0], &q, &p)

    best_u = np.array(u)
    best_w = np.array(w)
    cdef double best_p = p, best_q = q
    if p - q <= tol:
        return best_u, best_w, best_p, best_q, 0

    cdef double[::1] v = np.array(w)
    cdef double[::1] gv = np.array(vals)
    cdef double[::1] wn = np.empty(m)
    cdef double[::1] un = np.empty(n)
    cdef double[::1] valsn = np.empty(m)
    cdef double[::1] uv = np.empty(n)
    cdef double qv = q, pv, qn, pn, step = step0, t = 1.0, tn, lin, nrm, beta
    cdef int it = 0
    while it < max_iter:
        it += 1
        while True:
            for i in range(m):
                tmp[i] = v[i] + step * gv[i]
            _project_simplex(&tmp[0], &wn[0], &buf[0], m)
            _dual_at(&wk, &hpk.hp, &wn[0], &un[0], &valsn[0], &qn, &pn)
            lin = 0.0
            nrm = 0.0
            for i in range(m):
                lin += gv[i] * (wn[i] - v[i])
                nrm += (wn[i] - v[i]) * (wn[i] - v[i])
            if qn >= qv + lin - nrm / (2.0 * step) - 1e-15 * (1 + fabs(qv)):
                break
            step *= 0.5
            if step < 1e-300:
                break
        if pn - qn < best_p - best_q:
            best_u = np.array(un)
            best_w = np.array(wn)
            best_p = pn
            best_q = qn
            if pn - qn <= tol:
                break
        if qn < q:
            t = 1.0
            for i in range(m):
                v[i] = w[i]
            _dual_at(&wk, &hpk.hp, &v[0], &uv[0], &gv[0], &qv, &pv)
            continue
        tn = 0.5 * (1.0 + sqrt(1.0 + 4.0 * t * t))
        beta = (t - 1.0) / tn
        for i in range(m):
            v[i] = wn[i] + beta * (wn[i] - w[i])
            w[i] = wn[i]
        q = qn
        t = tn
        _dual_at(&wk, &hpk.hp, &v[0], &uv[0], &gv[0], &qv, &pv)
    return best_u, best_w, best_p, best_q, it


cdef double _oracle_c(int okind, double[:, ::1] A, double[::1] ob, double* x, double* g,
                      double* work, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, k, m, best
    cdef double v, r, bv
    if okind == 0:
        v = 0.0
        for k in range(n):
            v += fabs(x[k])
            g[k] = _sign(x[k])
        return v
    if okind == 1:
        m = A.shape[0]
        best = 0
        bv = -INFINITY
        for i in range(m):
            v = ob[i]
            for k in range(n):
                v += A[i, k] * x[k]
            if v > bv:
                bv = v
                best = i
        for k in range(n):
            g[k] = A[best, k]
        return bv
    if okind == 2:
        r = sqrt(_dot(x, x, n))
        for k in range(n):
            g[k] = 0.0 if r == 0.0 else x[k] / r + x[k]
        return r + 0.5 * r * r
    # least squares
    m = A.shape[0]
    v = 0.0
    for i in range(m):
        r = -ob[i]
        for k in range(n):
            r += A[i, k] * x[k]
        work[i] = r
        v += r * r
    for k in range(n):
        g[k] = 0.0
    for i in range(m):
        for k in range(n):
            g[k] += A[i, k] * work[i]
    return 0.5 * v


cdef double _call_oracle(int okind, double[:, ::1] A, double[::1] ob, object fcall, double* x,
                         double* g, double* work, Py_ssize_t n) except? -1e308:
    cdef Py_ssize_t k
    if okind >= 0:
        return _oracle_c(okind, A, ob, x, g, work, n)
    xs = np.empty(n)
    for k in range(n):
        xs[k] = x[k]
    fv, gv = fcall(xs)
    gg = np.asarray(gv, dtype=float)
    for k in range(n):
        g[k] = gg[k]
    return fv


def e1_loop(int okind, oA, ob, fcall, tuple hp, x0, double lam, double eps, double tau,
            long max_iter, double target, int adaptive=0, int max_updates=60):
    cdef _Packed p = _Packed(hp)
    cdef double[::1] xx0 = np.ascontiguousarray(x0, dtype=float)
    cdef Py_ssize_t n = xx0.shape[0], k
    cdef double[:, ::1] A = np.ascontiguousarray(oA if oA is not None else np.zeros((1, n)), dtype=float)
    cdef double[::1] bb = np.ascontiguousarray(ob if ob is not None else np.zeros(1), dtype=float)
    cdef double[::1] work = np.zeros(max(A.shape[0], 1))
    cdef long cap = min(max_iter + 1, 1024)
    Xa = np.empty((cap, n))
    yA = np.empty(cap, dtype=np.int64)
    cA = np.empty(cap, dtype=np.int64)
    mA = np.empty(cap)
    tA = np.empty(cap)
    pA = np.empty(cap)
    qA = np.empty(cap)
    cdef double[:, ::1] X = Xa
    cdef long long[::1] yv = yA
    cdef long long[::1] cv = cA
    cdef double[::1] mv = mA
    cdef double[::1] tv = tA
    cdef double[::1] pv = pA
    cdef double[::1] qv = qA
    cdef double[::1] g = np.empty(n)
    cdef double[::1] gu = np.empty(n)
    cdef double[::1] slope = np.zeros(n)
    cdef double[::1] s_new = np.empty(n)
    cdef double[::1] z = np.empty(n)
    cdef double fx, fu, icpt = 0.0, b_new, c_int, val, pu, plx, ply, tn
    cdef double half = 0.5 * eps, quarter = 0.25 * eps
    cdef long j = 0, yi = 0, ci = 0, yn, calls = 1, proxes = 0, updates = 0
    cdef int status = 1
    cdef bint serious
    for k in range(n):
        X[0, k] = xx0[k]
    fx = _call_oracle(okind, A, bb, fcall, &X[0, 0], &g[0], &work[0], n)
    pv[0] = fx + _h_eval(&X[0, 0], &p.hp, n)
    mv[0] = pv[0]
    tv[0] = 0.0
    qv[0] = tau
    yv[0] = 0
    cv[0] = 0
    if pv[0] <= target:
        status = 0
        max_iter = 0
    while j < max_iter:
        if j + 1 >= cap:
            cap = min(2 * cap, max_iter + 1)
            Xa = np.resize(Xa, (cap, n))
            yA = np.resize(yA, cap)
            cA = np.resize(cA, cap)
            mA = np.resize(mA, cap)
            tA = np.resize(tA, cap)
            pA = np.resize(pA, cap)
            qA = np.resize(qA, cap)
            X = Xa
            yv = yA
            cv = cA
            mv = mA
            tv = tA
            pv = pA
            qv = qA
        c_int = fx - _dot(&g[0], &X[j, 0], n)
        serious = tv[j] <= half
        if serious:
            ci = j
        while True:
            if serious:
                for k in range(n):
                    s_new[k] = g[k]
                b_new = c_int
            else:
                for k in range(n):
                    s_new[k] = tau * slope[k] + (1.0 - tau) * g[k]
                b_new = tau * icpt + (1.0 - tau) * c_int
            for k in range(n):
                z[k] = X[ci, k] - lam * s_new[k]
            _prox(&z[0], lam, &p.hp, &X[j + 1, 0], n)
            val = _dot(&s_new[0], &X[j + 1, 0], n) + b_new + _h_eval(&X[j + 1, 0], &p.hp, n) \
                + _quad(&X[j + 1, 0], &X[ci, 0], lam, n)
            proxes += 1
            fu = _call_oracle(okind, A, bb, fcall, &X[j + 1, 0], &gu[0], &work[0], n)
            calls += 1
            pu = fu + _h_eval(&X[j + 1, 0], &p.hp, n)
            plx = pu + _quad(&X[j + 1, 0], &X[ci, 0], lam, n)
            ply = pv[yi] + _quad(&X[yi, 0], &X[ci, 0], lam, n)
            yn = yi
            if plx < ply:
                yn = j + 1
                ply = plx
            tn = ply - val
            if adaptive and not serious and tn > tau * tv[j] + (1.0 - tau) * quarter:
                updates += 1
                if updates > max_updates:
                    status = 2
                    break
                tau = 0.5 * (1.0 + tau)
                continue
            break
        if status == 2:
            break
        for k in range(n):
            slope[k] = s_new[k]
            g[k] = gu[k]
        icpt = b_new
        fx = fu
        yi = yn
        j += 1
        pv[j] = pu
        yv[j] = yi
        cv[j] = ci
        mv[j] = val
        tv[j] = tn
        qv[j] = tau
        if pv[yi] <= target:
            status = 0
            break
    j += 1
    return (Xa[:j].copy(), yA[:j].copy(), cA[:j].copy(), mA[:j].copy(), tA[:j].copy(), pA[:j].copy(),
            qA[:j].copy(), status, calls, proxes, updates)
