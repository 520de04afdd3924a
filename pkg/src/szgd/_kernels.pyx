# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: Householder Stiefel frames and power-quadratic SZGD/GD.

Mirrors ``_fallback.py`` function for function, including status codes.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, pow, isfinite

cnp.import_array()

DEF STATUS_OK = 0
DEF STATUS_NONFINITE = 1
DEF STATUS_DIVERGED = 2
DEF STATUS_DOMAIN = 3


cdef void _frame(double[:, ::1] A, double[:, ::1] H, double[::1] tau,
                 double[::1] sgn, double[:, ::1] out) noexcept nogil:
    # Householder QR of A (n x k, overwritten); Q written to out with the
    # sign fix that makes diag(R) positive.
    cdef Py_ssize_t n = A.shape[0], k = A.shape[1]
    cdef Py_ssize_t i, j, c
    cdef double norm, sub, x0, alpha, vn2, dot
    for j in range(k):
        sub = 0.0
        for i in range(j + 1, n):
            sub += A[i, j] * A[i, j]
        x0 = A[j, j]
        norm = sqrt(sub + x0 * x0)
        for i in range(n):
            H[j, i] = 0.0
        if sub == 0.0:
            # already triangular in this column (always for the last row):
            # no reflection, as in LAPACK, so n = 1 gives exactly +-1
            tau[j] = 0.0
            sgn[j] = -1.0 if x0 < 0.0 else 1.0
            continue
        alpha = -norm if x0 >= 0.0 else norm
        H[j, j] = x0 - alpha
        vn2 = H[j, j] * H[j, j]
        for i in range(j + 1, n):
            H[j, i] = A[i, j]
            vn2 += A[i, j] * A[i, j]
        tau[j] = 2.0 / vn2
        sgn[j] = 1.0 if alpha > 0.0 else -1.0
        for c in range(j, k):
            dot = 0.0
            for i in range(j, n):
                dot += H[j, i] * A[i, c]
            dot *= tau[j]
            for i in range(j, n):
                A[i, c] -= dot * H[j, i]
    for i in range(n):
        for c in range(k):
            out[i, c] = 1.0 if i == c else 0.0
    for j in range(k - 1, -1, -1):
        if tau[j] == 0.0:
            continue
        for c in range(k):
            dot = 0.0
            for i in range(j, n):
                dot += H[j, i] * out[i, c]
            dot *= tau[j]
            for i in range(j, n):
                out[i, c] -= dot * H[j, i]
    for c in range(k):
        if sgn[c] < 0.0:
            for i in range(n):
                out[i, c] = -out[i, c]


def stiefel_frames(G):
    """Householder QR with sign fix for a stack of matrices, shape (m, n, k)."""
    cdef double[:, :, ::1] Gv = np.require(G, np.float64, "CW")
    cdef Py_ssize_t m = Gv.shape[0], n = Gv.shape[1], k = Gv.shape[2]
    result = np.empty((m, n, k))
    cdef double[:, :, ::1] R = result
    cdef double[:, ::1] A = np.empty((n, k))
    cdef double[:, ::1] H = np.empty((k, n))
    cdef double[::1] tau = np.empty(k)
    cdef double[::1] sgn = np.empty(k)
    cdef Py_ssize_t b
    with nogil:
        for b in range(m):
            A[:, :] = Gv[b]
            _frame(A, H, tau, sgn, R[b])
    return result


cdef inline double _pq_value(double[:, ::1] Q, double p, double[::1] u) noexcept nogil:
    cdef Py_ssize_t n = u.shape[0], i, j
    cdef double s = 0.0, row
    for i in range(n):
        row = 0.0
        for j in range(n):
            row += Q[i, j] * u[j]
        s += u[i] * row
    if s < 0.0:
        s = 0.0
    return pow(s, p)


cdef void _estimate(double[:, ::1] Q, double p, double[::1] x, double delta,
                    double[:, ::1] V, double[::1] u, double[::1] g) noexcept nogil:
    cdef Py_ssize_t n = V.shape[0], k = V.shape[1], i, c
    cdef double fp, fm, w
    for i in range(n):
        g[i] = 0.0
    for c in range(k):
        for i in range(n):
            u[i] = x[i] + delta * V[i, c]
        fp = _pq_value(Q, p, u)
        for i in range(n):
            u[i] = x[i] - delta * V[i, c]
        fm = _pq_value(Q, p, u)
        w = fp - fm
        for i in range(n):
            g[i] += w * V[i, c]
    w = n / (2.0 * k) / delta
    for i in range(n):
        g[i] *= w


def pq_probe_values(Q, double p, x, double delta, V):
    """Values of (u^T Q u)^p at u = x +/- delta * V[:, i]."""
    cdef double[:, ::1] Qv = np.require(Q, np.float64, "CW")
    cdef double[::1] xv = np.require(x, np.float64, "CW")
    cdef double[:, ::1] Vv = np.require(V, np.float64, "CW")
    cdef Py_ssize_t n = Vv.shape[0], k = Vv.shape[1], i, c
    fp_arr = np.empty(k)
    fm_arr = np.empty(k)
    cdef double[::1] fp = fp_arr, fm = fm_arr
    cdef double[::1] u = np.empty(n)
    with nogil:
        for c in range(k):
            for i in range(n):
                u[i] = xv[i] + delta * Vv[i, c]
            fp[c] = _pq_value(Qv, p, u)
            for i in range(n):
                u[i] = xv[i] - delta * Vv[i, c]
            fm[c] = _pq_value(Qv, p, u)
    return fp_arr, fm_arr


def pq_estimates(Q, double p, x, double delta, Vs):
    """Central-difference estimates for a stack of frames (m, n, k)."""
    cdef double[:, ::1] Qv = np.require(Q, np.float64, "CW")
    cdef double[::1] xv = np.require(x, np.float64, "CW")
    cdef double[:, :, ::1] Vv = np.require(Vs, np.float64, "CW")
    cdef Py_ssize_t m = Vv.shape[0], n = Vv.shape[1], b
    result = np.empty((m, n))
    cdef double[:, ::1] out = result
    cdef double[::1] u = np.empty(n)
    with nogil:
        for b in range(m):
            _estimate(Qv, p, xv, delta, Vv[b], u, out[b])
    return result


cdef double _dist(double[::1] x, double[::1] y) noexcept nogil:
    cdef Py_ssize_t i
    cdef double s = 0.0
    for i in range(x.shape[0]):
        s += (x[i] - y[i]) * (x[i] - y[i])
    return sqrt(s)


cdef double _norm(double[::1] x) noexcept nogil:
    cdef Py_ssize_t i
    cdef double s = 0.0
    for i in range(x.shape[0]):
        s += x[i] * x[i]
    return sqrt(s)


def szgd_pq(Q, double p, x0, double eta, deltas, G, x_limit, double radius):
    """SZGD on (x^T Q x)^p; see ``_fallback.szgd_pq`` for the contract."""
    cdef double[:, ::1] Qv = np.require(Q, np.float64, "CW")
    cdef double[::1] dv = np.require(deltas, np.float64, "CW")
    cdef double[:, :, ::1] Gv = np.require(G, np.float64, "CW")
    cdef double[::1] xl = np.require(x_limit, np.float64, "CW")
    cdef Py_ssize_t T = dv.shape[0], n = Gv.shape[1], k = Gv.shape[2]
    cdef Py_ssize_t t, i, steps = T
    cdef int status = STATUS_OK
    f_arr = np.empty(T + 1)
    s_arr = np.empty(T)
    d_arr = np.empty(T + 1)
    it_arr = np.empty((T + 1, n))
    cdef double[::1] fv = f_arr, sv = s_arr, dist = d_arr
    cdef double[:, ::1] its = it_arr
    cdef double[::1] x = np.array(x0, dtype=np.float64)
    cdef double[::1] g = np.empty(n), u = np.empty(n)
    cdef double[:, ::1] A = np.empty((n, k)), H = np.empty((k, n)), V = np.empty((n, k))
    cdef double[::1] tau = np.empty(k), sgn = np.empty(k)
    cdef double fx, dx, ss
    cdef bint finite
    with nogil:
        fv[0] = _pq_value(Qv, p, x)
        dist[0] = _dist(x, xl)
        its[0, :] = x
        for t in range(T):
            A[:, :] = Gv[t]
            _frame(A, H, tau, sgn, V)
            _estimate(Qv, p, x, dv[t], V, u, g)
            ss = 0.0
            finite = True
            for i in range(n):
                dx = -eta * g[i]
                u[i] = x[i] + dx
                ss += dx * dx
                if not isfinite(u[i]):
                    finite = False
            fx = _pq_value(Qv, p, u)
            if not finite or not isfinite(fx):
                status = STATUS_NONFINITE
                steps = t
                break
            x[:] = u
            sv[t] = ss
            fv[t + 1] = fx
            dist[t + 1] = _dist(x, xl)
            its[t + 1, :] = x
            if _norm(x) > radius:
                status = STATUS_DIVERGED
                steps = t + 1
                break
    return (status, steps, f_arr[: steps + 1], s_arr[:steps],
            d_arr[: steps + 1], it_arr[: steps + 1])


def gd_pq(Q, double p, x0, double eta, Py_ssize_t T, x_limit, double radius):
    """Gradient descent on (x^T Q x)^p with the analytic gradient."""
    cdef double[:, ::1] Qv = np.require(Q, np.float64, "CW")
    cdef double[::1] xl = np.require(x_limit, np.float64, "CW")
    cdef double[::1] x = np.array(x0, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0], t, i, j, steps = T
    cdef int status = STATUS_OK
    f_arr = np.empty(T + 1)
    s_arr = np.empty(T)
    d_arr = np.empty(T + 1)
    it_arr = np.empty((T + 1, n))
    cdef double[::1] fv = f_arr, sv = s_arr, dist = d_arr
    cdef double[:, ::1] its = it_arr
    cdef double[::1] qx = np.empty(n), u = np.empty(n)
    cdef double s, coef, fx, dx, ss
    cdef bint finite
    with nogil:
        fv[0] = _pq_value(Qv, p, x)
        dist[0] = _dist(x, xl)
        its[0, :] = x
        for t in range(T):
            s = 0.0
            for i in range(n):
                qx[i] = 0.0
                for j in range(n):
                    qx[i] += Qv[i, j] * x[j]
                s += x[i] * qx[i]
            if s < 0.0:
                s = 0.0
            if s == 0.0:
                if p > 0.5:
                    coef = 0.0
                else:
                    status = STATUS_DOMAIN
                    steps = t
                    break
            else:
                coef = 2.0 * p * pow(s, p - 1.0)
            ss = 0.0
            finite = True
            for i in range(n):
                dx = -eta * (coef * qx[i])
                u[i] = x[i] + dx
                ss += dx * dx
                if not isfinite(u[i]):
                    finite = False
            fx = _pq_value(Qv, p, u)
            if not finite or not isfinite(fx):
                status = STATUS_NONFINITE
                steps = t
                break
            x[:] = u
            sv[t] = ss
            fv[t + 1] = fx
            dist[t + 1] = _dist(x, xl)
            its[t + 1, :] = x
            if _norm(x) > radius:
                status = STATUS_DIVERGED
                steps = t + 1
                break
    return (status, steps, f_arr[: steps + 1], s_arr[:steps],
            d_arr[: steps + 1], it_arr[: steps + 1])
