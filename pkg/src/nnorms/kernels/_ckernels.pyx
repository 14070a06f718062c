# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled slot solver and batched derived norms.

Same algorithm and operation order as ``_pykernels``; see that module for
the description.
"""

import numpy as np

from libc.math cimport fabs, pow, sqrt, isinf, isfinite
from libc.stdlib cimport malloc, free

from ._constants import ARMIJO, MIN_STEP, MU0, MU_DECAY, MU_MIN, P_INF_CAP, PIVOT_RTOL

NAME = "cython"

cdef double C_ARMIJO = ARMIJO
cdef double C_MIN_STEP = MIN_STEP
cdef double C_MU0 = MU0
cdef double C_MU_DECAY = MU_DECAY
cdef double C_MU_MIN = MU_MIN
cdef double C_P_INF_CAP = P_INF_CAP
cdef double C_PIVOT_RTOL = PIVOT_RTOL


cdef inline double _combine(double* t, int n, double p) noexcept nogil:
    cdef int j
    cdef double tm = 0.0, s = 0.0
    if isinf(p):
        for j in range(n):
            if t[j] > tm:
                tm = t[j]
        return tm
    if p == 1.0:
        for j in range(n):
            s += t[j]
        return s
    for j in range(n):
        if t[j] > tm:
            tm = t[j]
    if tm == 0.0:
        return 0.0
    for j in range(n):
        s += pow(t[j] / tm, p)
    return tm * pow(s, 1.0 / p)


cdef double _true_norm(const double[:, :, ::1] B, const double* x, double* t, int n, int d,
                       double p) noexcept nogil:
    cdef int j, k, l
    cdef double u, acc
    for j in range(n):
        acc = 0.0
        for k in range(d):
            u = 0.0
            for l in range(d):
                u += B[j, k, l] * x[l]
            acc += u * u
        t[j] = sqrt(acc)
    return _combine(t, n, p)


def derived_norms(B_in, X_in, double p):
    """Derived p-norms of every row of ``X`` given term operators ``B`` of shape (n, d, d)."""
    cdef const double[:, :, ::1] B = np.ascontiguousarray(B_in, dtype=np.float64)
    cdef const double[:, ::1] X = np.ascontiguousarray(X_in, dtype=np.float64)
    cdef int n = B.shape[0], d = B.shape[1], m = X.shape[0], i
    out = np.empty(m)
    cdef double[::1] o = out
    cdef double* t = <double*> malloc(n * sizeof(double))
    if t == NULL:
        raise MemoryError()
    try:
        with nogil:
            for i in range(m):
                o[i] = _true_norm(B, &X[i, 0], t, n, d, p)
    finally:
        free(t)
    return out


cdef struct Work:
    int n
    int d
    double* Q      # n*d*d
    double* u      # n*d
    double* t      # n
    double* dt     # n*d
    double* w      # n
    double* grad   # d
    double* H      # d*d
    double* K      # (d+1)^2
    double* rhs    # d+1
    double* sol    # d+1
    double* xt     # d


cdef double _smoothed(const double[:, :, ::1] B, Work* W, const double* x, double p_eff,
                      double musig, bint want_hess) noexcept nogil:
    cdef int n = W.n, d = W.d, j, k, l
    cdef double xx = 0.0, acc, tm = 0.0, s = 0.0, g, c, uu
    for k in range(d):
        xx += x[k] * x[k]
    for j in range(n):
        acc = 0.0
        for k in range(d):
            uu = 0.0
            for l in range(d):
                uu += B[j, k, l] * x[l]
            W.u[j * d + k] = uu
            acc += uu * uu
        W.t[j] = sqrt(acc + musig * xx)
        if W.t[j] > tm:
            tm = W.t[j]
    for j in range(n):
        s += pow(W.t[j] / tm, p_eff)
    g = tm * pow(s, 1.0 / p_eff)
    if not want_hess:
        return g
    for j in range(n):
        for l in range(d):
            acc = 0.0
            for k in range(d):
                acc += B[j, k, l] * W.u[j * d + k]
            W.dt[j * d + l] = (acc + musig * x[l]) / W.t[j]
        W.w[j] = pow(W.t[j] / g, p_eff - 1.0)
    for l in range(d):
        acc = 0.0
        for j in range(n):
            acc += W.w[j] * W.dt[j * d + l]
        W.grad[l] = acc
    for k in range(d * d):
        W.H[k] = 0.0
    for j in range(n):
        c = W.w[j] / W.t[j]
        for k in range(d):
            for l in range(d):
                W.H[k * d + l] += c * (W.Q[(j * d + k) * d + l]
                                       + (p_eff - 2.0) * W.dt[j * d + k] * W.dt[j * d + l])
            W.H[k * d + k] += c * musig
    c = (p_eff - 1.0) / g
    for k in range(d):
        for l in range(d):
            W.H[k * d + l] -= c * W.grad[k] * W.grad[l]
    return g


cdef bint _solve(double* A, double* b, double* sol, int m) noexcept nogil:
    # Gaussian elimination with partial pivoting, in place on A and b.
    cdef int c, r, k, piv
    cdef double scale = 0.0, best, f, tmp, acc
    for k in range(m * m):
        if fabs(A[k]) > scale:
            scale = fabs(A[k])
    if scale == 0.0:
        return False
    for c in range(m):
        piv = c
        best = fabs(A[c * m + c])
        for r in range(c + 1, m):
            if fabs(A[r * m + c]) > best:
                best = fabs(A[r * m + c])
                piv = r
        if best <= C_PIVOT_RTOL * scale:
            return False
        if piv != c:
            for k in range(m):
                tmp = A[c * m + k]
                A[c * m + k] = A[piv * m + k]
                A[piv * m + k] = tmp
            tmp = b[c]
            b[c] = b[piv]
            b[piv] = tmp
        for r in range(c + 1, m):
            f = A[r * m + c] / A[c * m + c]
            if f != 0.0:
                for k in range(c, m):
                    A[r * m + k] -= f * A[c * m + k]
                b[r] -= f * b[c]
    for r in range(m - 1, -1, -1):
        acc = 0.0
        for k in range(r + 1, m):
            acc += A[r * m + k] * sol[k]
        sol[r] = (b[r] - acc) / A[r * m + r]
    return True


cdef bint _newton_direction(Work* W, const double* a) noexcept nogil:
    cdef int d = W.d, m = d + 1, k, l, attempt
    cdef double reg = 0.0, base = 0.0
    cdef bint ok
    for k in range(d):
        base += W.H[k * d + k]
    base = base / d
    if base < 1e-300:
        base = 1e-300
    for attempt in range(8):
        for k in range(d):
            for l in range(d):
                W.K[k * m + l] = W.H[k * d + l]
            W.K[k * m + k] += reg
            W.K[k * m + d] = a[k]
            W.K[d * m + k] = a[k]
            W.rhs[k] = -W.grad[k]
        W.K[d * m + d] = 0.0
        W.rhs[d] = 0.0
        ok = _solve(W.K, W.rhs, W.sol, m)
        if ok:
            for k in range(d):
                if not isfinite(W.sol[k]):
                    ok = False
        if ok:
            return True
        reg = base * 1e-12 if reg == 0.0 else reg * 100.0
    return False


cdef void _free(Work* W) noexcept:
    free(W.Q)
    free(W.u)
    free(W.t)
    free(W.dt)
    free(W.w)
    free(W.grad)
    free(W.H)
    free(W.K)
    free(W.rhs)
    free(W.sol)
    free(W.xt)


def slot_solve(a_in, B_in, double p, x0_in, int max_iters, double tol):
    """Maximize ``a . x`` over the unit ball of the derived p-norm; see ``_pykernels.slot_solve``."""
    cdef const double[::1] a = np.ascontiguousarray(a_in, dtype=np.float64)
    cdef const double[:, :, ::1] B = np.ascontiguousarray(B_in, dtype=np.float64)
    x_arr = np.array(x0_in, dtype=np.float64)
    best_arr = np.empty_like(x_arr)
    cdef double[::1] x = x_arr
    cdef double[::1] best = best_arr
    cdef int n = B.shape[0], d = B.shape[1]
    cdef int j, k, l, r_i, it = 0
    cdef double sigma = 0.0, anorm = 0.0, s = 0.0, xn = 0.0, g0, acc
    cdef double mu, p_eff, musig, g, dec, step, gt, r, best_r, nrm
    cdef bint converged = False, have_dir
    cdef Work W

    W.n = n
    W.d = d
    W.Q = <double*> malloc(n * d * d * sizeof(double))
    W.u = <double*> malloc(n * d * sizeof(double))
    W.t = <double*> malloc(n * sizeof(double))
    W.dt = <double*> malloc(n * d * sizeof(double))
    W.w = <double*> malloc(n * sizeof(double))
    W.grad = <double*> malloc(d * sizeof(double))
    W.H = <double*> malloc(d * d * sizeof(double))
    W.K = <double*> malloc((d + 1) * (d + 1) * sizeof(double))
    W.rhs = <double*> malloc((d + 1) * sizeof(double))
    W.sol = <double*> malloc((d + 1) * sizeof(double))
    W.xt = <double*> malloc(d * sizeof(double))
    if (W.Q == NULL or W.u == NULL or W.t == NULL or W.dt == NULL or W.w == NULL
            or W.grad == NULL or W.H == NULL or W.K == NULL or W.rhs == NULL
            or W.sol == NULL or W.xt == NULL):
        _free(&W)
        raise MemoryError()

    try:
        with nogil:
            for j in range(n):
                for k in range(d):
                    for l in range(d):
                        acc = 0.0
                        for r_i in range(d):
                            acc += B[j, r_i, k] * B[j, r_i, l]
                        W.Q[(j * d + k) * d + l] = acc
                        if k == l:
                            sigma += acc
            sigma = sigma / (n * d)
            for k in range(d):
                anorm += a[k] * a[k]
            anorm = sqrt(anorm)

        if anorm == 0.0 or sigma == 0.0:
            g0 = _true_norm(B, &x[0], W.t, n, d, p)
            if not g0 > 0.0:
                for k in range(d):
                    x[k] = 0.0
                x[0] = 1.0
                g0 = _true_norm(B, &x[0], W.t, n, d, p)
            for k in range(d):
                x[k] = x[k] / g0
            return x_arr, 0.0, 0, True

        with nogil:
            for k in range(d):
                s += a[k] * x[k]
                xn += x[k] * x[k]
            if s < 0.0:
                for k in range(d):
                    x[k] = -x[k]
                s = -s
            if not s > 1e-3 * anorm * sqrt(xn):
                s = 0.0
                for k in range(d):
                    x[k] = a[k]
                    s += a[k] * a[k]
            for k in range(d):
                x[k] = x[k] / s
                best[k] = x[k]
            acc = 0.0
            for k in range(d):
                acc += a[k] * x[k]
            best_r = acc / _true_norm(B, &x[0], W.t, n, d, p)

            mu = C_MU0
            while it < max_iters:
                it += 1
                if isinf(p):
                    p_eff = 0.5 / mu
                    if p_eff > C_P_INF_CAP:
                        p_eff = C_P_INF_CAP
                else:
                    p_eff = p
                musig = mu * mu * sigma
                g = _smoothed(B, &W, &x[0], p_eff, musig, True)
                have_dir = _newton_direction(&W, &a[0])
                dec = 0.0
                if have_dir:
                    for k in range(d):
                        dec -= W.grad[k] * W.sol[k]
                if not have_dir or not dec > tol * g:
                    if mu <= C_MU_MIN:
                        converged = True
                        break
                    mu *= C_MU_DECAY
                    continue
                step = 1.0
                while step >= C_MIN_STEP:
                    for k in range(d):
                        W.xt[k] = x[k] + step * W.sol[k]
                    gt = _smoothed(B, &W, W.xt, p_eff, musig, False)
                    if gt <= g - C_ARMIJO * step * dec:
                        break
                    step *= 0.5
                if step < C_MIN_STEP:
                    if mu <= C_MU_MIN:
                        converged = True
                        break
                    mu *= C_MU_DECAY
                    continue
                for k in range(d):
                    x[k] = x[k] + step * W.sol[k]
                acc = 0.0
                for k in range(d):
                    acc += a[k] * x[k]
                r = acc / _true_norm(B, &x[0], W.t, n, d, p)
                if r > best_r:
                    best_r = r
                    for k in range(d):
                        best[k] = x[k]

            nrm = _true_norm(B, &best[0], W.t, n, d, p)
            acc = 0.0
            for k in range(d):
                best[k] = best[k] / nrm
                acc += a[k] * best[k]
        return best_arr, acc, it, converged
    finally:
        _free(&W)
