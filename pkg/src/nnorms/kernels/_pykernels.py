"""Pure-Python/numpy implementation of the hot kernels.

Mirrors ``_ckernels.pyx`` step for step; used when the compiled module is
not available and as the reference in backend-parity tests.
"""

import math

import numpy as np

from ._constants import ARMIJO, MIN_STEP, MU0, MU_DECAY, MU_MIN, P_INF_CAP, PIVOT_RTOL

NAME = "python"


def _combine(t, p):
    if math.isinf(p):
        return float(t.max())
    if p == 1.0:
        return float(t.sum())
    tm = float(t.max())
    if tm == 0.0:
        return 0.0
    return tm * float(((t / tm) ** p).sum()) ** (1.0 / p)


def derived_norms(B, X, p):
    """Derived p-norms of every row of ``X`` given term operators ``B`` of shape (n, d, d)."""
    B = np.ascontiguousarray(B, dtype=float)
    X = np.ascontiguousarray(X, dtype=float)
    t = np.linalg.norm(np.einsum("jkd,md->mjk", B, X), axis=2)
    out = np.empty(X.shape[0])
    for m in range(X.shape[0]):
        out[m] = _combine(t[m], p)
    return out


def _true_norm(B, x, p):
    t = np.sqrt(((B @ x) ** 2).sum(axis=1))
    return _combine(t, p)


def _smoothed(B, Q, x, p_eff, musig, want_hess):
    n, d, _ = B.shape
    u = B @ x
    xx = float(x @ x)
    t = np.sqrt((u * u).sum(axis=1) + musig * xx)
    Qx = np.einsum("jkd,jk->jd", B, u) + musig * x[None, :]
    tm = float(t.max())
    g = tm * float(((t / tm) ** p_eff).sum()) ** (1.0 / p_eff)
    if not want_hess:
        return g, None, None
    dt = Qx / t[:, None]
    w = (t / g) ** (p_eff - 1.0)
    grad = w @ dt
    H = np.zeros((d, d))
    for j in range(n):
        c = w[j] / t[j]
        H += c * (Q[j] + (p_eff - 2.0) * np.outer(dt[j], dt[j]))
        H[np.diag_indices(d)] += c * musig
    H -= (p_eff - 1.0) / g * np.outer(grad, grad)
    return g, grad, H


def _solve(K, rhs):
    """Gaussian elimination with partial pivoting; None when a pivot is negligible."""
    m = K.shape[0]
    A = K.copy()
    b = rhs.copy()
    scale = float(np.abs(A).max())
    if scale == 0.0:
        return None
    for c in range(m):
        piv = c + int(np.argmax(np.abs(A[c:, c])))
        if abs(A[piv, c]) <= PIVOT_RTOL * scale:
            return None
        if piv != c:
            A[[c, piv]] = A[[piv, c]]
            b[c], b[piv] = b[piv], b[c]
        for r in range(c + 1, m):
            f = A[r, c] / A[c, c]
            if f != 0.0:
                A[r, c:] -= f * A[c, c:]
                b[r] -= f * b[c]
    sol = np.empty(m)
    for r in range(m - 1, -1, -1):
        sol[r] = (b[r] - A[r, r + 1 :] @ sol[r + 1 :]) / A[r, r]
    return sol


def _newton_direction(H, grad, a):
    d = a.shape[0]
    K = np.zeros((d + 1, d + 1))
    K[:d, d] = a
    K[d, :d] = a
    rhs = np.zeros(d + 1)
    rhs[:d] = -grad
    reg = 0.0
    base = max(float(np.trace(H)) / d, 1e-300)
    for _ in range(8):
        K[:d, :d] = H
        if reg:
            K[np.arange(d), np.arange(d)] += reg
        sol = _solve(K, rhs)
        if sol is not None and np.all(np.isfinite(sol)):
            return sol[:d]
        reg = base * 1e-12 if reg == 0.0 else reg * 100.0
    return None


def slot_solve(a, B, p, x0, max_iters, tol):
    """Maximize ``a . x`` over the unit ball of the derived p-norm with term operators ``B``.

    Runs damped Newton on ``min g(x) s.t. a . x = 1`` with homogeneous
    smoothing of each term and a decreasing smoothing schedule, tracking the
    best iterate under the exact norm. Returns ``(x, value, iters, converged)``
    with ``x`` on the exact unit sphere and ``value = a . x``.
    """
    a = np.ascontiguousarray(a, dtype=float)
    B = np.ascontiguousarray(B, dtype=float)
    x = np.array(x0, dtype=float)
    n, d, _ = B.shape
    Q = np.einsum("jkd,jke->jde", B, B)
    sigma = float(np.einsum("jkd,jkd->", B, B)) / (n * d)
    anorm = float(np.sqrt(a @ a))

    if anorm == 0.0 or sigma == 0.0:
        g0 = _true_norm(B, x, p)
        if not g0 > 0.0:
            x = np.zeros(d)
            x[0] = 1.0
            g0 = _true_norm(B, x, p)
        return x / g0, 0.0, 0, True

    s = float(a @ x)
    if s < 0.0:
        x = -x
        s = -s
    if not s > 1e-3 * anorm * float(np.sqrt(x @ x)):
        x = a.copy()
        s = float(a @ a)
    x = x / s

    best = x.copy()
    best_r = float(a @ x) / _true_norm(B, x, p)
    mu = MU0
    it = 0
    converged = False
    while it < max_iters:
        it += 1
        p_eff = p if not math.isinf(p) else min(P_INF_CAP, 0.5 / mu)
        musig = mu * mu * sigma
        g, grad, H = _smoothed(B, Q, x, p_eff, musig, True)
        dx = _newton_direction(H, grad, a)
        dec = -float(grad @ dx) if dx is not None else 0.0
        if dx is None or not dec > tol * g:
            if mu <= MU_MIN:
                converged = True
                break
            mu *= MU_DECAY
            continue
        step = 1.0
        while step >= MIN_STEP:
            gt = _smoothed(B, Q, x + step * dx, p_eff, musig, False)[0]
            if gt <= g - ARMIJO * step * dec:
                break
            step *= 0.5
        if step < MIN_STEP:
            if mu <= MU_MIN:
                converged = True
                break
            mu *= MU_DECAY
            continue
        x = x + step * dx
        r = float(a @ x) / _true_norm(B, x, p)
        if r > best_r:
            best_r = r
            best = x.copy()

    z = best / _true_norm(B, best, p)
    return z, float(a @ z), it, converged
