"""Jitted core of the entropic-transport solver.

The iteration is the standard alternating soft-min on dual potentials
(target side first, then source side). The hot loop runs on exponential-
domain scalings (u, v) against a kernel matrix built from absorbed
potentials, re-absorbing the scalings into the potentials whenever they
drift toward the floating-point range limit; iterations where a scaled
quantity leaves (0, inf) — underflow, overflow, or NaN from a stale warm
start — are redone with a max-subtracted log-sum-exp pass. Both paths
walk the same potential sequence as the
textbook log-domain recursion — they differ only in how the exponentials
are evaluated.
"""

import numpy as np
from numba import njit

# re-absorb once |f - f_absorbed| / eps crosses this
_ABSORB = 200.0


@njit(cache=True)
def _rebuild_kernel(K, C, f, g, eps):
    n, m = C.shape
    for i in range(n):
        for j in range(m):
            K[i, j] = np.exp((f[i] + g[j] - C[i, j]) / eps)


@njit(cache=True)
def _absorb(f, g, u, v, a, b, loga, logb, eps):
    n = f.shape[0]
    m = g.shape[0]
    for i in range(n):
        f[i] += eps * (np.log(u[i]) - loga[i])
        u[i] = a[i]
    for j in range(m):
        g[j] += eps * (np.log(v[j]) - logb[j])
        v[j] = b[j]


@njit(cache=True)
def _logdomain_pass(C, loga, logb, f, g, eps):
    """One g-then-f soft-min update, safe for any potential values."""
    n, m = C.shape
    z = np.empty(n)
    for j in range(m):
        mx = -np.inf
        for i in range(n):
            z[i] = (f[i] - C[i, j]) / eps + loga[i]
            if z[i] > mx:
                mx = z[i]
        acc = 0.0
        for i in range(n):
            acc += np.exp(z[i] - mx)
        g[j] = -eps * (mx + np.log(acc))
    zm = np.empty(m)
    for i in range(n):
        mx = -np.inf
        for j in range(m):
            zm[j] = (g[j] - C[i, j]) / eps + logb[j]
            if zm[j] > mx:
                mx = zm[j]
        acc = 0.0
        for j in range(m):
            acc += np.exp(zm[j] - mx)
        f[i] = -eps * (mx + np.log(acc))


@njit(cache=True)
def solve(C, a, b, loga, logb, f, g, eps, tol, max_iters):
    """Iterate in place from the warm-start potentials in f, g.

    Returns (iterations run, last sup-norm potential change).
    """
    n, m = C.shape
    K = np.empty((n, m))
    _rebuild_kernel(K, C, f, g, eps)
    u = a.copy()
    v = b.copy()
    uo = np.empty(n)
    vo = np.empty(m)
    t = np.empty(m)
    s = np.empty(n)
    delta = np.inf
    it = 0
    for it in range(1, max_iters + 1):
        for i in range(n):
            uo[i] = u[i]
        for j in range(m):
            vo[j] = v[j]
        ok = True
        for j in range(m):
            t[j] = 0.0
        for i in range(n):
            ui = u[i]
            for j in range(m):
                t[j] += ui * K[i, j]
        for j in range(m):
            if not (0.0 < t[j] < np.inf):
                ok = False
        if ok:
            for j in range(m):
                v[j] = b[j] / t[j]
            for i in range(n):
                acc = 0.0
                for j in range(m):
                    acc += K[i, j] * v[j]
                s[i] = acc
                if not (0.0 < acc < np.inf):
                    ok = False
        if ok:
            for i in range(n):
                u[i] = a[i] / s[i]
                if not (0.0 < u[i] < np.inf):
                    ok = False
        if ok:
            delta = 0.0
            big = False
            for i in range(n):
                lu = np.log(u[i])
                d = eps * np.abs(lu - np.log(uo[i]))
                if d > delta:
                    delta = d
                if np.abs(lu - loga[i]) > _ABSORB:
                    big = True
            for j in range(m):
                lv = np.log(v[j])
                d = eps * np.abs(lv - np.log(vo[j]))
                if d > delta:
                    delta = d
                if np.abs(lv - logb[j]) > _ABSORB:
                    big = True
            if big:
                _absorb(f, g, u, v, a, b, loga, logb, eps)
                _rebuild_kernel(K, C, f, g, eps)
        else:
            # scaled update under/overflowed: restore the entry state,
            # fold it into the potentials, and redo this step in log space
            for i in range(n):
                u[i] = uo[i]
            for j in range(m):
                v[j] = vo[j]
            _absorb(f, g, u, v, a, b, loga, logb, eps)
            fp = f.copy()
            gp = g.copy()
            _logdomain_pass(C, loga, logb, f, g, eps)
            delta = 0.0
            for i in range(n):
                d = np.abs(f[i] - fp[i])
                if d > delta:
                    delta = d
            for j in range(m):
                d = np.abs(g[j] - gp[j])
                if d > delta:
                    delta = d
            _rebuild_kernel(K, C, f, g, eps)
        if delta < tol:
            break
    for i in range(n):
        f[i] += eps * (np.log(u[i]) - loga[i])
    for j in range(m):
        g[j] += eps * (np.log(v[j]) - logb[j])
    return it, delta
