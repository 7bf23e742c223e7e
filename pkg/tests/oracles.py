"""Independent reference implementations used to cross-check the package.

Everything here is written directly from textbook formulas with no imports
from nsflows, so agreement between the two routes is meaningful. Slow and
transparent on purpose.
"""

import itertools
import math

import numpy as np


def normal_pdf(x, mean=0.0, sd=1.0):
    z = (x - mean) / sd
    return math.exp(-0.5 * z * z) / (sd * math.sqrt(2.0 * math.pi))


def iso_gauss_pdf(x, theta, h):
    """Isotropic d-dim Gaussian density N(x; theta, h^2 I), plain loops."""
    x = np.asarray(x, dtype=float)
    theta = np.asarray(theta, dtype=float)
    out = 1.0
    for xi, ti in zip(x.ravel(), theta.ravel()):
        out *= normal_pdf(xi, ti, h)
    return out


def full_gauss_pdf(x, mean, cov):
    """General multivariate normal density via explicit inverse/determinant."""
    x = np.asarray(x, dtype=float)
    mean = np.asarray(mean, dtype=float)
    cov = np.asarray(cov, dtype=float)
    d = len(mean)
    diff = x - mean
    quad = float(diff @ np.linalg.inv(cov) @ diff)
    norm = (2.0 * math.pi) ** (-d / 2.0) * np.linalg.det(cov) ** (-0.5)
    return norm * math.exp(-0.5 * quad)


def mixture_pdf(x, components):
    """components: list of (mean, cov, weight)."""
    return sum(w * full_gauss_pdf(x, m, c) for m, c, w in components)


def sq_dist_matrix(X, Y):
    """Double-loop squared Euclidean distances."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    C = np.zeros((X.shape[0], Y.shape[0]))
    for i in range(X.shape[0]):
        for j in range(Y.shape[0]):
            C[i, j] = np.sum((X[i] - Y[j]) ** 2)
    return C


def logsumexp(v):
    m = np.max(v)
    if not np.isfinite(m):
        return m
    return m + math.log(np.sum(np.exp(v - m)))


def sinkhorn_logdomain(C, a, b, eps, n_iters, f0=None, g0=None, tol=0.0):
    """Plain log-domain Sinkhorn: alternating soft-min updates.

    Update order: g (target side) first, then f, so the implied plan has
    exact row marginals after every full iteration. Returns the raw
    (un-gauged) potentials plus the iteration count and last sup-change.
    """
    C = np.asarray(C, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n, m = C.shape
    loga = np.log(a)
    logb = np.log(b)
    f = np.zeros(n) if f0 is None else np.array(f0, dtype=float)
    g = np.zeros(m) if g0 is None else np.array(g0, dtype=float)
    it = 0
    delta = np.inf
    for it in range(1, n_iters + 1):
        g_new = np.empty(m)
        for j in range(m):
            g_new[j] = -eps * logsumexp((f - C[:, j]) / eps + loga)
        f_new = np.empty(n)
        for i in range(n):
            f_new[i] = -eps * logsumexp((g_new - C[i, :]) / eps + logb)
        delta = max(np.max(np.abs(f_new - f)), np.max(np.abs(g_new - g)))
        f, g = f_new, g_new
        if delta < tol:
            break
    return f, g, it, delta


def sinkhorn_plan(C, a, b, eps, f, g):
    return a[:, None] * b[None, :] * np.exp((f[:, None] + g[None, :] - C) / eps)


def entropic_cost_reference(C, a, b, eps, n_iters=20000, tol=1e-13):
    f, g, _, _ = sinkhorn_logdomain(C, a, b, eps, n_iters, tol=tol)
    return float(np.dot(a, f) + np.dot(b, g))


def _vertex_masses(cells, a, b):
    """Solve the marginal equations restricted to the given support cells.

    Returns the mass vector if the restricted system has a unique solution,
    else None. One column equation is dropped (redundant with the rest).
    """
    n, m = len(a), len(b)
    k = len(cells)
    rows = n + m - 1
    if k != rows:
        return None
    A = np.zeros((rows, k))
    rhs = np.concatenate([a, b[:-1]])
    for col, (i, j) in enumerate(cells):
        A[i, col] = 1.0
        if j < m - 1:
            A[n + j, col] = 1.0
    if abs(np.linalg.det(A)) < 1e-12:
        return None
    return np.linalg.solve(A, rhs)


def exact_ot_bruteforce(C, a, b):
    """Minimum transport cost by enumerating basic feasible solutions.

    Every vertex of the transportation polytope is supported on at most
    n+m-1 cells, so scanning all (n+m-1)-subsets of cells finds the LP
    optimum. Only viable for tiny supports (<= 3x3 or so).
    """
    C = np.asarray(C, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n, m = C.shape
    best = np.inf
    cells = list(itertools.product(range(n), range(m)))
    for S in itertools.combinations(cells, n + m - 1):
        x = _vertex_masses(S, a, b)
        if x is None or np.min(x) < -1e-10:
            continue
        cost = sum(max(xi, 0.0) * C[i, j] for xi, (i, j) in zip(x, S))
        best = min(best, cost)
    return best


def central_diff_grad(fn, x, h=1e-5):
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = h
        g[k] = (fn(x + e) - fn(x - e)) / (2.0 * h)
    return g
