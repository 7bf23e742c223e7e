"""Entropic optimal transport between particle measures.

Dual potentials come from alternating soft-min (Sinkhorn) updates with the
squared Euclidean ground cost; an exact LP solver covers small-support W2
for evaluation. Potentials are returned in the gauge sum_i w_i f_i = 0 so
that downstream mean-zero reactions and traces are reproducible.
"""

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from . import _sinkhorn
from .core import ParticleMeasure

W2_SUPPORT_CAP = 2000


@dataclass
class SinkhornConfig:
    """epsilon: entropic regularisation (squared-distance units);
    tol: sup-norm potential change per iteration that counts as converged."""

    epsilon: float = 0.05
    max_iters: int = 500
    tol: float = 1e-9

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")


@dataclass
class DualPotentials:
    f: np.ndarray
    g: np.ndarray
    converged: bool
    iterations_used: int


def _atoms(x):
    return x.atoms if isinstance(x, ParticleMeasure) else np.atleast_2d(np.asarray(x, dtype=float))


def cost_matrix(a, b):
    """C[i, j] = squared Euclidean distance between atom i of a and atom j of b."""
    A, B = _atoms(a), _atoms(b)
    if A.shape[1] != B.shape[1]:
        raise ValueError("dimension mismatch between supports")
    sq = np.sum(A**2, axis=1)[:, None] + np.sum(B**2, axis=1)[None, :]
    C = sq - 2.0 * (A @ B.T)
    np.maximum(C, 0.0, out=C)
    return C


def _lse(z, axis):
    mx = np.max(z, axis=axis, keepdims=True)
    return (mx + np.log(np.sum(np.exp(z - mx), axis=axis, keepdims=True))).reshape(
        z.shape[1 - axis] if z.ndim == 2 else -1
    )


def sinkhorn_potentials(mu, nu, cfg, warm=None):
    """Dual potentials for OT_eps(mu, nu), warm-startable.

    Zero-weight atoms are excluded from the iteration and receive the
    soft-min extension of the converged opposite-side potential, so the
    returned vectors are finite and aligned with the input supports.
    """
    C = cost_matrix(mu, nu)
    a, b = mu.weights, nu.weights
    f0 = np.zeros(mu.n) if warm is None else np.array(warm.f, dtype=float)
    g0 = np.zeros(nu.n) if warm is None else np.array(warm.g, dtype=float)
    ia, ib = a > 0.0, b > 0.0
    full = bool(ia.all() and ib.all())
    if full:
        Cs, as_, bs = C, a, b
        f, g = f0.copy(), g0.copy()
    else:
        Cs = np.ascontiguousarray(C[np.ix_(ia, ib)])
        as_, bs = a[ia], b[ib]
        f, g = f0[ia].copy(), g0[ib].copy()
    iters, delta = _sinkhorn.solve(
        Cs, as_, bs, np.log(as_), np.log(bs), f, g,
        cfg.epsilon, cfg.tol, cfg.max_iters,
    )
    if not full:
        ffull = np.empty(mu.n)
        gfull = np.empty(nu.n)
        ffull[ia], gfull[ib] = f, g
        eps = cfg.epsilon
        if not ib.all():
            Z = (f[:, None] - C[np.ix_(ia, ~ib)]) / eps + np.log(as_)[:, None]
            gfull[~ib] = -eps * _lse(Z, axis=0)
        if not ia.all():
            Z = (g[None, :] - C[np.ix_(~ia, ib)]) / eps + np.log(bs)[None, :]
            ffull[~ia] = -eps * _lse(Z, axis=1)
        f, g = ffull, gfull
    shift = float(np.dot(a, f))
    f = f - shift
    g = g + shift
    return DualPotentials(f, g, bool(delta < cfg.tol), iters)


def plan(pot, mu, nu, cfg):
    """Implied primal coupling P[i, j] = w_i v_j exp((f_i + g_j - C_ij)/eps)."""
    C = cost_matrix(mu, nu)
    logw = np.full(mu.n, -np.inf)
    logv = np.full(nu.n, -np.inf)
    np.log(mu.weights, out=logw, where=mu.weights > 0)
    np.log(nu.weights, out=logv, where=nu.weights > 0)
    return np.exp(
        logw[:, None] + logv[None, :] + (pot.f[:, None] + pot.g[None, :] - C) / cfg.epsilon
    )


def plan_marginal_error(pot, mu, nu, cfg):
    """L1 violation of the implied plan's row and column marginals."""
    P = plan(pot, mu, nu, cfg)
    row = np.abs(P.sum(axis=1) - mu.weights).sum()
    col = np.abs(P.sum(axis=0) - nu.weights).sum()
    return float(row + col)


def entropic_cost(mu, nu, cfg, warm=None):
    """OT_eps(mu, nu) evaluated from the (converged) dual potentials."""
    pot = sinkhorn_potentials(mu, nu, cfg, warm=warm)
    return float(np.dot(mu.weights, pot.f) + np.dot(nu.weights, pot.g))


def sinkhorn_divergence(mu, nu, cfg):
    """Debiased cost S_eps = OT(mu,nu) - [OT(mu,mu) + OT(nu,nu)] / 2."""
    return float(
        entropic_cost(mu, nu, cfg)
        - 0.5 * entropic_cost(mu, mu, cfg)
        - 0.5 * entropic_cost(nu, nu, cfg)
    )


def _responsibilities(pot, atoms, nu, eps):
    """Row-softmax weights s_j(theta_i) of the soft-min defining f."""
    C = cost_matrix(atoms, nu)
    logv = np.full(nu.n, -np.inf)
    np.log(nu.weights, out=logv, where=nu.weights > 0)
    Z = (pot.g[None, :] - C) / eps + logv[None, :]
    Z -= Z.max(axis=1, keepdims=True)
    S = np.exp(Z)
    S /= S.sum(axis=1, keepdims=True)
    return S


def potential_gradients(pot, mu, nu, cfg):
    """grad_theta f at every source atom, from the soft-min representation:
    sum_j s_j * 2 (theta_i - vartheta_j)."""
    S = _responsibilities(pot, mu.atoms, nu, cfg.epsilon)
    return 2.0 * (mu.atoms - S @ nu.atoms)


def potential_gradient(pot, mu, nu, cfg, i):
    """grad_theta f at source atom i."""
    S = _responsibilities(pot, mu.atoms[i : i + 1], nu, cfg.epsilon)
    return (2.0 * (mu.atoms[i] - S[0] @ nu.atoms)).reshape(-1)


def exact_w2(mu, nu, support_cap=W2_SUPPORT_CAP):
    """Exact discrete W2 via an LP on the dense bipartite graph.

    Caps the combined support size instead of approximating; callers with
    larger measures should subsample first.
    """
    if mu.n + nu.n > support_cap:
        raise ValueError(
            f"combined support {mu.n + nu.n} exceeds cap {support_cap}; "
            "subsample the inputs"
        )
    C = cost_matrix(mu, nu)
    n, m = C.shape
    rows = sparse.kron(sparse.eye(n, format="csr"), np.ones((1, m)), format="csr")
    cols = sparse.kron(np.ones((1, n)), sparse.eye(m, format="csr"), format="csr")
    A = sparse.vstack([rows, cols], format="csr")
    rhs = np.concatenate([mu.weights, nu.weights])
    res = linprog(
        C.ravel(), A_eq=A, b_eq=rhs, bounds=(0, None),
        method="highs", options={"presolve": False},
    )
    if res.status != 0:
        raise RuntimeError(f"transport LP failed: {res.message}")
    return float(np.sqrt(max(res.fun, 0.0)))
