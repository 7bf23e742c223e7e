"""Weighted atomic measures, Gaussian kernels, and Gaussian mixture targets.

A ParticleMeasure is the state every flow evolves: N locations in R^d and a
probability weight vector. GaussianMixture is the ground truth used for data
generation and evaluation.
"""

import math

import numpy as np

# marginal_likelihood floors its result here instead of raising, so long
# flows survive observations that are astronomically far from every atom.
LIKELIHOOD_FLOOR = 1e-300

_underflow_count = 0


def underflow_count():
    """Number of marginal-likelihood evaluations that hit the floor."""
    return _underflow_count


def reset_underflow_count():
    global _underflow_count
    _underflow_count = 0


def as_point(x, dim=None):
    """Coerce to a finite 1-D float array, optionally checking its length."""
    p = np.asarray(x, dtype=float).reshape(-1)
    if not np.all(np.isfinite(p)):
        raise ValueError("point has non-finite entries")
    if dim is not None and p.size != dim:
        raise ValueError(f"expected dimension {dim}, got {p.size}")
    return p


class ParticleMeasure:
    """Weighted atomic measure sum_i w_i delta_{theta_i}.

    Parameters
    ----------
    atoms : (N, d) array_like
        Atom locations.
    weights : (N,) array_like
        Nonnegative, summing to 1 within 1e-12. Stored exactly normalised.
    """

    def __init__(self, atoms, weights):
        atoms = np.atleast_2d(np.asarray(atoms, dtype=float))
        weights = np.asarray(weights, dtype=float).reshape(-1)
        if atoms.shape[0] != weights.shape[0]:
            raise ValueError("atoms and weights lengths differ")
        if not np.all(np.isfinite(atoms)):
            raise ValueError("atoms have non-finite entries")
        if not np.all(np.isfinite(weights)):
            raise ValueError("weights have non-finite entries")
        if np.any(weights < 0.0):
            raise ValueError("weights must be nonnegative")
        s = float(weights.sum())
        if abs(s - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {s!r}, not 1")
        self.atoms = np.ascontiguousarray(atoms)
        self.weights = weights / s

    @property
    def n(self):
        return self.atoms.shape[0]

    @property
    def dim(self):
        return self.atoms.shape[1]

    def ess(self):
        """Effective sample size 1 / sum w_i^2."""
        return 1.0 / float(np.sum(self.weights**2))

    def with_weights(self, weights):
        """Same atoms, new weights (normalised by the constructor)."""
        return ParticleMeasure(self.atoms, weights)


class GaussianKernel:
    """Isotropic Gaussian location kernel k(x, theta) = N(x; theta, h^2 I)."""

    def __init__(self, bandwidth=0.35, dim=2):
        if bandwidth <= 0:
            raise ValueError("bandwidth must be positive")
        self.h = float(bandwidth)
        self.dim = int(dim)
        self._lognorm = -0.5 * self.dim * math.log(2.0 * math.pi * self.h**2)


def kernel_eval(k, x, theta):
    """Kernel density k(x, theta); symmetric in its two arguments."""
    x = as_point(x, k.dim)
    theta = as_point(theta, k.dim)
    q = float(np.sum((x - theta) ** 2)) / k.h**2
    return math.exp(k._lognorm - 0.5 * q)


def kernel_eval_atoms(k, x, atoms):
    """Vectorised k(x, theta_i) over an (N, d) atom array."""
    x = as_point(x, k.dim)
    q = np.sum((atoms - x) ** 2, axis=1) / k.h**2
    return np.exp(k._lognorm - 0.5 * q)


def kernel_grad_theta(k, x, atoms):
    """Gradient of k(x, theta) in theta at each atom: k * (x - theta) / h^2."""
    x = as_point(x, k.dim)
    vals = kernel_eval_atoms(k, x, atoms)
    return vals[:, None] * (x[None, :] - atoms) / k.h**2


def marginal_likelihood(mu, x, k):
    """sum_i w_i k(x, theta_i), floored at LIKELIHOOD_FLOOR.

    Floor hits increment the module underflow counter instead of aborting.
    """
    global _underflow_count
    ml = float(np.dot(mu.weights, kernel_eval_atoms(k, x, mu.atoms)))
    if ml < LIKELIHOOD_FLOOR:
        _underflow_count += 1
        return LIKELIHOOD_FLOOR
    return ml


class GaussianMixture:
    """Finite Gaussian mixture: list of (mean, cov, weight) components."""

    def __init__(self, components):
        if not components:
            raise ValueError("mixture needs at least one component")
        means, covs, weights = [], [], []
        for mean, cov, w in components:
            mean = as_point(mean)
            cov = np.asarray(cov, dtype=float)
            if cov.shape != (mean.size, mean.size):
                raise ValueError("covariance shape does not match mean")
            if not np.allclose(cov, cov.T):
                raise ValueError("covariance not symmetric")
            try:
                np.linalg.cholesky(cov)
            except np.linalg.LinAlgError:
                raise ValueError("covariance not positive definite") from None
            if w < 0:
                raise ValueError("component weights must be nonnegative")
            means.append(mean)
            covs.append(cov)
            weights.append(float(w))
        self.means = np.array(means)
        self.covs = np.array(covs)
        weights = np.array(weights)
        s = weights.sum()
        if abs(s - 1.0) > 1e-12:
            raise ValueError(f"component weights sum to {s!r}, not 1")
        self.weights = weights / s
        self._chols = np.array([np.linalg.cholesky(c) for c in self.covs])
        self._logdets = np.array(
            [2.0 * np.sum(np.log(np.diag(L))) for L in self._chols]
        )

    @property
    def dim(self):
        return self.means.shape[1]

    @property
    def n_components(self):
        return self.means.shape[0]


def mixture_density(gm, x):
    """Mixture pdf sum_j pi_j N(x; m_j, Sigma_j)."""
    x = as_point(x, gm.dim)
    d = gm.dim
    out = 0.0
    for j in range(gm.n_components):
        z = np.linalg.solve(gm._chols[j], x - gm.means[j])
        logp = -0.5 * (d * math.log(2.0 * math.pi) + gm._logdets[j] + z @ z)
        out += gm.weights[j] * math.exp(logp)
    return out


def sample_mixture(gm, n, rng):
    """n i.i.d. draws from the mixture; deterministic under a fixed seed."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n == 0:
        return np.empty((0, gm.dim))
    comps = rng.choice(gm.n_components, size=n, p=gm.weights)
    z = rng.standard_normal((n, gm.dim))
    return gm.means[comps] + np.einsum("njk,nk->nj", gm._chols[comps], z)


def paw_target():
    """Seven-component 2-D mixture laid out as a paw print: palm, four toes,
    two heel lobes.  The paw sits far off-centre, deep in one tail of the
    diffuse initialisations used by the experiments, so that recovering it
    requires moving support rather than merely reweighting a lucky atom."""
    centre, scale = 6.5, 0.6
    iso = lambda s: (s**2) * np.eye(2)
    comps = [((centre, centre - 0.5 * scale), iso(0.35 * scale), 0.28)]
    toes = [(-1.2, 1.0), (-0.45, 1.45), (0.45, 1.45), (1.2, 1.0)]
    comps += [
        ((centre + t0 * scale, centre + t1 * scale), iso(0.18 * scale), 0.13)
        for t0, t1 in toes
    ]
    comps += [
        ((centre + m0 * scale, centre + m1 * scale), iso(0.22 * scale), 0.10)
        for m0, m1 in [(-0.5, -1.3), (0.5, -1.3)]
    ]
    return GaussianMixture(comps)


def four_component_target():
    """Equal-weight 2-D mixture on the four corners (+-2, +-2)."""
    iso = (0.3**2) * np.eye(2)
    corners = [(-2.0, -2.0), (-2.0, 2.0), (2.0, -2.0), (2.0, 2.0)]
    return GaussianMixture([(m, iso, 0.25) for m in corners])
