"""Pitman-Yor / Dirichlet-process priors via truncated stick-breaking."""

import numpy as np

from .core import ParticleMeasure, as_point


class PriorSpec:
    """Pitman-Yor prior PY(discount, concentration, N(base_mean, base_cov)),
    truncated at K sticks with the residual mass on the last atom.

    discount=0 degenerates to the Dirichlet process with the given
    concentration.
    """

    def __init__(self, discount, concentration, base_mean, base_cov, K=64):
        if not 0.0 <= discount < 1.0:
            raise ValueError("discount must lie in [0, 1)")
        if concentration <= -discount:
            raise ValueError("concentration must exceed -discount")
        if K < 1:
            raise ValueError("K must be at least 1")
        self.discount = float(discount)
        self.concentration = float(concentration)
        self.base_mean = as_point(base_mean)
        base_cov = np.asarray(base_cov, dtype=float)
        if base_cov.shape != (self.base_mean.size,) * 2:
            raise ValueError("base_cov shape does not match base_mean")
        self._chol = np.linalg.cholesky(base_cov)  # raises if not SPD
        self.base_cov = base_cov
        self.K = int(K)

    @property
    def dim(self):
        return self.base_mean.size

    def sample_base(self, n, rng):
        z = rng.standard_normal((n, self.dim))
        return self.base_mean + z @ self._chol.T


def stick_breaking_draw(spec, rng):
    """One truncated stick-breaking realisation of the prior.

    Atoms are i.i.d. from the base measure; weights are
    w_k = V_k prod_{j<k} (1 - V_j) with V_k ~ Beta(1 - d, c + k d),
    and the residual mass after K-1 sticks goes to the last atom.
    """
    atoms = spec.sample_base(spec.K, rng)
    w = np.empty(spec.K)
    if spec.K == 1:
        w[0] = 1.0
        return ParticleMeasure(atoms, w)
    ks = np.arange(1, spec.K)
    sticks = rng.beta(1.0 - spec.discount, spec.concentration + ks * spec.discount)
    remaining = 1.0
    for k, v in enumerate(sticks):
        w[k] = v * remaining
        remaining *= 1.0 - v
    w[-1] = remaining
    return ParticleMeasure(atoms, w)


def init_particles(spec, N, rng):
    """N atoms i.i.d. from the base measure (the prior's mean measure),
    uniform weights."""
    if N < 1:
        raise ValueError("N must be at least 1")
    atoms = spec.sample_base(N, rng)
    return ParticleMeasure(atoms, np.full(N, 1.0 / N))


def prior_monte_carlo(spec, M, rng):
    """M independent stick-breaking realisations."""
    if M < 1:
        raise ValueError("M must be at least 1")
    return [stick_breaking_draw(spec, rng) for _ in range(M)]
