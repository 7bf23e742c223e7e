"""The three sequential update schemes on particle measures.

newton: convex-combination weight recursion after each observation.
fisher_rao: multiplicative reweighting by the negative centred first
    variation (atoms never move).
wfr: splitting scheme — reaction (reweighting), systematic resampling,
    then a transport step that moves atoms along the likelihood gradient
    and the entropic prior-potential gradients, with optional diffusion.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import core
from .core import (
    GaussianKernel,
    ParticleMeasure,
    kernel_eval_atoms,
    kernel_grad_theta,
    marginal_likelihood,
)
from .priors import PriorSpec, prior_monte_carlo
from .transport import (
    DualPotentials,
    SinkhornConfig,
    potential_gradients,
    sinkhorn_potentials,
)

MODES = ("newton", "fisher_rao", "wfr")


@dataclass
class AlphaSchedule:
    """Step-weight sequence: harmonic 1/(n+2) or power (n+2)^(-gamma)."""

    kind: str = "harmonic"
    gamma: float | None = None

    def __post_init__(self):
        if self.kind not in ("harmonic", "power"):
            raise ValueError(f"unknown alpha schedule {self.kind!r}")
        if self.kind == "power":
            if self.gamma is None or not 0.5 < self.gamma <= 1.0:
                raise ValueError("power schedule needs gamma in (0.5, 1]")
        elif self.gamma is not None:
            raise ValueError("gamma only applies to the power schedule")


def alpha(n, schedule):
    """n-th step weight, n >= 0; lies in (0, 1) and is square-summable."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if schedule.kind == "harmonic":
        return 1.0 / (n + 2.0)
    return float((n + 2.0) ** (-schedule.gamma))


@dataclass
class LambdaSchedule:
    """Prior-regularisation strength over time: constant or min(l0, C/log(t+e))."""

    kind: str = "constant"
    C: float | None = None

    def __post_init__(self):
        if self.kind not in ("constant", "log_anneal"):
            raise ValueError(f"unknown lambda schedule {self.kind!r}")
        if self.kind == "log_anneal":
            if self.C is None or self.C <= 0:
                raise ValueError("log_anneal schedule needs C > 0")
        elif self.C is not None:
            raise ValueError("C only applies to the log_anneal schedule")


def lambda_at(t, schedule, lambda0):
    if t < 0:
        raise ValueError("t must be nonnegative")
    if schedule.kind == "constant":
        return lambda0
    return min(lambda0, schedule.C / math.log(t + math.e))


@dataclass
class FlowConfig:
    """Every scheme parameter in one place.

    dt=None uses the alpha schedule value as the per-step reaction step
    size; an explicit float fixes it. tau is the transport step size.
    lambda0 scales the prior reaction force; prior_drift_weight scales the
    prior transport drift (the two knobs are independent). M prior
    realisations are redrawn every step unless freeze_prior_draws is set.
    eval_every > 0 evaluates the caller-provided metric on that step cadence.
    """

    mode: str = "wfr"
    kernel: GaussianKernel = field(default_factory=GaussianKernel)
    alpha_schedule: AlphaSchedule = field(default_factory=AlphaSchedule)
    dt: float | None = None
    tau: float = 0.03
    lambda0: float = 0.05
    lambda_schedule: LambdaSchedule = field(default_factory=LambdaSchedule)
    prior_drift_weight: float = 0.1
    M: int = 2
    sinkhorn: SinkhornConfig = field(
        default_factory=lambda: SinkhornConfig(epsilon=0.05, max_iters=25, tol=1e-9)
    )
    resample: bool = True
    diffusion: bool = False
    N: int = 50
    prior: PriorSpec | None = None
    freeze_prior_draws: bool = False
    eval_every: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.dt is not None and self.dt < 0:
            raise ValueError("dt must be nonnegative or None")
        if self.tau < 0:
            raise ValueError("tau must be nonnegative")
        if self.lambda0 < 0:
            raise ValueError("lambda0 must be nonnegative")
        if self.prior_drift_weight < 0:
            raise ValueError("prior_drift_weight must be nonnegative")
        if self.M < 1:
            raise ValueError("M must be at least 1")
        if self.N < 1:
            raise ValueError("N must be at least 1")
        if self.eval_every < 0:
            raise ValueError("eval_every must be nonnegative")


@dataclass
class FlowState:
    """Evolving measure plus warm-start cache and running diagnostics."""

    measure: ParticleMeasure
    step: int = 0
    potentials: list | None = None
    underflow_count: int = 0
    nonconverged_count: int = 0


@dataclass
class RunRecord:
    """One trace row: 0-based observation index, the observation, the
    post-update effective sample size, and W2-to-truth when evaluated
    (NaN otherwise)."""

    step: int
    x: np.ndarray
    ess: float
    w2: float = float("nan")


def newton_update(mu, x, a, k):
    """Weight recursion w_i <- (1-a) w_i + a * w_i k(x, theta_i) / ml."""
    if not 0.0 < a < 1.0:
        raise ValueError("step weight a must lie in (0, 1)")
    ml = marginal_likelihood(mu, x, k)
    post = mu.weights * kernel_eval_atoms(k, x, mu.atoms) / ml
    w = (1.0 - a) * mu.weights + a * post
    return mu.with_weights(w / w.sum())


def likelihood_force(mu, x, k):
    """First variation of the data-fit functional at each atom:
    g_i = -k(x, theta_i) / sum_j w_j k(x, theta_j); satisfies
    sum_i w_i g_i = -1 up to roundoff (exactly -1 unless the marginal
    likelihood hit its floor)."""
    ml = marginal_likelihood(mu, x, k)
    return -kernel_eval_atoms(k, x, mu.atoms) / ml


def prior_force(mu, prior_draws, cfg, state=None):
    """Average source potential over the prior realisations, mean-zero
    under mu by the potential gauge.

    When a FlowState is passed, its per-draw potentials warm-start the
    solves, the cache is refreshed, and non-converged solves are counted.
    """
    if not prior_draws:
        raise ValueError("prior_draws must be nonempty")
    h = np.zeros(mu.n)
    pots = []
    for m_idx, p in enumerate(prior_draws):
        warm = None
        if state is not None and state.potentials and m_idx < len(state.potentials):
            cand = state.potentials[m_idx]
            if cand.f.shape[0] == mu.n and cand.g.shape[0] == p.n:
                warm = cand
        pot = sinkhorn_potentials(mu, p, cfg.sinkhorn, warm=warm)
        if state is not None and not pot.converged:
            state.nonconverged_count += 1
        pots.append(pot)
        h += pot.f
    if state is not None:
        state.potentials = pots
    return h / len(prior_draws)


def fr_weight_step(mu, V, dt):
    """Multiplicative reaction w_i <- w_i exp[-dt (V_i - Vbar)], renormalised.

    Computed in log space; zero weights stay zero."""
    V = np.asarray(V, dtype=float)
    vbar = float(np.dot(mu.weights, V))
    logw = np.full(mu.n, -np.inf)
    np.log(mu.weights, out=logw, where=mu.weights > 0)
    lw = logw - dt * (V - vbar)
    lw -= lw.max()
    w = np.exp(lw)
    return mu.with_weights(w / w.sum())


def _systematic_indices(weights, n, rng):
    pos = (rng.random() + np.arange(n)) / n
    idx = np.searchsorted(np.cumsum(weights), pos, side="right")
    return np.minimum(idx, len(weights) - 1)


def resample(mu, rng, n=None):
    """Systematic resampling with replacement to uniform weights."""
    n = mu.n if n is None else n
    idx = _systematic_indices(mu.weights, n, rng)
    return ParticleMeasure(mu.atoms[idx], np.full(n, 1.0 / n))


def transport_step(mu, x, prior_draws, cfg, rng, potentials=None):
    """Euler(-Maruyama) atom update theta <- theta - tau * drift (+ noise).

    drift_i = -grad_theta k(x, theta_i) / ml
              + prior_drift_weight * mean_m grad f_{mu->p_m}(theta_i).
    The first term moves atoms up the kernel (toward the observation); the
    second moves them down the entropic potentials (toward the prior).
    Pass the potentials from a prior_force call on the same measures to
    reuse those solves; otherwise fresh ones are computed.
    """
    ml = marginal_likelihood(mu, x, cfg.kernel)
    drift = -kernel_grad_theta(cfg.kernel, x, mu.atoms) / ml
    if prior_draws and cfg.prior_drift_weight > 0:
        if potentials is None:
            potentials = [
                sinkhorn_potentials(mu, p, cfg.sinkhorn) for p in prior_draws
            ]
        G = np.zeros_like(mu.atoms)
        for pot, p in zip(potentials, prior_draws):
            G += potential_gradients(pot, mu, p, cfg.sinkhorn)
        drift += cfg.prior_drift_weight * G / len(prior_draws)
    atoms = mu.atoms - cfg.tau * drift
    if cfg.diffusion:
        atoms = atoms + math.sqrt(2.0 * cfg.tau) * rng.standard_normal(atoms.shape)
    return ParticleMeasure(atoms, mu.weights)


def wfr_step(state, x, prior_draws, cfg, rng):
    """One full splitting step: reaction, optional resampling, transport."""
    mu = state.measure
    lam = lambda_at(state.step, cfg.lambda_schedule, cfg.lambda0)
    use_prior = bool(prior_draws) and (lam > 0 or cfg.prior_drift_weight > 0)
    V = likelihood_force(mu, x, cfg.kernel)
    pots = None
    if use_prior:
        h = prior_force(mu, prior_draws, cfg, state)
        pots = state.potentials
        if lam > 0:
            V = V + lam * h
    dt = alpha(state.step, cfg.alpha_schedule) if cfg.dt is None else cfg.dt
    mu = fr_weight_step(mu, V, dt)
    if cfg.resample:
        idx = _systematic_indices(mu.weights, mu.n, rng)
        mu = ParticleMeasure(mu.atoms[idx], np.full(mu.n, 1.0 / mu.n))
        if pots is not None:
            # keep the warm cache aligned with the surviving atoms
            pots = [
                DualPotentials(p.f[idx].copy(), p.g, p.converged, p.iterations_used)
                for p in pots
            ]
            state.potentials = pots
    mu = transport_step(mu, x, prior_draws, cfg, rng, potentials=pots)
    state.measure = mu
    state.step += 1
    return state


def run_flow(mode, data_stream, init, cfg, rng, w2_eval=None, state=None):
    """Consume the stream sequentially under the given mode.

    Returns the final FlowState and the per-step trace. w2_eval, when
    provided together with cfg.eval_every > 0, is called on the measure
    every eval_every steps and recorded in the trace. Passing a FlowState
    resumes it (init is ignored): schedules, caches, and counters carry on
    where the previous run stopped.
    """
    data_stream = np.atleast_2d(np.asarray(data_stream, dtype=float))
    if data_stream.shape[0] == 0:
        raise ValueError("data stream is empty")
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if state is None:
        state = FlowState(measure=init)
    underflows_before = core.underflow_count()
    needs_prior = mode != "newton" and cfg.prior is not None and (
        cfg.lambda0 > 0 or (mode == "wfr" and cfg.prior_drift_weight > 0)
    )
    frozen = None
    if needs_prior and cfg.freeze_prior_draws:
        frozen = prior_monte_carlo(cfg.prior, cfg.M, rng)
    records = []
    for x in data_stream:
        k = state.step
        draws = None
        if needs_prior:
            draws = frozen if frozen is not None else prior_monte_carlo(
                cfg.prior, cfg.M, rng
            )
        if mode == "newton":
            a = alpha(k, cfg.alpha_schedule)
            state.measure = newton_update(state.measure, x, a, cfg.kernel)
            state.step = k + 1
        elif mode == "fisher_rao":
            V = likelihood_force(state.measure, x, cfg.kernel)
            lam = lambda_at(k, cfg.lambda_schedule, cfg.lambda0)
            if draws is not None and lam > 0:
                V = V + lam * prior_force(state.measure, draws, cfg, state)
            dt = alpha(k, cfg.alpha_schedule) if cfg.dt is None else cfg.dt
            state.measure = fr_weight_step(state.measure, V, dt)
            state.step = k + 1
        else:
            state = wfr_step(state, x, draws, cfg, rng)
        wsum = float(state.measure.weights.sum())
        if abs(wsum - 1.0) > 1e-10:
            raise RuntimeError(f"weight normalisation drifted to {wsum!r}")
        w2 = float("nan")
        if w2_eval is not None and cfg.eval_every > 0 and state.step % cfg.eval_every == 0:
            w2 = float(w2_eval(state.measure))
        records.append(RunRecord(k, x, state.measure.ess(), w2))
    state.underflow_count += core.underflow_count() - underflows_before
    return state, records
