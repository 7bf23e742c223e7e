"""Particle flows for sequential estimation of mixing measures.

Sequentially estimates the mixing measure of a nonparametric mixture from
streaming observations, by Newton's recursion, a Fisher-Rao reweighting
flow, or a Wasserstein--Fisher-Rao splitting scheme whose prior forces
come from entropic optimal transport against Pitman-Yor realisations.
"""

__version__ = "0.1.0"

from .core import (
    GaussianKernel,
    GaussianMixture,
    ParticleMeasure,
    four_component_target,
    kernel_eval,
    kernel_eval_atoms,
    kernel_grad_theta,
    marginal_likelihood,
    mixture_density,
    paw_target,
    sample_mixture,
)
from .priors import PriorSpec, init_particles, prior_monte_carlo, stick_breaking_draw
from .transport import (
    DualPotentials,
    SinkhornConfig,
    cost_matrix,
    entropic_cost,
    exact_w2,
    plan,
    plan_marginal_error,
    potential_gradient,
    potential_gradients,
    sinkhorn_divergence,
    sinkhorn_potentials,
)
from .flows import (
    AlphaSchedule,
    FlowConfig,
    FlowState,
    LambdaSchedule,
    alpha,
    fr_weight_step,
    lambda_at,
    likelihood_force,
    newton_update,
    prior_force,
    resample,
    run_flow,
    transport_step,
    wfr_step,
)
from .streams import (
    StreamSpec,
    bayesian_bootstrap_stream,
    continuation_length,
    make_stream,
    step_interpolate,
)
from .experiments import (
    ExperimentResult,
    quantile_band,
    run_experiment_1,
    run_experiment_2,
    run_experiment_3,
    w2_to_truth,
)
from .config import RunConfig, config_from_dict, parse_config

__all__ = [
    "AlphaSchedule",
    "DualPotentials",
    "ExperimentResult",
    "FlowConfig",
    "FlowState",
    "GaussianKernel",
    "GaussianMixture",
    "LambdaSchedule",
    "ParticleMeasure",
    "PriorSpec",
    "RunConfig",
    "SinkhornConfig",
    "StreamSpec",
    "alpha",
    "bayesian_bootstrap_stream",
    "config_from_dict",
    "continuation_length",
    "cost_matrix",
    "entropic_cost",
    "exact_w2",
    "four_component_target",
    "fr_weight_step",
    "init_particles",
    "kernel_eval",
    "kernel_eval_atoms",
    "kernel_grad_theta",
    "lambda_at",
    "likelihood_force",
    "make_stream",
    "marginal_likelihood",
    "mixture_density",
    "newton_update",
    "parse_config",
    "paw_target",
    "plan",
    "plan_marginal_error",
    "potential_gradient",
    "potential_gradients",
    "prior_force",
    "prior_monte_carlo",
    "quantile_band",
    "resample",
    "run_experiment_1",
    "run_experiment_2",
    "run_experiment_3",
    "run_flow",
    "sample_mixture",
    "sinkhorn_divergence",
    "sinkhorn_potentials",
    "step_interpolate",
    "stick_breaking_draw",
    "transport_step",
    "w2_to_truth",
    "wfr_step",
]
