"""Strict JSON run configuration.

Unknown fields are rejected so parameter typos fail loudly; omitted fields
fall back to the defaults of the subcommand's experiment profile. Values
are validated by constructing the actual module objects, so range errors
carry the offending field name.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .core import (
    GaussianKernel,
    four_component_target,
    paw_target,
)
from .flows import MODES, AlphaSchedule, FlowConfig, LambdaSchedule
from .priors import PriorSpec
from .transport import SinkhornConfig

TARGETS = {"paw": paw_target, "four_component": four_component_target}


class ConfigError(ValueError):
    pass


def _check_keys(d, allowed, where):
    unknown = sorted(set(d) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown field(s) {unknown} in {where}")


def _get(d, key, default):
    """Field lookup where an explicit JSON null means 'use the default'.

    Genuinely nullable fields (dt, gamma, C, data, init_atoms) bypass this.
    """
    v = d.get(key)
    return default if v is None else v


@dataclass
class ScheduleCfg:
    kind: str
    param: float | None = None


@dataclass
class FlowCfg:
    alpha: ScheduleCfg = field(default_factory=lambda: ScheduleCfg("harmonic"))
    dt: float | None = None
    tau: float = 0.03
    lambda0: float = 0.05
    lambda_schedule: ScheduleCfg = field(default_factory=lambda: ScheduleCfg("constant"))
    prior_drift_weight: float = 0.1
    M: int = 2
    resample: bool = True
    diffusion: bool = False
    N: int = 50
    freeze_prior_draws: bool = False
    eval_every: int = 0


@dataclass
class SinkhornCfg:
    epsilon: float = 0.05
    max_iters: int = 25
    tol: float = 1e-9


@dataclass
class KernelCfg:
    bandwidth: float = 0.35


@dataclass
class PriorCfg:
    discount: float = 0.2
    concentration: float = 10.0
    base_mean: tuple = (0.0, 0.0)
    base_var: float = 25.0
    K: int = 64


@dataclass
class RunConfig:
    seed: int = 0
    target: str = "paw"
    n: int = 1000
    n_grid: tuple = tuple(range(100, 1001, 100))
    replicates: int = 100
    n_ref: int = 1000
    mode: str = "wfr"
    flow: FlowCfg = field(default_factory=FlowCfg)
    sinkhorn: SinkhornCfg = field(default_factory=SinkhornCfg)
    kernel: KernelCfg = field(default_factory=KernelCfg)
    prior: PriorCfg = field(default_factory=PriorCfg)
    data: tuple | None = None
    init_atoms: tuple | None = None

    # ---- materialisers -------------------------------------------------
    def target_mixture(self):
        return TARGETS[self.target]()

    def dim(self):
        return len(self.prior.base_mean)

    def make_kernel(self):
        return GaussianKernel(self.kernel.bandwidth, dim=self.dim())

    def prior_spec(self):
        d = len(self.prior.base_mean)
        return PriorSpec(
            self.prior.discount,
            self.prior.concentration,
            self.prior.base_mean,
            self.prior.base_var * np.eye(d),
            K=self.prior.K,
        )

    def flow_config(self, mode=None, lambda0=None):
        f = self.flow
        return FlowConfig(
            mode=self.mode if mode is None else mode,
            kernel=self.make_kernel(),
            alpha_schedule=AlphaSchedule(f.alpha.kind, f.alpha.param),
            dt=f.dt,
            tau=f.tau,
            lambda0=f.lambda0 if lambda0 is None else lambda0,
            lambda_schedule=LambdaSchedule(
                f.lambda_schedule.kind, f.lambda_schedule.param
            ),
            prior_drift_weight=f.prior_drift_weight,
            M=f.M,
            sinkhorn=SinkhornConfig(
                self.sinkhorn.epsilon, self.sinkhorn.max_iters, self.sinkhorn.tol
            ),
            resample=f.resample,
            diffusion=f.diffusion,
            N=f.N,
            prior=self.prior_spec(),
            freeze_prior_draws=f.freeze_prior_draws,
            eval_every=f.eval_every,
        )


PROFILES = {
    "flow-compare": {},
    "run": {},
    "render": {},
    # The bootstrap studies track slow convergence across sample sizes, so
    # they use a wider likelihood kernel than the flow comparison: with a
    # narrow kernel the transport settles within a few dozen steps and the
    # truncated and continuation arms become indistinguishable.
    "bootstrap-study": {
        "target": "four_component",
        "prior": {"base_var": 9.0},
        "kernel": {"bandwidth": 1.4},
    },
    "prior-ablation": {
        "target": "four_component",
        "prior": {"base_var": 9.0},
        "kernel": {"bandwidth": 1.4},
    },
}


def _schedule_from(d, where, kinds, param_name):
    _check_keys(d, ("kind", param_name), where)
    kind = d.get("kind", kinds[0])
    if kind not in kinds:
        raise ConfigError(f"{where}.kind must be one of {kinds}, got {kind!r}")
    param = d.get(param_name)
    return ScheduleCfg(kind, None if param is None else float(param))


def config_from_dict(data, profile="flow-compare"):
    """Build and validate a RunConfig from plain JSON data."""
    if profile not in PROFILES:
        raise ConfigError(f"unknown profile {profile!r}")
    if not isinstance(data, dict):
        raise ConfigError("configuration root must be a JSON object")
    base = PROFILES[profile]
    _check_keys(
        data,
        (
            "seed", "target", "n", "n_grid", "replicates", "n_ref", "mode",
            "flow", "sinkhorn", "kernel", "prior", "data", "init_atoms",
        ),
        "config",
    )
    defaults = RunConfig()

    fd = dict(data.get("flow") or {})
    _check_keys(
        fd,
        (
            "alpha", "dt", "tau", "lambda0", "lambda_schedule",
            "prior_drift_weight", "M", "resample", "diffusion", "N",
            "freeze_prior_draws", "eval_every",
        ),
        "flow",
    )
    dt = fd.get("dt")
    flow = FlowCfg(
        alpha=_schedule_from(dict(fd.get("alpha") or {}), "flow.alpha",
                             ("harmonic", "power"), "gamma"),
        dt=None if dt is None else float(dt),
        tau=float(_get(fd, "tau", defaults.flow.tau)),
        lambda0=float(_get(fd, "lambda0", defaults.flow.lambda0)),
        lambda_schedule=_schedule_from(
            dict(fd.get("lambda_schedule") or {}), "flow.lambda_schedule",
            ("constant", "log_anneal"), "C",
        ),
        prior_drift_weight=float(
            _get(fd, "prior_drift_weight", defaults.flow.prior_drift_weight)
        ),
        M=int(_get(fd, "M", defaults.flow.M)),
        resample=bool(_get(fd, "resample", defaults.flow.resample)),
        diffusion=bool(_get(fd, "diffusion", defaults.flow.diffusion)),
        N=int(_get(fd, "N", defaults.flow.N)),
        freeze_prior_draws=bool(
            _get(fd, "freeze_prior_draws", defaults.flow.freeze_prior_draws)
        ),
        eval_every=int(_get(fd, "eval_every", defaults.flow.eval_every)),
    )

    sd = dict(data.get("sinkhorn") or {})
    _check_keys(sd, ("epsilon", "max_iters", "tol"), "sinkhorn")
    sink = SinkhornCfg(
        epsilon=float(_get(sd, "epsilon", defaults.sinkhorn.epsilon)),
        max_iters=int(_get(sd, "max_iters", defaults.sinkhorn.max_iters)),
        tol=float(_get(sd, "tol", defaults.sinkhorn.tol)),
    )

    kdef = dict(base.get("kernel", {}))
    kd = dict(data.get("kernel") or {})
    _check_keys(kd, ("bandwidth",), "kernel")
    kern = KernelCfg(
        bandwidth=float(
            _get(kd, "bandwidth", kdef.get("bandwidth", defaults.kernel.bandwidth))
        )
    )

    pdef = dict(base.get("prior", {}))
    pd = dict(data.get("prior") or {})
    _check_keys(pd, ("discount", "concentration", "base_mean", "base_var", "K"), "prior")
    prior = PriorCfg(
        discount=float(_get(pd, "discount", defaults.prior.discount)),
        concentration=float(
            _get(pd, "concentration", defaults.prior.concentration)
        ),
        base_mean=tuple(
            float(v) for v in _get(pd, "base_mean", list(defaults.prior.base_mean))
        ),
        base_var=float(
            _get(pd, "base_var", pdef.get("base_var", defaults.prior.base_var))
        ),
        K=int(_get(pd, "K", defaults.prior.K)),
    )

    def _points(key):
        v = data.get(key)
        if v is None:
            return None
        return tuple(tuple(float(c) for c in row) for row in v)

    rc = RunConfig(
        seed=int(_get(data, "seed", defaults.seed)),
        target=str(_get(data, "target", base.get("target", defaults.target))),
        n=int(_get(data, "n", defaults.n)),
        n_grid=tuple(int(v) for v in _get(data, "n_grid", list(defaults.n_grid))),
        replicates=int(_get(data, "replicates", defaults.replicates)),
        n_ref=int(_get(data, "n_ref", defaults.n_ref)),
        mode=str(_get(data, "mode", defaults.mode)),
        flow=flow,
        sinkhorn=sink,
        kernel=kern,
        prior=prior,
        data=_points("data"),
        init_atoms=_points("init_atoms"),
    )
    _validate(rc)
    return rc


def _validate(rc):
    if rc.target not in TARGETS:
        raise ConfigError(f"target must be one of {sorted(TARGETS)}, got {rc.target!r}")
    if rc.mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {rc.mode!r}")
    for name, v in (("n", rc.n), ("replicates", rc.replicates), ("n_ref", rc.n_ref)):
        if v < 1:
            raise ConfigError(f"{name} must be at least 1")
    if not rc.n_grid or any(v < 1 for v in rc.n_grid):
        raise ConfigError("n_grid must be a nonempty list of positive ints")
    if rc.seed < 0:
        raise ConfigError("seed must be a nonnegative integer")
    try:
        rc.make_kernel()
    except ValueError as e:
        raise ConfigError(f"kernel: {e}") from None
    try:
        rc.prior_spec()
    except (ValueError, np.linalg.LinAlgError) as e:
        raise ConfigError(f"prior: {e}") from None
    try:
        rc.flow_config()
    except ValueError as e:
        raise ConfigError(f"flow: {e}") from None
    for key, pts in (("data", rc.data), ("init_atoms", rc.init_atoms)):
        if pts is not None:
            if not pts or any(len(row) != rc.dim() for row in pts):
                raise ConfigError(
                    f"{key} must be a nonempty list of length-{rc.dim()} points"
                )


def parse_config(path, profile="flow-compare"):
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as e:
            raise ConfigError(f"invalid JSON in {path}: {e}") from None
    return config_from_dict(data, profile)


def serialise(rc):
    """RunConfig back to a plain JSON-compatible dict (a parse fixed point)."""
    return {
        "seed": rc.seed,
        "target": rc.target,
        "n": rc.n,
        "n_grid": list(rc.n_grid),
        "replicates": rc.replicates,
        "n_ref": rc.n_ref,
        "mode": rc.mode,
        "flow": {
            "alpha": {"kind": rc.flow.alpha.kind, "gamma": rc.flow.alpha.param},
            "dt": rc.flow.dt,
            "tau": rc.flow.tau,
            "lambda0": rc.flow.lambda0,
            "lambda_schedule": {
                "kind": rc.flow.lambda_schedule.kind,
                "C": rc.flow.lambda_schedule.param,
            },
            "prior_drift_weight": rc.flow.prior_drift_weight,
            "M": rc.flow.M,
            "resample": rc.flow.resample,
            "diffusion": rc.flow.diffusion,
            "N": rc.flow.N,
            "freeze_prior_draws": rc.flow.freeze_prior_draws,
            "eval_every": rc.flow.eval_every,
        },
        "sinkhorn": {
            "epsilon": rc.sinkhorn.epsilon,
            "max_iters": rc.sinkhorn.max_iters,
            "tol": rc.sinkhorn.tol,
        },
        "kernel": {"bandwidth": rc.kernel.bandwidth},
        "prior": {
            "discount": rc.prior.discount,
            "concentration": rc.prior.concentration,
            "base_mean": list(rc.prior.base_mean),
            "base_var": rc.prior.base_var,
            "K": rc.prior.K,
        },
        "data": None if rc.data is None else [list(r) for r in rc.data],
        "init_atoms": None if rc.init_atoms is None else [list(r) for r in rc.init_atoms],
    }
