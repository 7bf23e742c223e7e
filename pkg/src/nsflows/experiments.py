"""The three studies: flow comparison, bootstrap continuation, prior ablation.

Replicates are independent tasks keyed by (experiment, n, replicate); each
task derives every random stream it needs from one recorded integer seed, so
any replicate is reproducible in isolation and result aggregation is
order-independent (rows are sorted before serialisation).
"""

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import ParticleMeasure, sample_mixture
from .flows import MODES, run_flow
from .priors import init_particles
from .runio import write_csv
from .streams import StreamSpec, continuation_length, make_stream
from .transport import exact_w2

EXP_FLOW_COMPARE = 1
EXP_BOOTSTRAP = 2
EXP_ABLATION = 3

# Sub-stream roles hung off a replicate seed.
ROLE_DATA = 0
ROLE_STREAM = 1
ROLE_INIT = 2
ROLE_FLOW = 3
ROLE_REF = 4

SEED_DERIVATION = (
    "replicate_seed = SeedSequence([master_seed, experiment_id, n, replicate])"
    ".generate_state(1, uint64)[0]; each random stream a task needs is "
    "default_rng(SeedSequence([replicate_seed, role])) with roles "
    "data=0, stream=1, init=2, flow=3, reference=4; the flow-comparison "
    "study appends the mode index to the flow role key"
)


def task_seed(master_seed, experiment, n, replicate):
    """The single integer recorded per replicate; determines all its streams."""
    ss = np.random.SeedSequence([master_seed, experiment, n, replicate])
    return int(ss.generate_state(1, np.uint64)[0])


def role_rng(replicate_seed, *role):
    return np.random.default_rng(np.random.SeedSequence([replicate_seed, *role]))


# --------------------------------------------------------------------------
# metric and bands


def reference_measure(gm, n_ref, rng):
    """Empirical measure of n_ref i.i.d. draws from the mixture."""
    if n_ref < 1:
        raise ValueError("n_ref must be at least 1")
    pts = sample_mixture(gm, n_ref, rng)
    return ParticleMeasure(pts, np.full(n_ref, 1.0 / n_ref))


def w2_to_truth(mu, gm, n_ref, rng):
    """Exact W2 between the particle measure and a sampled reference."""
    return exact_w2(mu, reference_measure(gm, n_ref, rng))


def quantile_band(values, level=0.90):
    """(lower, mean, upper): empirical (1-level)/2 and 1-(1-level)/2
    quantiles with linear interpolation, plus the arithmetic mean."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("values must be nonempty")
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    tail = (1.0 - level) / 2.0
    lower = float(np.quantile(values, tail))
    upper = float(np.quantile(values, 1.0 - tail))
    return lower, float(values.mean()), upper


# --------------------------------------------------------------------------
# results


@dataclass
class Experiment1Result:
    """Shared init, per-mode final measures and W2-to-truth, replicate seed."""

    init: ParticleMeasure
    finals: dict
    w2: dict
    seed: int
    counters: dict = field(default_factory=dict)


@dataclass
class ExperimentResult:
    """Per-replicate W2 values keyed by (n, arm), with quantile bands."""

    experiment: str
    values: dict  # (n, arm) -> list of w2, replicate order
    seeds: dict  # (n, arm) -> list of replicate seeds
    bands: dict  # (n, arm) -> (lower, mean, upper)
    replicates: int
    counters: dict = field(default_factory=dict)

    def rows(self):
        out = []
        for (n, arm) in sorted(self.values):
            seeds = self.seeds[(n, arm)]
            for rep, w2 in enumerate(self.values[(n, arm)]):
                out.append((n, arm, rep, seeds[rep], w2))
        return out

    def band_rows(self):
        out = []
        for (n, arm) in sorted(self.bands):
            lower, mean, upper = self.bands[(n, arm)]
            out.append((n, arm, mean, lower, upper))
        return out


def _aggregate(experiment, values, seeds, replicates, counters):
    bands = {}
    for key, vals in values.items():
        if len(vals) != replicates or len(seeds[key]) != replicates:
            raise RuntimeError(f"replicate count mismatch for {key}")
        lower, mean, upper = quantile_band(vals)
        if not lower <= mean <= upper:
            raise RuntimeError(f"band invariant violated for {key}")
        bands[key] = (lower, mean, upper)
    return ExperimentResult(experiment, values, seeds, bands, replicates, counters)


def _merge_counters(total, state):
    total["underflow_steps"] = total.get("underflow_steps", 0) + state.underflow_count
    total["sinkhorn_nonconverged"] = (
        total.get("sinkhorn_nonconverged", 0) + state.nonconverged_count
    )


# --------------------------------------------------------------------------
# experiment 1: flow comparison on a shared init and stream


def run_experiment_1(cfg):
    """newton, fisher_rao, and wfr on identical init and data; W2 per mode."""
    gm = cfg.target_mixture()
    seed = task_seed(cfg.seed, EXP_FLOW_COMPARE, cfg.n, 0)
    if cfg.data is not None:
        data = np.asarray(cfg.data, dtype=float)
    else:
        data = sample_mixture(gm, cfg.n, role_rng(seed, ROLE_DATA))
    stream = make_stream(StreamSpec(data, data.shape[0], "raw"))
    if cfg.init_atoms is not None:
        atoms = np.asarray(cfg.init_atoms, dtype=float)
        init = ParticleMeasure(atoms, np.full(atoms.shape[0], 1.0 / atoms.shape[0]))
    else:
        init = init_particles(cfg.prior_spec(), cfg.flow.N, role_rng(seed, ROLE_INIT))
    ref = reference_measure(gm, cfg.n_ref, role_rng(seed, ROLE_REF))
    finals, w2, counters = {}, {}, {}
    for i, mode in enumerate(MODES):
        fc = cfg.flow_config(mode=mode)
        state, _ = run_flow(mode, stream, init, fc, role_rng(seed, ROLE_FLOW, i))
        finals[mode] = state.measure
        w2[mode] = exact_w2(state.measure, ref)
        _merge_counters(counters, state)
    return Experiment1Result(init, finals, w2, seed, counters)


# --------------------------------------------------------------------------
# experiment 2: truncated vs continuation bootstrap arms (paired)


def _exp2_task(args):
    cfg, n, rep = args
    seed = task_seed(cfg.seed, EXP_BOOTSTRAP, n, rep)
    gm = cfg.target_mixture()
    data = sample_mixture(gm, n, role_rng(seed, ROLE_DATA))
    stream = make_stream(
        StreamSpec(data, continuation_length(n), "continuation", seed=(seed, ROLE_STREAM))
    )
    fc = cfg.flow_config()
    init = init_particles(cfg.prior_spec(), fc.N, role_rng(seed, ROLE_INIT))
    ref = reference_measure(gm, cfg.n_ref, role_rng(seed, ROLE_REF))
    rng = role_rng(seed, ROLE_FLOW)
    # The truncated arm is the continuation run's state after the n-th
    # observation: the streams share their length-n prefix and the flow
    # consumes randomness at a fixed per-step rate, so resuming the same
    # state over the remaining steps reproduces the continuation arm exactly.
    state, _ = run_flow(cfg.mode, stream[:n], init, fc, rng)
    w2_trunc = exact_w2(state.measure, ref)
    state, _ = run_flow(cfg.mode, stream[n:], None, fc, rng, state=state)
    w2_cont = exact_w2(state.measure, ref)
    counters = {}
    _merge_counters(counters, state)
    return n, rep, seed, {"truncated": w2_trunc, "continuation": w2_cont}, counters


def run_experiment_2(cfg, jobs=1):
    """Bootstrap replicates per n: stop at n observations vs continue
    resampling the same stream to ceil(1.5 n) total steps."""
    out = _map_tasks(_exp2_task, [(cfg, n, rep) for n in cfg.n_grid
                                  for rep in range(cfg.replicates)], jobs)
    return _collect("bootstrap-study", out, cfg.replicates)


# --------------------------------------------------------------------------
# experiment 3: prior reaction force on vs off (paired seeds)


def _exp3_task(args):
    cfg, n, rep = args
    seed = task_seed(cfg.seed, EXP_ABLATION, n, rep)
    gm = cfg.target_mixture()
    data = sample_mixture(gm, n, role_rng(seed, ROLE_DATA))
    stream = make_stream(StreamSpec(data, n, "truncated", seed=(seed, ROLE_STREAM)))
    init = init_particles(cfg.prior_spec(), cfg.flow.N, role_rng(seed, ROLE_INIT))
    ref = reference_measure(gm, cfg.n_ref, role_rng(seed, ROLE_REF))
    w2, counters = {}, {}
    # Both arms share data, stream, init, reference, and flow seed; only the
    # reaction-force weight differs. The prior transport drift stays active
    # in both, so the ablation isolates the Fisher-Rao contribution.
    for arm, lam in (("regularised", None), ("unregularised", 0.0)):
        fc = cfg.flow_config(lambda0=lam)
        state, _ = run_flow(cfg.mode, stream, init, fc, role_rng(seed, ROLE_FLOW))
        w2[arm] = exact_w2(state.measure, ref)
        _merge_counters(counters, state)
    return n, rep, seed, w2, counters


def run_experiment_3(cfg, jobs=1):
    """Prior-regularisation ablation: lambda = lambda0 vs lambda = 0."""
    out = _map_tasks(_exp3_task, [(cfg, n, rep) for n in cfg.n_grid
                                  for rep in range(cfg.replicates)], jobs)
    return _collect("prior-ablation", out, cfg.replicates)


# --------------------------------------------------------------------------
# task pool and aggregation


def _map_tasks(fn, tasks, jobs):
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks))


def _collect(experiment, task_outputs, replicates):
    values, seeds, counters = {}, {}, {}
    for n, rep, seed, w2_by_arm, task_counters in sorted(
        task_outputs, key=lambda t: (t[0], t[1])
    ):
        for arm, w2 in w2_by_arm.items():
            values.setdefault((n, arm), []).append(float(w2))
            seeds.setdefault((n, arm), []).append(seed)
        for k, v in task_counters.items():
            counters[k] = counters.get(k, 0) + v
    return _aggregate(experiment, values, seeds, replicates, counters)


# --------------------------------------------------------------------------
# CSV emission

PARTICLE_HEADER = ("mode", "atom_index", "x0", "x1", "weight")
REPLICATE_HEADER = ("n", "arm", "replicate", "seed", "w2")
BAND_HEADER = ("n", "arm", "mean", "lower", "upper")


def _particle_rows(mode, mu):
    if mu.dim != 2:
        raise ValueError("particle CSVs are defined for 2-d atoms")
    return [
        (mode, i, mu.atoms[i, 0], mu.atoms[i, 1], mu.weights[i])
        for i in range(mu.n)
    ]


def write_experiment1_csvs(out_dir, res):
    """experiment1_init.csv (the shared init repeated per mode),
    experiment1_particles.csv, experiment1_w2.csv."""
    init_rows, final_rows, w2_rows = [], [], []
    for mode in MODES:
        init_rows += _particle_rows(mode, res.init)
        final_rows += _particle_rows(mode, res.finals[mode])
        w2_rows.append((mode, res.w2[mode]))
    paths = []
    for name, header, rows in (
        ("experiment1_init.csv", PARTICLE_HEADER, init_rows),
        ("experiment1_particles.csv", PARTICLE_HEADER, final_rows),
        ("experiment1_w2.csv", ("mode", "w2"), w2_rows),
    ):
        path = os.path.join(out_dir, name)
        write_csv(path, header, rows)
        paths.append(path)
    return paths


def write_replicate_csvs(out_dir, res, basename):
    """<basename>.csv with per-replicate rows and <basename>_bands.csv."""
    rep_path = os.path.join(out_dir, f"{basename}.csv")
    band_path = os.path.join(out_dir, f"{basename}_bands.csv")
    write_csv(rep_path, REPLICATE_HEADER, res.rows())
    write_csv(band_path, BAND_HEADER, res.band_rows())
    return [rep_path, band_path]
