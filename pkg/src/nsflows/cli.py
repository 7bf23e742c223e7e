"""Command-line entry point.

Subcommands: flow-compare (flow comparison study), bootstrap-study
(truncated vs continuation arms), prior-ablation (prior force on/off),
run (a single flow from config), render (SVGs from existing CSVs).
Every run writes a manifest with the config snapshot, master seed, seed
derivation, and a sha256 per output file; (config, seed) fully determine
all outputs.
"""

import argparse
import json
import os
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from .config import ConfigError, config_from_dict, parse_config, serialise
from .core import ParticleMeasure, sample_mixture
from .experiments import (
    ROLE_DATA,
    ROLE_FLOW,
    ROLE_INIT,
    ROLE_REF,
    SEED_DERIVATION,
    reference_measure,
    role_rng,
    run_experiment_1,
    run_experiment_2,
    run_experiment_3,
    task_seed,
    write_experiment1_csvs,
    write_replicate_csvs,
)
from .figures import render_bands, render_experiment1
from .flows import run_flow
from .priors import init_particles
from .runio import sha256_file, write_csv, write_json
from .transport import exact_w2

EXP_RUN = 0  # experiment id of the bare `run` subcommand in seed derivation

COMMANDS = ("flow-compare", "bootstrap-study", "prior-ablation", "run", "render")

BAND_TITLES = {
    "experiment2": "bootstrap continuation study",
    "experiment3": "prior regularisation ablation",
}


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="ns-flows",
        description="Sequential mixing-measure estimation by particle flows.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "flow-compare": "newton vs fisher_rao vs wfr on one shared stream",
        "bootstrap-study": "truncated vs continuation bootstrap arms",
        "prior-ablation": "prior reaction force on vs off, paired seeds",
        "run": "run a single flow from a config and dump its trace",
        "render": "re-render SVG figures from CSVs in the output directory",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", metavar="PATH", help="JSON config file")
        p.add_argument("--seed", type=int, help="master seed override")
        p.add_argument("--out", metavar="DIR", default=".", help="output directory")
        p.add_argument(
            "--desk-scale",
            action="store_true",
            help="reduced problem sizes (study: n grid {100,400}, 10 "
            "replicates; flow-compare: n=300, N=30)",
        )
        p.add_argument(
            "--jobs",
            type=int,
            help="parallel worker count (default: NS_FLOWS_JOBS or 1)",
        )
    return parser


def _load_config(args):
    if args.config is not None:
        cfg = parse_config(args.config, profile=args.command)
    else:
        cfg = config_from_dict({}, profile=args.command)
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("seed must be a nonnegative integer")
        cfg = replace(cfg, seed=args.seed)
    if args.desk_scale:
        if args.command == "flow-compare":
            cfg = replace(cfg, n=300, flow=replace(cfg.flow, N=30))
        elif args.command in ("bootstrap-study", "prior-ablation"):
            cfg = replace(cfg, n_grid=(100, 400), replicates=10)
    return cfg


def _jobs(args):
    if args.jobs is not None:
        jobs = args.jobs
    else:
        jobs = int(os.environ.get("NS_FLOWS_JOBS", "1"))
    if jobs < 1:
        raise ConfigError("jobs must be at least 1")
    return jobs


def _write_manifest(out_dir, command, cfg, paths, counters):
    manifest = {
        "tool": "ns-flows",
        "version": __version__,
        "command": command,
        "master_seed": cfg.seed,
        "config": serialise(cfg),
        "seed_derivation": SEED_DERIVATION,
        "counters": counters,
        "outputs": {
            os.path.basename(p): sha256_file(p) for p in sorted(paths)
        },
    }
    path = os.path.join(out_dir, "manifest.json")
    write_json(path, manifest)
    return path


def _cmd_flow_compare(cfg, out_dir, jobs):
    res = run_experiment_1(cfg)
    paths = write_experiment1_csvs(out_dir, res)
    paths.append(render_experiment1(out_dir, cfg.target_mixture(), cfg.kernel.bandwidth))
    return paths, res.counters


def _cmd_study(cfg, out_dir, jobs, runner, basename):
    res = runner(cfg, jobs=jobs)
    paths = write_replicate_csvs(out_dir, res, basename)
    svg = os.path.join(out_dir, f"{basename}_bands.svg")
    paths.append(render_bands(paths[1], svg, BAND_TITLES[basename]))
    return paths, res.counters


def _cmd_run(cfg, out_dir, jobs):
    gm = cfg.target_mixture()
    seed = task_seed(cfg.seed, EXP_RUN, cfg.n, 0)
    if cfg.data is not None:
        data = np.asarray(cfg.data, dtype=float)
    else:
        data = sample_mixture(gm, cfg.n, role_rng(seed, ROLE_DATA))
    if cfg.init_atoms is not None:
        atoms = np.asarray(cfg.init_atoms, dtype=float)
        init = ParticleMeasure(atoms, np.full(atoms.shape[0], 1.0 / atoms.shape[0]))
    else:
        init = init_particles(cfg.prior_spec(), cfg.flow.N, role_rng(seed, ROLE_INIT))
    fc = cfg.flow_config()
    w2_eval = None
    if fc.eval_every > 0:
        ref = reference_measure(gm, cfg.n_ref, role_rng(seed, ROLE_REF))
        w2_eval = lambda mu: exact_w2(mu, ref)  # noqa: E731
    state, records = run_flow(
        cfg.mode, data, init, fc, role_rng(seed, ROLE_FLOW), w2_eval=w2_eval
    )
    trace_path = os.path.join(out_dir, "run_trace.csv")
    write_csv(
        trace_path,
        ("step", "x0", "x1", "ess", "w2"),
        [(r.step, r.x[0], r.x[1], r.ess, r.w2) for r in records],
    )
    particles_path = os.path.join(out_dir, "run_particles.csv")
    mu = state.measure
    write_csv(
        particles_path,
        ("atom_index", "x0", "x1", "weight"),
        [(i, mu.atoms[i, 0], mu.atoms[i, 1], mu.weights[i]) for i in range(mu.n)],
    )
    counters = {
        "underflow_steps": state.underflow_count,
        "sinkhorn_nonconverged": state.nonconverged_count,
    }
    return [trace_path, particles_path], counters


def _cmd_render(cfg, out_dir, jobs):
    paths = []
    if os.path.exists(os.path.join(out_dir, "experiment1_particles.csv")):
        paths.append(
            render_experiment1(out_dir, cfg.target_mixture(), cfg.kernel.bandwidth)
        )
    for basename, title in BAND_TITLES.items():
        csv_path = os.path.join(out_dir, f"{basename}_bands.csv")
        if os.path.exists(csv_path):
            svg = os.path.join(out_dir, f"{basename}_bands.svg")
            paths.append(render_bands(csv_path, svg, title))
    if not paths:
        raise FileNotFoundError(f"no renderable CSVs found in {out_dir!r}")
    return paths, {}


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
        jobs = _jobs(args)
        out_dir = args.out
        os.makedirs(out_dir, exist_ok=True)
        handler = {
            "flow-compare": _cmd_flow_compare,
            "bootstrap-study": lambda c, o, j: _cmd_study(
                c, o, j, run_experiment_2, "experiment2"
            ),
            "prior-ablation": lambda c, o, j: _cmd_study(
                c, o, j, run_experiment_3, "experiment3"
            ),
            "run": _cmd_run,
            "render": _cmd_render,
        }[args.command]
        paths, counters = handler(cfg, out_dir, jobs)
        _write_manifest(out_dir, args.command, cfg, paths, counters)
        return 0
    except (ConfigError, OSError, ValueError, RuntimeError, json.JSONDecodeError) as e:
        print(f"ns-flows: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
