"""Command-line front end.

Subcommands mirror the pipeline stages: ``simulate`` writes one ground-truth
trajectory, ``fit`` trains an operator, ``select`` picks sensor nodes,
``recover`` reconstructs a trajectory from samples, and the two ``sweep-*``
commands run the batch experiments.  Every command reads a JSON config (see
the README schema); ``--seed`` overrides the config seed.  Failures exit
nonzero after printing a one-line JSON error object to stderr.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import __version__
from .dynamics import (default_initial_range, generate_er_graph,
                       random_initial_state, random_initial_states, save_bundle,
                       simulate, simulate_ensemble, trajectory_from_csv,
                       trajectory_to_csv)
from .experiments import (ExperimentConfig, _budget, _child_seed, emit,
                          run_linearization_sweep, run_sampling_sweep)
from .koopman import (assemble_training, build_theta, fit, load_model,
                      save_model)
from .observables import build_spec
from .recovery import (OptimizerConfig, recover_initial_state, save_result,
                       take_samples)
from .sampling import SelectionConfig, greedy_select, load_plan, save_plan


def _load_config(args) -> ExperimentConfig:
    config = ExperimentConfig.from_json(args.config)
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    return config


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _pipeline_seeds(config: ExperimentConfig, n: int) -> dict:
    # Single-shot commands share the sampling sweep's trial-0 derivations so
    # simulate/fit/select/recover compose into one coherent pipeline.
    return {
        "graph": _child_seed(config.seed, n, 0, 1),
        "train": _child_seed(config.seed, n, 0, 2),
        "truth": _child_seed(config.seed, n, 0, 3),
        "opt": _child_seed(config.seed, n, 0, 5),
    }


def _cmd_simulate(args) -> int:
    config = _load_config(args)
    out = _out_dir(args)
    n = config.n_values[0]
    seeds = _pipeline_seeds(config, n)
    params = config.params()
    low, high = default_initial_range(params.kind)
    graph = generate_er_graph(n, config.er_probability, seeds["graph"])
    x1 = random_initial_state(n, low, high, seeds["truth"])
    trajectory = simulate(graph, params, x1, config.sampling_ticks,
                          seed=seeds["truth"])
    paths = []
    if args.format in (None, "csv"):
        paths.append(trajectory_to_csv(trajectory, out / "trajectory.csv"))
    if args.format in (None, "json"):
        paths.append(save_bundle(out / "trajectory.json", graph, params,
                                 trajectory, seed=seeds["truth"]))
    print("wrote " + ", ".join(str(p) for p in paths))
    return 0


def _cmd_fit(args) -> int:
    config = _load_config(args)
    out = _out_dir(args)
    n = config.n_values[0]
    seeds = _pipeline_seeds(config, n)
    params = config.params()
    low, high = default_initial_range(params.kind)
    graph = generate_er_graph(n, config.er_probability, seeds["graph"])
    x1s = random_initial_states(n, config.training_trajectories, low, high,
                                seeds["train"])
    trajectories = simulate_ensemble(graph, params, x1s, config.training_ticks)
    spec = build_spec(config.dictionary, n, scale=config.scale,
                      powers=config.log_powers, max_power=config.poly_max_power)
    model = fit(assemble_training(trajectories, spec), ridge=config.ridge)
    path = save_model(model, out / "model.json")
    print(f"wrote {path} (dictionary size {model.size}, "
          f"training residual {model.residual:.3e})")
    return 0


def _cmd_select(args) -> int:
    config = _load_config(args)
    out = _out_dir(args)
    model = load_model(args.model)
    theta = build_theta(model, config.sampling_ticks)
    max_nodes = None
    if config.selection_rate is not None:
        max_nodes = _budget(config.selection_rate, model.spec.n)
    plan = greedy_select(theta, model.spec,
                         SelectionConfig(gamma=config.gamma, max_nodes=max_nodes))
    path = save_plan(plan, out / "plan.json")
    score = "inf" if plan.rank_deficient else f"{plan.score:.6g}"
    print(f"wrote {path} (nodes {list(plan.nodes)}, score {score})")
    return 0


def _cmd_recover(args) -> int:
    config = _load_config(args)
    out = _out_dir(args)
    model = load_model(args.model)
    plan = load_plan(args.plan)
    trajectory = trajectory_from_csv(args.trajectory)
    theta = build_theta(model, plan.tau)
    samples = take_samples(trajectory, model.spec, plan)
    low, high = default_initial_range(config.dynamics)
    n = model.spec.n
    opt = OptimizerConfig(max_iterations=config.recovery_max_iterations,
                          gradient_tol=config.recovery_gradient_tol,
                          multistarts=config.recovery_multistarts,
                          fill_value=0.5 * (low + high),
                          seed=_pipeline_seeds(config, n)["opt"])
    result = recover_initial_state(samples, theta, model.spec, opt)
    path = save_result(result, out / "recovery.json", truth=trajectory.states)
    payload = json.loads(path.read_text())
    print(f"wrote {path} (N-RMSE {payload['nrmse']:.6g}, "
          f"converged {result.converged})")
    return 0


def _cmd_sweep(runner):
    def command(args) -> int:
        config = _load_config(args)
        out = _out_dir(args)
        report = runner(config)
        formats = ("csv", "json") if args.format is None else (args.format,)
        paths = emit(report, out, formats=formats)
        failures = sum(rec.error is not None for rec in report.records)
        print(f"wrote {', '.join(str(p) for p in paths)} "
              f"({len(report.records)} records, {failures} failures)")
        return 0

    return command


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="koopnet",
        description="Koopman linearization, sensor selection, and recovery "
                    "for networked nonlinear dynamics")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--out-dir", default="results", help="output directory")
        p.add_argument("--format", choices=("csv", "json"), default=None,
                       help="restrict output to one format (default: both)")

    p = sub.add_parser("simulate", help="simulate one ground-truth trajectory")
    common(p)
    p.set_defaults(handler=_cmd_simulate)

    p = sub.add_parser("fit", help="train the lifted operator on simulated data")
    common(p)
    p.set_defaults(handler=_cmd_fit)

    p = sub.add_parser("select", help="greedily choose sensor nodes")
    common(p)
    p.add_argument("--model", required=True, help="model.json from 'fit'")
    p.set_defaults(handler=_cmd_select)

    p = sub.add_parser("recover", help="recover a trajectory from node samples")
    common(p)
    p.add_argument("--model", required=True, help="model.json from 'fit'")
    p.add_argument("--plan", required=True, help="plan.json from 'select'")
    p.add_argument("--trajectory", required=True,
                   help="trajectory.csv to sample (also serves as ground truth)")
    p.set_defaults(handler=_cmd_recover)

    p = sub.add_parser("sweep-linearization",
                       help="dictionary-size sweep of rollout accuracy")
    common(p)
    p.set_defaults(handler=_cmd_sweep(run_linearization_sweep))

    p = sub.add_parser("sweep-sampling",
                       help="sampling-rate sweep of recovery accuracy")
    common(p)
    p.set_defaults(handler=_cmd_sweep(run_sampling_sweep))
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except Exception as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
