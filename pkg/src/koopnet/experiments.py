"""Config-driven experiment sweeps and their on-disk reports.

Two sweeps are provided: a linearization sweep that scores dictionary
families over a grid of dictionary sizes, and a sampling sweep that runs the
full select/sample/recover pipeline (plus baselines) over sensor budgets.
Every random draw is derived from the config seed through ``SeedSequence``,
so a sweep is reproducible record-for-record; CSV output contains only
deterministic fields and is byte-identical across reruns of the same config.
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .baselines import (build_laplacian_basis, gramian_nodes_for_budget,
                        linear_gft_recover_trajectory, linear_gft_select,
                        linear_observable_recover)
from .dynamics import (BIOCHEMICAL, REGULATORY, DynamicsParams,
                       default_initial_range, generate_er_graph,
                       random_initial_state, random_initial_states, simulate,
                       simulate_ensemble)
from .koopman import (assemble_training, build_theta, fit, linearization_nrmse,
                      refine_with_samples)
from .metrics import nrmse
from .observables import identity_spec, log_spec, poly_spec
from .recovery import OptimizerConfig, recover_initial_state, take_samples
from .sampling import SelectionConfig, gamma_map, greedy_select

PROPOSED = "log-koopman"
POLY_GRAMIAN = "poly-gramian"
LINEAR_GFT = "linear-gft"

CSV_COLUMNS = ("experiment", "n", "method", "dictionary_size", "rate",
               "budget", "trial", "seed", "nrmse", "converged", "error")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a sweep needs; see the README for the JSON schema."""

    # dynamics
    dynamics: str = BIOCHEMICAL
    flow_in: float | None = None          # None = conventional rate for the kind
    decay: float = 1.0
    coupling: float = 1.0
    dt: float = 0.01
    steps_per_sample: int = 10
    adjacency_coupling: bool = True
    # topology / data
    n_values: tuple[int, ...] = (20,)
    er_probability: float = 0.5
    seed: int = 0
    training_trajectories: int = 100
    test_trajectories: int = 20
    training_ticks: int = 50
    sampling_ticks: int = 20
    # dictionaries
    scale: float = 500.0
    log_powers: tuple[int, ...] = (1, 2)
    poly_max_power: int = 2
    ridge: float = 0.0
    # linearization sweep grid
    include_dmd: bool = True
    log_power_grid: tuple[tuple[int, ...], ...] = ((1,), (1, 2), (1, 2, 3))
    poly_power_grid: tuple[int, ...] = (1, 2)
    # sampling sweep
    sampling_rates: tuple[float, ...] = (0.25, 0.5, 0.75)
    gamma: float | None = None            # None: run every budget to its cap
    selection_rate: float | None = 0.5    # single-shot selection budget (CLI)
    dictionary: str = "log"               # single-shot fit dictionary (CLI)
    trials: int = 20
    refine_trajectories: int = 50
    baselines: tuple[str, ...] = (POLY_GRAMIAN, LINEAR_GFT)
    recovery_max_iterations: int = 500
    recovery_gradient_tol: float = 1e-8
    recovery_multistarts: int = 3
    workers: int = 1

    def __post_init__(self):
        if self.dynamics not in (BIOCHEMICAL, REGULATORY):
            raise ValueError(f"unknown dynamics kind {self.dynamics!r}")
        if any(n < 1 for n in self.n_values):
            raise ValueError("node counts must be positive")
        if any(not 0.0 < r <= 1.0 for r in self.sampling_rates):
            raise ValueError("sampling rates must lie in (0, 1]")
        if self.trials < 1:
            raise ValueError("need at least one trial")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        for name in self.baselines:
            if name not in (POLY_GRAMIAN, LINEAR_GFT):
                raise ValueError(f"unknown baseline {name!r}")

    def params(self) -> DynamicsParams:
        flow = self.flow_in
        if flow is None:
            flow = 10.0 if self.dynamics == BIOCHEMICAL else 0.0
        return DynamicsParams(kind=self.dynamics, flow_in=flow, decay=self.decay,
                              coupling=self.coupling, dt=self.dt,
                              steps_per_sample=self.steps_per_sample,
                              adjacency_coupling=self.adjacency_coupling)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["n_values"] = list(self.n_values)
        d["log_powers"] = list(self.log_powers)
        d["log_power_grid"] = [list(p) for p in self.log_power_grid]
        d["poly_power_grid"] = list(self.poly_power_grid)
        d["sampling_rates"] = list(self.sampling_rates)
        d["baselines"] = list(self.baselines)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        d = dict(d)
        for key in ("n_values", "log_powers", "poly_power_grid",
                    "sampling_rates", "baselines"):
            if key in d:
                d[key] = tuple(d[key])
        if "log_power_grid" in d:
            d["log_power_grid"] = tuple(tuple(p) for p in d["log_power_grid"])
        return cls(**d)

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class TrialRecord:
    experiment: str
    n: int
    method: str
    dictionary_size: int | None
    rate: float | None
    budget: int | None
    trial: int
    seed: int
    nrmse: float | None
    converged: bool | None
    error: str | None
    runtime_s: float | None = None

    def sort_key(self):
        return (self.experiment, self.n, self.trial, self.method,
                -1.0 if self.rate is None else self.rate,
                -1 if self.dictionary_size is None else self.dictionary_size)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ExperimentReport:
    name: str
    config: dict
    records: tuple[TrialRecord, ...]

    @property
    def aggregates(self) -> list[dict]:
        return aggregate(self.records)


def aggregate(records) -> list[dict]:
    """Mean/min/max N-RMSE per (experiment, n, method, rate, size) group."""
    groups: dict[tuple, list[TrialRecord]] = {}
    for rec in records:
        key = (rec.experiment, rec.n, rec.method, rec.rate, rec.dictionary_size)
        groups.setdefault(key, []).append(rec)
    out = []
    for key in sorted(groups, key=lambda k: tuple(-1 if v is None else v
                                                  for v in k[1:]) + (k[0], k[2])):
        recs = groups[key]
        ok = [r.nrmse for r in recs if r.error is None and r.nrmse is not None]
        out.append({
            "experiment": key[0], "n": key[1], "method": key[2],
            "rate": key[3], "dictionary_size": key[4],
            "trials": len(recs), "failures": sum(r.error is not None for r in recs),
            "mean_nrmse": float(np.mean(ok)) if ok else None,
            "min_nrmse": float(np.min(ok)) if ok else None,
            "max_nrmse": float(np.max(ok)) if ok else None,
        })
    return out


def _child_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


# ---------------------------------------------------------------------------
# Linearization sweep

def _linearization_cells(config: ExperimentConfig, n: int):
    cells = []
    if config.include_dmd:
        cells.append(("dmd", identity_spec(n)))
    for powers in config.log_power_grid:
        cells.append(("log", log_spec(n, scale=config.scale, powers=tuple(powers))))
    for max_power in config.poly_power_grid:
        cells.append(("poly", poly_spec(n, max_power=int(max_power))))
    return cells


def _run_linearization_cell(config, n, graph, params, train_trajs, test_trajs,
                            method, spec, seed) -> TrialRecord:
    start = time.perf_counter()
    try:
        training = assemble_training(train_trajs, spec)
        model = fit(training, ridge=config.ridge)
        err = linearization_nrmse(model, test_trajs)
        return TrialRecord("linearization", n, method, spec.size, None, None,
                           0, seed, err, True, None,
                           time.perf_counter() - start)
    except Exception as exc:  # per-cell failures must not kill the sweep
        return TrialRecord("linearization", n, method, spec.size, None, None,
                           0, seed, None, None, f"{type(exc).__name__}: {exc}",
                           time.perf_counter() - start)


def _linearization_for_n(config: ExperimentConfig, n: int) -> list[TrialRecord]:
    cells = _linearization_cells(config, n)
    params = config.params()
    low, high = default_initial_range(params.kind)
    graph_seed = _child_seed(config.seed, n, 1)
    train_seed = _child_seed(config.seed, n, 2)
    test_seed = _child_seed(config.seed, n, 3)
    try:
        graph = generate_er_graph(n, config.er_probability, graph_seed)
        train_x1 = random_initial_states(n, config.training_trajectories, low,
                                         high, train_seed)
        test_x1 = random_initial_states(n, config.test_trajectories, low, high,
                                        test_seed)
        train_trajs = simulate_ensemble(graph, params, train_x1,
                                        config.training_ticks)
        test_trajs = simulate_ensemble(graph, params, test_x1,
                                       config.training_ticks)
    except Exception as exc:  # e.g. divergence while generating the data
        reason = f"{type(exc).__name__}: {exc}"
        return [TrialRecord("linearization", n, method, spec.size, None, None,
                            0, test_seed, None, None, reason, None)
                for method, spec in cells]
    return [_run_linearization_cell(config, n, graph, params, train_trajs,
                                    test_trajs, method, spec, test_seed)
            for method, spec in cells]


def run_linearization_sweep(config: ExperimentConfig) -> ExperimentReport:
    """Held-out rollout N-RMSE for each dictionary over its size grid."""
    records = _map_work(config, _linearization_for_n,
                        [(config, n) for n in config.n_values])
    return ExperimentReport(name="linearization", config=config.to_dict(),
                            records=tuple(sorted(records,
                                                 key=TrialRecord.sort_key)))


# ---------------------------------------------------------------------------
# Sampling-rate sweep

def _budget(rate: float, n: int) -> int:
    return min(n, max(1, math.ceil(rate * n)))


def _sampling_trial(config: ExperimentConfig, n: int, trial: int) -> list[TrialRecord]:
    truth_seed = _child_seed(config.seed, n, trial, 3)
    try:
        return _sampling_trial_records(config, n, trial)
    except Exception as exc:  # setup failures: graph, training data, base fit
        reason = f"{type(exc).__name__}: {exc}"
        methods = [PROPOSED] + [b for b in (POLY_GRAMIAN, LINEAR_GFT)
                                if b in config.baselines]
        return [TrialRecord("sampling", n, method, None, rate,
                            _budget(rate, n), trial, truth_seed, None, None,
                            reason, None)
                for method in methods for rate in config.sampling_rates]


def _sampling_trial_records(config: ExperimentConfig, n: int,
                            trial: int) -> list[TrialRecord]:
    params = config.params()
    low, high = default_initial_range(params.kind)
    tau = config.sampling_ticks
    graph_seed = _child_seed(config.seed, n, trial, 1)
    train_seed = _child_seed(config.seed, n, trial, 2)
    truth_seed = _child_seed(config.seed, n, trial, 3)
    refine_seed = _child_seed(config.seed, n, trial, 4)
    opt_seed = _child_seed(config.seed, n, trial, 5)

    graph = generate_er_graph(n, config.er_probability, graph_seed)
    train_x1 = random_initial_states(n, config.training_trajectories, low, high,
                                     train_seed)
    train_trajs = simulate_ensemble(graph, params, train_x1,
                                    config.training_ticks)
    truth = simulate(graph, params,
                     random_initial_state(n, low, high, truth_seed), tau,
                     seed=truth_seed)

    records: list[TrialRecord] = []

    spec = log_spec(n, scale=config.scale, powers=config.log_powers)
    training = assemble_training(train_trajs, spec)
    model = fit(training, ridge=config.ridge)
    theta = build_theta(model, tau)
    for rate in config.sampling_rates:
        budget = _budget(rate, n)
        start = time.perf_counter()
        try:
            plan = greedy_select(theta, spec,
                                 SelectionConfig(gamma=config.gamma,
                                                 max_nodes=budget))
            samples = take_samples(truth, spec, plan)
            recover_theta = theta
            if config.refine_trajectories > 0:
                refined, _ = refine_with_samples(
                    model, training, plan.nodes,
                    truth.states[list(plan.nodes), 0], graph, params, tau,
                    low, high, config.refine_trajectories, seed=refine_seed,
                    ridge=config.ridge)
                recover_theta = build_theta(refined, tau)
            opt = OptimizerConfig(
                max_iterations=config.recovery_max_iterations,
                gradient_tol=config.recovery_gradient_tol,
                multistarts=config.recovery_multistarts,
                fill_value=0.5 * (low + high), seed=opt_seed)
            result = recover_initial_state(samples, recover_theta, spec, opt)
            err = nrmse(result.trajectory, truth.states)
            records.append(TrialRecord("sampling", n, PROPOSED, spec.size, rate,
                                       budget, trial, truth_seed, err,
                                       result.converged, None,
                                       time.perf_counter() - start))
        except Exception as exc:
            records.append(TrialRecord("sampling", n, PROPOSED, spec.size, rate,
                                       budget, trial, truth_seed, None, None,
                                       f"{type(exc).__name__}: {exc}",
                                       time.perf_counter() - start))

    if POLY_GRAMIAN in config.baselines:
        records.extend(_poly_gramian_records(config, n, trial, truth_seed,
                                             train_trajs, truth))
    if LINEAR_GFT in config.baselines:
        records.extend(_linear_gft_records(config, n, trial, truth_seed, graph,
                                           truth))
    return records


def _poly_gramian_records(config, n, trial, truth_seed, train_trajs, truth):
    records = []
    tau = config.sampling_ticks
    try:
        pspec = poly_spec(n, max_power=config.poly_max_power)
        pmodel = fit(assemble_training(train_trajs, pspec), ridge=config.ridge)
        ptheta = build_theta(pmodel, tau)
    except Exception as exc:
        reason = f"{type(exc).__name__}: {exc}"
        return [TrialRecord("sampling", n, POLY_GRAMIAN, None, rate,
                            _budget(rate, n), trial, truth_seed, None, None,
                            reason, None)
                for rate in config.sampling_rates]
    for rate in config.sampling_rates:
        budget = _budget(rate, n)
        start = time.perf_counter()
        try:
            nodes, _ = gramian_nodes_for_budget(pmodel, budget)
            plan = gamma_map(nodes, pspec, tau)
            samples = take_samples(truth, pspec, plan)
            result = linear_observable_recover(samples, ptheta, pspec)
            err = nrmse(result.trajectory, truth.states)
            records.append(TrialRecord("sampling", n, POLY_GRAMIAN, pspec.size,
                                       rate, budget, trial, truth_seed, err,
                                       True, None, time.perf_counter() - start))
        except Exception as exc:
            records.append(TrialRecord("sampling", n, POLY_GRAMIAN, pspec.size,
                                       rate, budget, trial, truth_seed, None,
                                       None, f"{type(exc).__name__}: {exc}",
                                       time.perf_counter() - start))
    return records


def _linear_gft_records(config, n, trial, truth_seed, graph, truth):
    records = []
    for rate in config.sampling_rates:
        budget = _budget(rate, n)
        start = time.perf_counter()
        try:
            basis = build_laplacian_basis(graph, budget)
            nodes, reached = linear_gft_select(basis, budget)
            x_hat = linear_gft_recover_trajectory(
                nodes, basis, truth.states[list(nodes)])
            err = nrmse(x_hat, truth.states)
            records.append(TrialRecord("sampling", n, LINEAR_GFT, None, rate,
                                       budget, trial, truth_seed, err, reached,
                                       None, time.perf_counter() - start))
        except Exception as exc:
            records.append(TrialRecord("sampling", n, LINEAR_GFT, None, rate,
                                       budget, trial, truth_seed, None, None,
                                       f"{type(exc).__name__}: {exc}",
                                       time.perf_counter() - start))
    return records


def run_sampling_sweep(config: ExperimentConfig) -> ExperimentReport:
    """Full pipeline (select, sample, recover) per trial and sensor budget."""
    items = [(config, n, trial) for n in config.n_values
             for trial in range(config.trials)]
    records = _map_work(config, _sampling_trial, items)
    return ExperimentReport(name="sampling", config=config.to_dict(),
                            records=tuple(sorted(records,
                                                 key=TrialRecord.sort_key)))


def _map_work(config, fn, items) -> list[TrialRecord]:
    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            chunks = list(pool.map(lambda args: fn(*args), items))
    else:
        chunks = [fn(*args) for args in items]
    return [rec for chunk in chunks for rec in chunk]


# ---------------------------------------------------------------------------
# Emission

def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit(report: ExperimentReport, out_dir: str | Path,
         formats: tuple[str, ...] = ("csv", "json")) -> list[Path]:
    """Write the report; CSV carries only deterministic per-record fields
    (wall-clock runtimes live in the JSON document)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for fmt in formats:
        if fmt == "csv":
            path = out_dir / f"{report.name}_report.csv"
            with path.open("w", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(CSV_COLUMNS)
                for rec in report.records:
                    d = rec.to_dict()
                    writer.writerow([_csv_cell(d[col]) for col in CSV_COLUMNS])
        elif fmt == "json":
            path = out_dir / f"{report.name}_report.json"
            payload = {
                "name": report.name,
                "config": report.config,
                "records": [rec.to_dict() for rec in report.records],
                "aggregates": report.aggregates,
            }
            path.write_text(json.dumps(payload, indent=1))
        else:
            raise ValueError(f"unknown format {fmt!r}")
        written.append(path)
    return written


def report_from_json(path: str | Path) -> ExperimentReport:
    payload = json.loads(Path(path).read_text())
    records = tuple(TrialRecord(**rec) for rec in payload["records"])
    return ExperimentReport(name=payload["name"], config=payload["config"],
                            records=records)
