"""Sweep-harness tests: config handling, seeding, reports, determinism.

The two module-scoped sweeps here are deliberately small (n = 10 and n = 8)
so the whole file stays in the tens-of-seconds range while still running the
full select/sample/recover pipeline end to end.
"""

import json

import numpy as np
import pytest

from koopnet import (ExperimentConfig, ExperimentReport, TrialRecord,
                     aggregate, emit, linearization_nrmse, report_from_json,
                     run_linearization_sweep, run_sampling_sweep)
from koopnet.dynamics import (default_initial_range, generate_er_graph,
                              random_initial_state, random_initial_states,
                              simulate, simulate_ensemble)
from koopnet.experiments import (CSV_COLUMNS, LINEAR_GFT, POLY_GRAMIAN,
                                 PROPOSED, _budget, _child_seed)
from koopnet.koopman import assemble_training, fit, refine_with_samples
from koopnet.observables import log_spec


# ---------------------------------------------------------------------------
# configuration


def test_config_round_trip():
    cfg = ExperimentConfig(dynamics="regulatory", n_values=(8, 16), seed=3,
                           log_power_grid=((1,), (1, 2)), sampling_rates=(0.5,),
                           baselines=("linear-gft",), gamma=1.05)
    again = ExperimentConfig.from_dict(cfg.to_dict())
    assert again == cfg
    # to_dict is JSON-clean
    assert json.loads(json.dumps(cfg.to_dict())) == cfg.to_dict()


def test_config_from_json(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"n_values": [6], "trials": 2, "seed": 9}))
    cfg = ExperimentConfig.from_json(path)
    assert cfg.n_values == (6,) and cfg.trials == 2 and cfg.seed == 9
    # untouched fields keep their defaults
    assert cfg.dynamics == "biochemical" and cfg.scale == 500.0


def test_config_rejects_unknown_keys():
    with pytest.raises(ValueError, match="unknown config keys"):
        ExperimentConfig.from_dict({"n_values": [6], "typo_field": 1})


@pytest.mark.parametrize("bad", [
    {"dynamics": "lorenz"},
    {"n_values": (0,)},
    {"sampling_rates": (0.0,)},
    {"sampling_rates": (1.5,)},
    {"trials": 0},
    {"workers": 0},
    {"baselines": ("poly-gramian", "kalman")},
])
def test_config_validation(bad):
    with pytest.raises(ValueError):
        ExperimentConfig(**bad)


def test_params_flow_defaults():
    assert ExperimentConfig(dynamics="biochemical").params().flow_in == 10.0
    assert ExperimentConfig(dynamics="regulatory").params().flow_in == 0.0
    assert ExperimentConfig(flow_in=2.5).params().flow_in == 2.5


# ---------------------------------------------------------------------------
# seeding and budgets


def test_child_seed_is_deterministic_and_order_sensitive():
    assert _child_seed(0, 20, 3) == _child_seed(0, 20, 3)
    assert _child_seed(0, 20, 3) != _child_seed(0, 3, 20)
    seeds = {_child_seed(0, 20, t, phase) for t in range(5) for phase in (1, 2, 3)}
    assert len(seeds) == 15


@pytest.mark.parametrize("rate,n,expected", [
    (0.25, 20, 5),
    (0.5, 3, 2),     # ceil(1.5)
    (0.75, 8, 6),
    (0.01, 10, 1),   # floor of one sensor
    (1.0, 7, 7),
])
def test_budget_ceil(rate, n, expected):
    assert _budget(rate, n) == expected


# ---------------------------------------------------------------------------
# aggregation over hand-built records


def _rec(method, nrmse, error=None, rate=0.5, trial=0):
    return TrialRecord("sampling", 10, method, 31, rate, 5, trial, 123,
                       nrmse, None if error else True, error, 0.1)


def test_aggregate_groups_and_skips_failures():
    records = [_rec("log-koopman", 0.2, trial=0),
               _rec("log-koopman", 0.4, trial=1),
               _rec("log-koopman", None, error="RuntimeError: boom", trial=2),
               _rec("linear-gft", 0.9, trial=0)]
    rows = aggregate(records)
    assert len(rows) == 2
    by_method = {row["method"]: row for row in rows}
    log = by_method["log-koopman"]
    assert log["trials"] == 3 and log["failures"] == 1
    assert log["mean_nrmse"] == pytest.approx(0.3)
    assert log["min_nrmse"] == pytest.approx(0.2)
    assert log["max_nrmse"] == pytest.approx(0.4)
    gft = by_method["linear-gft"]
    assert gft["trials"] == 1 and gft["failures"] == 0


def test_aggregate_all_failed_group_has_none_stats():
    rows = aggregate([_rec("log-koopman", None, error="x")])
    assert rows[0]["mean_nrmse"] is None
    assert rows[0]["min_nrmse"] is None and rows[0]["max_nrmse"] is None
    assert rows[0]["failures"] == 1


# ---------------------------------------------------------------------------
# linearization sweep (shared small run)


@pytest.fixture(scope="module")
def lin_report():
    cfg = ExperimentConfig(n_values=(10,), seed=7, training_trajectories=40,
                           test_trajectories=10, training_ticks=40,
                           log_power_grid=((1,), (1, 2), (1, 2, 3)),
                           poly_power_grid=(1, 2))
    return cfg, run_linearization_sweep(cfg)


def test_linearization_sweep_cells(lin_report):
    cfg, report = lin_report
    methods = [(r.method, r.dictionary_size) for r in report.records]
    # one dmd cell, three log sizes, two poly sizes, all for n = 10
    assert methods == [("dmd", 10), ("log", 21), ("log", 31), ("log", 41),
                       ("poly", 66), ("poly", 221)]
    assert all(r.error is None and r.converged for r in report.records)
    assert all(r.experiment == "linearization" and r.n == 10
               for r in report.records)


def test_nested_log_dictionaries_do_not_hurt(lin_report):
    """Adding log powers grows the dictionary and (here) the rollout accuracy."""
    _, report = lin_report
    errs = [r.nrmse for r in report.records if r.method == "log"]
    print("\n    log dictionary sizes -> nrmse:",
          ["%.4e" % e for e in errs])
    for smaller, larger in zip(errs, errs[1:]):
        assert larger <= smaller * (1 + 1e-3)


def test_log_beats_raw_state_dictionary(lin_report):
    _, report = lin_report
    dmd = next(r.nrmse for r in report.records if r.method == "dmd")
    best_log = min(r.nrmse for r in report.records if r.method == "log")
    assert best_log < dmd / 100


def test_records_sorted_by_key(lin_report):
    _, report = lin_report
    keys = [r.sort_key() for r in report.records]
    assert keys == sorted(keys)


def test_report_round_trip_through_json(lin_report, tmp_path):
    _, report = lin_report
    paths = emit(report, tmp_path)
    json_path = [p for p in paths if p.suffix == ".json"][0]
    again = report_from_json(json_path)
    assert again.records == report.records
    assert again.aggregates == report.aggregates
    assert again.config == report.config


# ---------------------------------------------------------------------------
# sampling sweep (shared small run)


@pytest.fixture(scope="module")
def samp_report():
    cfg = ExperimentConfig(n_values=(8,), seed=11, trials=1,
                           training_trajectories=40, training_ticks=40,
                           sampling_ticks=15, sampling_rates=(1.0,),
                           refine_trajectories=20, baselines=())
    return cfg, run_sampling_sweep(cfg)


def test_full_sampling_recovers_near_model_floor(samp_report):
    """At a 100% sampling rate the pipeline should sit at the linearization
    floor: rebuild the trial's refined model from the same child seeds and
    compare against its rollout error on the truth trajectory."""
    cfg, report = samp_report
    rec = report.records[0]
    assert rec.method == PROPOSED and rec.budget == 8
    assert rec.error is None and rec.converged

    n, trial = 8, 0
    params = cfg.params()
    low, high = default_initial_range(params.kind)
    graph = generate_er_graph(n, cfg.er_probability,
                              _child_seed(cfg.seed, n, trial, 1))
    train_x1 = random_initial_states(n, cfg.training_trajectories, low, high,
                                     _child_seed(cfg.seed, n, trial, 2))
    train = simulate_ensemble(graph, params, train_x1, cfg.training_ticks)
    truth_seed = _child_seed(cfg.seed, n, trial, 3)
    truth = simulate(graph, params,
                     random_initial_state(n, low, high, truth_seed),
                     cfg.sampling_ticks, seed=truth_seed)
    assert rec.seed == truth_seed

    spec = log_spec(n, scale=cfg.scale, powers=cfg.log_powers)
    training = assemble_training(train, spec)
    model = fit(training, ridge=cfg.ridge)
    refined, _ = refine_with_samples(model, training, tuple(range(n)),
                                     truth.states[:, 0], graph, params,
                                     cfg.sampling_ticks, low, high,
                                     cfg.refine_trajectories,
                                     seed=_child_seed(cfg.seed, n, trial, 4),
                                     ridge=cfg.ridge)
    floor = linearization_nrmse(refined, [truth])
    print(f"\n    sweep nrmse {rec.nrmse:.3e} vs model floor {floor:.3e}")
    assert rec.nrmse <= 5 * floor
    assert rec.nrmse < 1e-2


def test_sampling_record_fields(samp_report):
    _, report = samp_report
    rec = report.records[0]
    assert rec.experiment == "sampling"
    assert rec.dictionary_size == 1 + 8 * 3
    assert rec.rate == 1.0 and rec.trial == 0
    assert rec.runtime_s is not None and rec.runtime_s > 0


# ---------------------------------------------------------------------------
# failure recording: a guaranteed-divergent configuration


def test_linearization_sweep_records_setup_failures():
    cfg = ExperimentConfig(n_values=(5,), flow_in=-1e6, seed=1,
                           training_trajectories=3, test_trajectories=2,
                           training_ticks=5, log_power_grid=((1, 2),),
                           poly_power_grid=(1,))
    report = run_linearization_sweep(cfg)
    assert len(report.records) == 3  # dmd + one log + one poly
    for rec in report.records:
        assert rec.nrmse is None and rec.converged is None
        assert "diverged" in rec.error
    # failures show up in the aggregates rather than vanishing
    assert all(row["failures"] == row["trials"] for row in report.aggregates)


def test_sampling_sweep_records_setup_failures():
    cfg = ExperimentConfig(n_values=(5,), flow_in=-1e6, seed=1, trials=2,
                           training_trajectories=3, training_ticks=5,
                           sampling_ticks=5, sampling_rates=(0.5, 1.0),
                           refine_trajectories=0)
    report = run_sampling_sweep(cfg)
    # trials x rates x (proposed + two baselines)
    assert len(report.records) == 2 * 2 * 3
    assert {r.method for r in report.records} == {PROPOSED, POLY_GRAMIAN,
                                                  LINEAR_GFT}
    for rec in report.records:
        assert rec.error is not None and "diverged" in rec.error
        assert rec.budget == _budget(rec.rate, 5)


# ---------------------------------------------------------------------------
# emission and determinism


def test_emit_empty_report_writes_header_only(tmp_path):
    report = ExperimentReport(name="sampling", config={}, records=())
    (csv_path,) = emit(report, tmp_path, formats=("csv",))
    lines = csv_path.read_text().splitlines()
    assert lines == [",".join(CSV_COLUMNS)]


def test_emit_rejects_unknown_format(tmp_path):
    report = ExperimentReport(name="x", config={}, records=())
    with pytest.raises(ValueError, match="unknown format"):
        emit(report, tmp_path, formats=("parquet",))


def test_csv_has_no_runtime_column(lin_report, tmp_path):
    _, report = lin_report
    paths = emit(report, tmp_path)
    csv_path = [p for p in paths if p.suffix == ".csv"][0]
    header = csv_path.read_text().splitlines()[0]
    assert "runtime" not in header
    assert header.split(",") == list(CSV_COLUMNS)


def test_sampling_sweep_csv_is_byte_identical_across_runs(tmp_path):
    cfg = ExperimentConfig(n_values=(6,), seed=5, trials=1,
                           training_trajectories=30, training_ticks=30,
                           sampling_ticks=12, sampling_rates=(0.5, 1.0),
                           refine_trajectories=8)
    blobs, payloads = [], []
    for run in ("a", "b"):
        report = run_sampling_sweep(cfg)
        out = tmp_path / run
        paths = emit(report, out)
        csv_path = [p for p in paths if p.suffix == ".csv"][0]
        json_path = [p for p in paths if p.suffix == ".json"][0]
        blobs.append(csv_path.read_bytes())
        payloads.append(json.loads(json_path.read_text()))
    assert blobs[0] == blobs[1]
    # JSON differs only in wall-clock runtimes
    for payload in payloads:
        for rec in payload["records"]:
            rec["runtime_s"] = None
    assert payloads[0] == payloads[1]
