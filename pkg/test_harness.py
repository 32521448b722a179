import csv
import math
from pathlib import Path

import numpy as np
import pytest

from geoclip.accountant import PrivacyLedger, PrivacySpec, epsilon_of
from geoclip.core.errors import ConfigError, DivergenceError
from geoclip.core.utils import make_rng
from geoclip.harness import (
    DataConfig,
    MetricRow,
    PrivacyConfig,
    RunConfig,
    RunRecord,
    SweepConfig,
    TrainHooks,
    TuningConfig,
    build_model,
    emit,
    load_run_config,
    load_splits,
    parse_seeds,
    summarize,
    sweep,
    train,
    write_run_config,
)
from geoclip.harness.sweep import run_jobs
from geoclip.io import load_snapshot, write_csv
from geoclip.data import gen_synthetic_regression
from geoclip.privatizers import make_strategy

CONFIGS = Path(__file__).parent / "configs"


def make_config(**overrides):
    base = dict(
        name="unit",
        learning_rate=0.1,
        batch_size=50,
        epochs=2,
        seeds=(0, 1),
        data=DataConfig(source="synthetic_regression", n=1000, p=5, corr_block=2),
        model_kind="linear_regression",
        strategy={"kind": "geoclip_full", "h2": 10.0},
        strategy_kinds={"vanilla": {"clip_norm": 1.0}, "quantile": {"clip_norm": 1.0, "quantile_lr": 0.2}},
        privacy=PrivacyConfig(sigma=1.0),
    )
    base.update(overrides)
    return RunConfig(**base)


class Recorder(TrainHooks):
    def __init__(self):
        self.steps = []
        self.rows = []

    def on_step(self, step, strategy, transform_used, privatized):
        self.steps.append((step, transform_used, strategy.transform, privatized, len(strategy.releases())))

    def on_eval(self, row):
        self.rows.append(row)


# -- train ------------------------------------------------------------------------

def test_training_is_deterministic():
    config = make_config(strategy={"kind": "geoclip_lowrank"}, strategy_kinds={"geoclip_lowrank": {"rank": 2}})
    a, b = train(config, seed=3), train(config, seed=3)
    assert a == b
    np.testing.assert_array_equal(a.params, b.params)
    assert train(config, seed=4).params.tobytes() != a.params.tobytes()


def test_epoch_cadence_and_first_row():
    record = train(make_config())
    # 800 training rows, batch 50: 16 steps per epoch
    assert [row.step for row in record.rows] == [0, 16, 32]
    assert record.rows[0].epsilon == 0.0
    assert record.metric_name == "mse"
    assert record.budget == "sigma1"


def test_iteration_cadence():
    record = train(make_config(epochs=None, iterations=5))
    assert [row.step for row in record.rows] == [0, 1, 2, 3, 4, 5]


def test_zero_iterations_leave_parameters_untouched():
    record = train(make_config(epochs=None, iterations=0))
    assert len(record.rows) == 1
    assert record.final.epsilon == 0.0
    np.testing.assert_array_equal(record.params, np.zeros(6))


def test_noiseless_vanilla_matches_plain_sgd():
    config = make_config(
        strategy={"kind": "vanilla"},
        strategy_kinds={"vanilla": {"clip_norm": 1e6}},
        privacy=PrivacyConfig(sigma=0.0),
        learning_rate=0.05,
    )
    record = train(config, seed=0)

    train_set, _, test_set = load_splits(config)
    model = build_model(config, train_set)
    n, q = train_set.n, config.sample_rate(train_set.n)
    theta = model.init_params()
    for step in range(1, config.total_steps(n) + 1):
        batch = np.flatnonzero(make_rng(0, 0, step).random(n) < q)
        if batch.size:
            grads = model.per_sample_gradients(theta, train_set.features[batch], train_set.targets[batch])
            theta = theta - config.learning_rate * grads.sum(axis=0) / config.batch_size
    oracle = model.metric(theta, test_set.features, test_set.targets)
    assert record.final.metric == pytest.approx(oracle, rel=1e-9)
    assert math.isinf(record.final.epsilon)


def test_lowrank_learns_outside_initial_basis(global_config):
    config = make_config(
        strategy={"kind": "geoclip_lowrank", "h2": 10.0},
        strategy_kinds={"geoclip_lowrank": {"rank": 2}},
        privacy=PrivacyConfig(sigma=0.5),
        batch_size=100,
        epochs=10,
    )
    record = train(config, seed=0)
    assert record.final.loss < 0.5 * record.rows[0].loss
    assert np.linalg.norm(record.params[2:]) > 0.05

    global_config.lowrank_tail = False
    confined = train(config, seed=0)
    np.testing.assert_allclose(confined.params[2:], 0.0, atol=1e-10)


def test_runs_resume_from_estimator_snapshots(tmp_path):
    path = str(tmp_path / "{label}_{seed}.bin")
    first, second = Recorder(), Recorder()
    train(make_config(snapshot_to=path), seed=1, hooks=first)
    saved = load_snapshot(tmp_path / "geoclip_full_1.bin")
    assert saved.steps == sum(privatized is not None for _, _, _, privatized, _ in first.steps)

    train(make_config(resume_from=path), seed=1, hooks=second)
    np.testing.assert_array_equal(second.steps[0][1].forward, first.steps[-1][2].forward)

    with pytest.raises(ConfigError, match="cannot resume"):
        train(make_config(strategy={"kind": "adaclip", "h2": 10.0}, resume_from=str(tmp_path / "geoclip_full_1.bin")))
    train(make_config(strategy={"kind": "vanilla"}, snapshot_to=path), seed=2)
    assert not (tmp_path / "vanilla_2.bin").exists()


def test_transform_is_built_from_previous_steps_only():
    config = make_config(batch_size=20)
    hooks = Recorder()
    train(config, seed=1, hooks=hooks)

    n = load_splits(config)[0].n
    replay = make_strategy(config.strategy_config(sigma=config.resolve_sigma(n)), 6, config.batch_size)
    previous_after = None
    for step, used, after, privatized, _ in hooks.steps:
        np.testing.assert_array_equal(used.forward, replay.transform.forward)
        if previous_after is not None:
            assert used is previous_after
        if privatized is not None:
            replay.observe(privatized.value)
            assert after is not used
        previous_after = after


def test_ledger_counts_every_release():
    config = make_config(strategy={"kind": "quantile"}, epochs=1)
    hooks = Recorder()
    record = train(config, seed=0, hooks=hooks)
    n = load_splits(config)[0].n
    steps, q = config.total_steps(n), config.sample_rate(n)
    assert sum(releases for *_, releases in hooks.steps) == 2 * steps

    ledger = PrivacyLedger()
    ledger.record("gradient", 1.0, q, steps)
    ledger.record("clipped_count", 10.0, q, steps)
    assert record.final.epsilon == pytest.approx(ledger.epsilon(1e-5), rel=1e-12)
    assert record.final.epsilon > epsilon_of(PrivacySpec(1.0, q, steps))


def test_empty_batches_still_count(caplog):
    config = make_config(batch_size=1, epochs=None, iterations=20)
    hooks = Recorder()
    record = train(config, seed=0, hooks=hooks)
    empty = [s for s, _, _, privatized, _ in hooks.steps if privatized is None]
    assert empty, "expected some empty Poisson batches at q = 1/800"
    assert "empty Poisson batch" in caplog.text
    assert record.final.epsilon == pytest.approx(epsilon_of(PrivacySpec(1.0, 1 / 800, 20)), rel=1e-12)


def test_epsilon_column_nondecreasing():
    record = train(make_config(epochs=None, iterations=12))
    eps = [row.epsilon for row in record.rows]
    assert all(b >= a for a, b in zip(eps, eps[1:]))


def test_divergence_is_reported():
    config = make_config(strategy={"kind": "nonprivate"}, privacy=PrivacyConfig(),
                         learning_rate=1e6, epochs=None, iterations=200)
    with pytest.raises(DivergenceError):
        train(config)


def test_train_from_csv(tmp_path):
    path = write_csv(gen_synthetic_regression(n=300, p=3, corr_block=2, seed=9), tmp_path / "reg.csv")
    config = make_config(data=DataConfig(source="csv", path=str(path), schema=str(path.with_suffix(".schema"))),
                         strategy={"kind": "adaclip"}, epochs=1, batch_size=30)
    record = train(config)
    assert record.strategy == "adaclip"
    assert np.isfinite(record.final.metric)


def test_parallel_runs_match_sequential():
    config = make_config(epochs=1)
    jobs = [(config, 0, "test"), (config, 1, "test")]
    assert run_jobs(jobs, workers=2) == run_jobs(jobs, workers=1)


# -- sweep --------------------------------------------------------------------------

def test_sweep_cells_and_summary():
    config = make_config(epochs=1, sweep=SweepConfig(strategies=("geoclip_full", "vanilla"), sigmas=(1.0, 2.0)))
    table = sweep(config, seeds=(0, 1), tune_first=False)
    rows = table.summary()
    assert [(r.strategy, r.budget) for r in rows] == [
        ("geoclip_full", "sigma1"), ("geoclip_full", "sigma2"),
        ("vanilla", "sigma1"), ("vanilla", "sigma2"),
    ]
    for row in rows:
        cell = table.records[(row.strategy, row.budget)]
        metrics = [r.final.metric for r in cell]
        assert row.seeds == 2
        assert row.metric == pytest.approx(np.mean(metrics))
        assert row.metric_std == pytest.approx(np.std(metrics, ddof=1))


def test_sweep_solves_sigma_once_per_budget():
    config = make_config(epochs=1, sweep=SweepConfig(strategies=("geoclip_full", "adaclip"), epsilons=(2.0,)))
    table = sweep(config, seeds=(0,), tune_first=False)
    records = table.all_records()
    assert {r.budget for r in records} == {"eps2"}
    assert records[0].sigma == records[1].sigma
    assert records[0].final.epsilon == pytest.approx(2.0, rel=1e-3)


def test_sweep_matches_epsilon_on_the_whole_ledger():
    config = make_config(epochs=1, sweep=SweepConfig(strategies=("quantile", "vanilla"), epsilons=(2.0,)))
    table = sweep(config, seeds=(0,), tune_first=False)
    by_kind = {r.strategy: r for r in table.all_records()}
    assert by_kind["quantile"].sigma > by_kind["vanilla"].sigma
    for record in by_kind.values():
        assert record.final.epsilon == pytest.approx(2.0, rel=1e-3)


def test_sweep_nonprivate_reference():
    config = make_config(epochs=1, sweep=SweepConfig(strategies=("nonprivate", "vanilla"), sigmas=(1.0,)))
    rows = sweep(config, seeds=(0,), tune_first=False).summary()
    reference = next(r for r in rows if r.strategy == "nonprivate")
    assert reference.budget == "none" and math.isinf(reference.epsilon)


def test_sweep_tunes_on_validation_split():
    config = make_config(
        epochs=1,
        sweep=SweepConfig(strategies=("geoclip_full", "vanilla"), sigmas=(1.0,)),
        tuning=TuningConfig(learning_rates=(0.05, 0.2), h2_values=(1.0, 10.0), seeds=(0,)),
    )
    table = sweep(config, seeds=(0,))
    by_kind = {}
    for row in table.tuning:
        by_kind.setdefault(row.strategy, []).append(row)
    assert len(by_kind["geoclip_full"]) == 4 and len(by_kind["vanilla"]) == 2
    assert all(row.h2 is None for row in by_kind["vanilla"])
    for kind, rows in by_kind.items():
        chosen = [r for r in rows if r.selected]
        assert len(chosen) == 1
        assert chosen[0].val_metric == min(r.val_metric for r in rows)
        record = table.records[(kind, "sigma1")][0]
        assert record.learning_rate == chosen[0].learning_rate
        if kind == "geoclip_full":
            assert record.h2 == chosen[0].h2


def test_summary_statistics():
    def record(seed, metric):
        return RunRecord(seed, "s", "b", 1.0, rows=[MetricRow(0, 1.0, 0.0, 0.0), MetricRow(5, 0.5, metric, 0.3)])

    (row,) = summarize([record(0, 1.0), record(1, 2.0), record(2, 3.0)])
    assert (row.metric, row.metric_std, row.seeds, row.step) == (2.0, 1.0, 3, 5)
    (row,) = summarize([record(0, 4.0)])
    assert row.metric_std == 0.0
    (row,) = summarize([record(0, 4.0), record(1, 4.0)])
    assert row.metric_std == 0.0


def test_sweep_needs_seeds():
    with pytest.raises(ValueError):
        sweep(make_config(), seeds=())


# -- emit ---------------------------------------------------------------------------

def read_csv(path):
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


def test_emit_single_record(tmp_path):
    config = make_config(epochs=1)
    record = train(config, seed=0)
    emit([record], tmp_path)

    metrics = read_csv(tmp_path / "metrics_0.csv")
    assert list(metrics[0]) == ["step", "loss", "metric", "epsilon"]
    assert [int(r["step"]) for r in metrics] == [row.step for row in record.rows]

    (summary,) = read_csv(tmp_path / "summary.csv")
    assert float(summary["metric"]) == record.final.metric
    assert float(summary["loss"]) == record.final.loss
    assert float(summary["metric_std"]) == 0.0

    curve = read_csv(tmp_path / "epsilon_curve.csv")
    eps = [float(r["epsilon"]) for r in curve]
    assert all(b >= a for a, b in zip(eps, eps[1:]))
    n = load_splits(config)[0].n
    final_spec = PrivacySpec(1.0, config.sample_rate(n), config.total_steps(n))
    assert eps[-1] == pytest.approx(epsilon_of(final_spec), rel=1e-12)


def test_emit_is_deterministic(tmp_path):
    record = train(make_config(epochs=1), seed=0)
    emit([record], tmp_path / "a")
    emit([record], tmp_path / "b")
    for name in ("metrics_0.csv", "summary.csv", "epsilon_curve.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_emit_empty_writes_header_only(tmp_path):
    emit([], tmp_path)
    lines = (tmp_path / "summary.csv").read_text(encoding="utf-8").splitlines()
    assert lines == ["strategy,budget,sigma,seeds,step,loss,metric,metric_std,epsilon"]


def test_emit_nests_cells(tmp_path):
    config = make_config(epochs=1, sweep=SweepConfig(strategies=("geoclip_full", "vanilla"), sigmas=(1.0,)))
    table = sweep(config, seeds=(0, 1), tune_first=False)
    emit(table.all_records(), tmp_path, table.tuning)
    for cell in ("geoclip_full_sigma1", "vanilla_sigma1"):
        assert (tmp_path / cell / "metrics_0.csv").exists()
        assert (tmp_path / cell / "metrics_1.csv").exists()
        assert (tmp_path / cell / "epsilon_curve.csv").exists()
    assert len(read_csv(tmp_path / "summary.csv")) == 2


def test_emit_reports_unwritable_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    record = RunRecord(0, "s", "b", 1.0, rows=[MetricRow(0, 1.0, 0.0, 0.0)])
    with pytest.raises(OSError, match="file"):
        emit([record], blocker / "out")


# -- config -------------------------------------------------------------------------

@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.ini")), ids=lambda p: p.stem)
def test_shipped_configs_load_and_round_trip(path, tmp_path):
    config = load_run_config(path)
    assert config.sweep is not None and len(config.seeds) == 20
    again = load_run_config(write_run_config(config, tmp_path / path.name))
    assert again == config


def test_overrides():
    config = load_run_config(CONFIGS / "diabetes.ini", [
        "run.learning_rate=0.3", "strategy.vanilla.clip_norm=2", "privacy.epsilon=0.93",
    ])
    assert config.learning_rate == 0.3
    assert config.strategy_config("vanilla").clip_norm == 2.0
    assert config.privacy.epsilon == 0.93


@pytest.mark.parametrize("overrides", [
    ["learning_rate=0.3"],
    ["run.learning_rate"],
    ["run.speed=3"],
    ["bogus.key=1"],
    ["strategy.sigma=2"],
    ["strategy.rank=3"],
    ["privacy.sigma=2"],
    ["run.iterations=10"],
    ["strategy.kind=dp_ftrl"],
    ["model.kind=cnn"],
    ["strategy.h2=0"],
])
def test_invalid_configs_raise_config_error(overrides):
    with pytest.raises(ConfigError):
        load_run_config(CONFIGS / "diabetes.ini", overrides)


def test_parse_seeds():
    assert parse_seeds("0..19") == tuple(range(20))
    assert parse_seeds("1, 3,5") == (1, 3, 5)
    assert parse_seeds([2, 4]) == (2, 4)


def test_resolve_sigma_from_epsilon():
    config = make_config(privacy=PrivacyConfig(epsilon=1.5))
    n = load_splits(config)[0].n
    sigma = config.resolve_sigma(n)
    spec = PrivacySpec(sigma, config.sample_rate(n), config.total_steps(n))
    assert epsilon_of(spec) == pytest.approx(1.5, rel=1e-3)
    assert make_config(strategy={"kind": "nonprivate"}).resolve_sigma(n) == 0.0
    with pytest.raises(ConfigError):
        make_config(privacy=PrivacyConfig()).resolve_sigma(n)


def test_resolve_sigma_composes_the_count_release():
    config = make_config(strategy={"kind": "quantile"}, privacy=PrivacyConfig(epsilon=1.5))
    n = load_splits(config)[0].n
    q, steps = config.sample_rate(n), config.total_steps(n)
    sigma = config.resolve_sigma(n)
    ledger = PrivacyLedger()
    ledger.record("gradient", sigma, q, steps)
    ledger.record("clipped_count", 10.0, q, steps)
    assert ledger.epsilon(1e-5) == pytest.approx(1.5, rel=1e-3)
    assert sigma > make_config(privacy=PrivacyConfig(epsilon=1.5)).resolve_sigma(n)
