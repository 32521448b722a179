"""Experiment-scale checks on the shipped configs; run with ``pytest -m slow``."""
from pathlib import Path

import numpy as np
import pytest

from geoclip.harness import load_run_config, load_splits, sweep, train

CONFIGS = Path(__file__).parent / "configs"

pytestmark = pytest.mark.slow


def mean_curve(records):
    """Mean metric per evaluated step over seeds."""
    steps = [row.step for row in records[0].rows]
    values = np.array([[row.metric for row in r.rows] for r in records])
    return dict(zip(steps, values.mean(axis=0)))


def plateau_step(curve, tol=0.02):
    """First step after which the curve stays within ``tol`` (relative) of its final value."""
    steps = sorted(curve)
    final = curve[steps[-1]]
    for i, step in enumerate(steps):
        if all(abs(curve[s] - final) <= tol * abs(final) for s in steps[i:]):
            return step
    return steps[-1]


def cells_by_strategy(table):
    return {strategy: cell for (strategy, _), cell in table.records.items()}


def test_synthetic_regression_ordering():
    config = load_run_config(CONFIGS / "synthetic_regression.ini")
    cells = cells_by_strategy(sweep(config))
    spe = config.steps_per_epoch(load_splits(config)[0].n)
    curves = {kind: mean_curve(cell) for kind, cell in cells.items()}
    baselines = [k for k in curves if k != "geoclip_full"]

    assert curves["geoclip_full"][3 * spe] <= min(curves[k][5 * spe] for k in baselines)
    finals = {k: c[max(c)] for k, c in curves.items()}
    assert finals["geoclip_full"] == min(finals.values())
    final_std = {k: np.std([r.final.metric for r in cell], ddof=1) for k, cell in cells.items()}
    assert final_std["geoclip_full"] <= final_std["vanilla"]


def test_diabetes_band():
    config = load_run_config(CONFIGS / "diabetes.ini")
    summary = sweep(config).summary()
    by_cell = {(row.strategy, row.budget): row for row in summary}
    strongest = f"eps{min(config.sweep.epsilons):g}"
    for eps in config.sweep.epsilons:
        budget = f"eps{eps:g}"
        assert by_cell[("geoclip_full", budget)].metric <= by_cell[("adaclip", budget)].metric
    assert 0.03 <= by_cell[("geoclip_full", strongest)].metric <= 0.10


def test_lowrank_plateau():
    config = load_run_config(CONFIGS / "synthetic400_lowrank.ini")
    cells = cells_by_strategy(sweep(config))
    curves = {kind: mean_curve(cell) for kind, cell in cells.items()}
    lowrank = next(k for k in curves if k.startswith("geoclip_lowrank"))
    baselines = [k for k in curves if k != lowrank]

    finals = {k: c[max(c)] for k, c in curves.items()}
    best = max(baselines, key=finals.get)
    assert plateau_step(curves[lowrank]) <= plateau_step(curves[best]) / 2
    assert all(finals[lowrank] >= finals[k] for k in baselines)


def test_nonprivate_logistic_ceiling():
    config = load_run_config(CONFIGS / "synthetic400_lowrank.ini",
                             ["strategy.kind=nonprivate", "run.learning_rate=0.5"])
    record = train(config, seed=0)
    assert record.final.metric >= 85.0
