"""
Multi-seed sweeps over strategies and privacy levels, with optional
validation-split tuning of the learning rate and the eigenvalue clamp.
"""
from __future__ import annotations
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from ..core.errors import DivergenceError
from ..core.utils import logger
from ..privatizers import Release, StrategyKind, side_releases
from .config import PrivacyConfig, RunConfig
from .trainer import RunRecord, load_splits, train

# strategies whose transform depends on the clamp range
CLAMPED_KINDS = (StrategyKind.GEOCLIP_FULL, StrategyKind.GEOCLIP_LOWRANK, StrategyKind.ADACLIP)


class SummaryRow(NamedTuple):
    """Mean and sample std of the final metric of one (strategy, budget) cell."""
    strategy: str
    budget: str
    sigma: float
    seeds: int
    step: int
    loss: float
    metric: float
    metric_std: float
    epsilon: float


class TuningRow(NamedTuple):
    """Mean validation metric of one grid point."""
    strategy: str
    budget: str
    learning_rate: float
    h2: Optional[float]
    val_metric: float
    selected: bool


@dataclass
class SweepTable:
    """Records of a sweep grouped by cell, plus the tuning grid used."""

    records: Dict[Tuple[str, str], List[RunRecord]] = field(default_factory=dict)
    tuning: List[TuningRow] = field(default_factory=list)

    def add(self, record: RunRecord) -> None:
        self.records.setdefault((record.strategy, record.budget), []).append(record)

    def all_records(self) -> List[RunRecord]:
        return [r for cell in self.records.values() for r in cell]

    def summary(self) -> List[SummaryRow]:
        return summarize(self.all_records())


def summarize(records: Sequence[RunRecord]) -> List[SummaryRow]:
    """One row per (strategy, budget) cell, in first-seen order.

    The std is the sample standard deviation over seeds (0 for a single seed).
    """
    cells: Dict[Tuple[str, str], List[RunRecord]] = {}
    for record in records:
        cells.setdefault((record.strategy, record.budget), []).append(record)
    rows = []
    for (strategy, budget), cell in cells.items():
        finals = [r.final for r in cell]
        metrics = np.array([f.metric for f in finals])
        rows.append(SummaryRow(
            strategy=strategy,
            budget=budget,
            sigma=cell[0].sigma,
            seeds=len(cell),
            step=finals[0].step,
            loss=float(np.mean([f.loss for f in finals])),
            metric=float(np.mean(metrics)),
            metric_std=float(np.std(metrics, ddof=1)) if len(cell) > 1 else 0.0,
            epsilon=float(np.max([f.epsilon for f in finals])),
        ))
    return rows


def _run_job(job: Tuple[RunConfig, int, str]) -> RunRecord:
    config, seed, evaluate_on = job
    return train(config, seed, evaluate_on=evaluate_on)


def run_jobs(jobs: List[Tuple[RunConfig, int, str]], workers: int) -> List[RunRecord]:
    if workers <= 1 or len(jobs) <= 1:
        return [_run_job(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_job, jobs))


def tune(config: RunConfig, kind: StrategyKind, budget: PrivacyConfig,
         workers: int = 1, label: Optional[str] = None) -> Tuple[float, Optional[float], List[TuningRow]]:
    """Grid-search learning rate × h2 on the validation split.

    Args:
        config: base config with a ``[tuning]`` section.
        kind: strategy to tune.
        budget: privacy level of the cell.
        workers: worker processes.
        label: budget label for the rows (default: ``budget.budget``).

    Returns:
        The selected learning rate, the selected h2 (``None`` for strategies
        without a clamp) and one row per grid point.
    """
    grid = config.tuning
    label = budget.budget if label is None else label
    h2_values = list(grid.h2_values) if kind in CLAMPED_KINDS else [None]
    points = [(lr, h2) for lr in grid.learning_rates for h2 in h2_values]
    jobs = [
        (config.cell(kind=kind, privacy=budget, learning_rate=lr, h2=h2), seed, "val")
        for lr, h2 in points for seed in grid.seeds
    ]
    try:
        records = run_jobs(jobs, workers)
    except DivergenceError:
        # rerun one by one to find the diverging points
        records = []
        for job in jobs:
            try:
                records.append(_run_job(job))
            except DivergenceError as e:
                logger.warning(f"tuning {kind.value} lr={job[0].learning_rate:g}: {e}")
                records.append(None)

    per_point = len(grid.seeds)
    scores = []
    for i, _ in enumerate(points):
        chunk = records[i * per_point:(i + 1) * per_point]
        if any(r is None for r in chunk):
            scores.append(None)
        else:
            scores.append(float(np.mean([r.final.metric for r in chunk])))

    classifier = config.model_kind != "linear_regression"
    best = None
    for i, score in enumerate(scores):
        if score is None:
            continue
        if best is None or (score > scores[best] if classifier else score < scores[best]):
            best = i
    if best is None:
        raise DivergenceError(f"every tuning grid point diverged for {kind.value}", 0)

    rows = [
        TuningRow(kind.value, label, lr, h2, np.nan if s is None else s, i == best)
        for i, ((lr, h2), s) in enumerate(zip(points, scores))
    ]
    lr, h2 = points[best]
    logger.info(f"tuned {kind.value} at {label}: learning_rate={lr:g}"
                + ("" if h2 is None else f" h2={h2:g}"))
    return lr, h2, rows


def sweep(config: RunConfig, seeds: Optional[Sequence[int]] = None, workers: Optional[int] = None,
          tune_first: bool = True) -> SweepTable:
    """Run every (strategy, budget) cell of ``config`` over ``seeds``.

    Args:
        config: run config; its ``[sweep]`` section defines the cells.
        seeds: seeds per cell (default: the config's).
        workers: worker processes (default: the config's).
        tune_first: tune each cell on the validation split when ``[tuning]`` is present.

    Returns:
        Records of every run, grouped by cell.
    """
    seeds = tuple(config.seeds if seeds is None else seeds)
    if not seeds:
        raise ValueError("a sweep needs at least one seed")
    workers = config.workers if workers is None else workers
    table = SweepTable()

    cells = []
    for kind in config.kinds():
        budgets = [PrivacyConfig(delta=config.privacy.delta)] if kind is StrategyKind.NONPRIVATE else config.budgets()
        for budget in budgets:
            cells.append((kind, budget))

    jobs = []
    # strategies with the same side releases share one solved sigma per budget
    solved: Dict[Tuple[str, Tuple[Release, ...]], PrivacyConfig] = {}
    for kind, budget in cells:
        label = budget.budget
        key = (label, tuple(side_releases(config.strategy_config(kind))))
        if key not in solved:
            solved[key] = _resolve_budget(config, kind, budget)
        budget = solved[key]
        lr, h2 = None, None
        if tune_first and config.tuning is not None:
            lr, h2, rows = tune(config, kind, budget, workers, label)
            table.tuning.extend(rows)
        cell = config.cell(kind=kind, privacy=budget, learning_rate=lr, h2=h2)
        jobs.extend((cell, seed, "test", label) for seed in seeds)

    records = run_jobs([job[:3] for job in jobs], workers)
    for (_, _, _, label), record in zip(jobs, records):
        record.budget = label
        table.add(record)
    for row in table.summary():
        logger.info(f"{row.strategy} @ {row.budget}: {row.metric:.4g} ± {row.metric_std:.4g} "
                    f"over {row.seeds} seeds (eps={row.epsilon:.4g})")
    return table


def _resolve_budget(config: RunConfig, kind: StrategyKind, budget: PrivacyConfig) -> PrivacyConfig:
    if budget.epsilon is None or kind is StrategyKind.NONPRIVATE:
        return budget
    n_train = load_splits(config)[0].n
    sigma = config.cell(kind=kind, privacy=budget).resolve_sigma(n_train)
    logger.info(f"{kind.value}: epsilon={budget.epsilon:g} -> sigma={sigma:.6g} "
                f"(q={config.sample_rate(n_train):.4g}, T={config.total_steps(n_train)}, delta={budget.delta:g})")
    return PrivacyConfig(sigma=sigma, delta=budget.delta)
