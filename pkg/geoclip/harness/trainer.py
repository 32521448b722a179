"""
Training loop for private SGD with pluggable clipping strategies.

Per step ``t``:

1. Poisson-sample a batch at rate ``q = |B|/N``.
2. Compute exact per-sample gradients at ``θ``.
3. Privatize them with the strategy's current transform (built from
   released gradients through step ``t−1`` only).
4. ``θ ← θ − η g̃``.
5. Feed ``g̃`` to the strategy's estimators, which rebuild the transform.

Every Gaussian release is recorded in a ``PrivacyLedger``; ε at each
evaluation is the ledger's composed guarantee. Random draws come from
``make_rng(seed, stream, step)`` so a run is reproducible from its config
and seed alone.
"""
from __future__ import annotations
import math
import time
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, NamedTuple, Optional, Tuple

import numpy as np

from ..accountant import EpsilonCurve, PrivacyLedger
from ..core.errors import DivergenceError
from ..core.utils import logger, make_rng
from ..data import (
    Dataset,
    SplitSpec,
    gen_synthetic_classification,
    gen_synthetic_regression,
    load_bundled,
    prepare,
)
from ..geometry import TransformPair
from ..io.checkpoint import load_snapshot, save_snapshot
from ..io.csv_loader import CsvDatasetLoader, DatasetSchema
from ..models import Model, ModelKind, ModelSpec, make_model
from ..privatizers import ClipStrategy, PrivatizedGradient, StrategyKind, make_strategy
from .config import DataConfig, RunConfig

# make_rng stream ids
BATCH_STREAM = 0
NOISE_STREAM = 1


class MetricRow(NamedTuple):
    """One evaluation: training loss, evaluation metric and cumulative ε."""
    step: int
    loss: float
    metric: float
    epsilon: float


@dataclass
class RunRecord:
    """Outcome of one seeded run.

    ``wall_clock`` and ``params`` are excluded from equality; use
    ``np.array_equal`` on ``params`` to compare parameters.
    """

    seed: int
    strategy: str
    budget: str
    sigma: float
    rows: List[MetricRow] = field(default_factory=list)
    metric_name: str = ""
    learning_rate: float = 0.0
    h2: Optional[float] = None
    params: Optional[np.ndarray] = field(default=None, compare=False, repr=False)
    wall_clock: float = field(default=0.0, compare=False)

    @property
    def final(self) -> MetricRow:
        return self.rows[-1]

    def epsilon_curve(self) -> EpsilonCurve:
        return EpsilonCurve([(row.step, row.epsilon) for row in self.rows])


class TrainHooks:
    """Callbacks invoked by ``train``; override the ones you need."""

    def on_step(self, step: int, strategy: ClipStrategy, transform_used: Optional[TransformPair],
                privatized: Optional[PrivatizedGradient]) -> None:
        """After step ``step``; ``privatized`` is ``None`` for an empty batch."""

    def on_eval(self, row: MetricRow) -> None:
        """After each evaluation row."""


@lru_cache(maxsize=8)
def _load_splits(data: DataConfig, split_seed: int) -> Tuple[Dataset, Dataset, Dataset]:
    if data.source == "synthetic_regression":
        dataset = gen_synthetic_regression(
            n=data.n or 20000, p=data.p or 10,
            corr_block=5 if data.corr_block is None else data.corr_block,
            seed=data.seed, rho=data.rho, noise=data.noise,
        )
    elif data.source == "synthetic_classification":
        dataset = gen_synthetic_classification(
            n=data.n or 20000, p=data.p or 400,
            corr_block=50 if data.corr_block is None else data.corr_block,
            seed=data.seed, rho=data.rho, noise=data.noise,
        )
    elif data.source == "csv":
        schema = DatasetSchema.parse(data.schema)
        dataset = CsvDatasetLoader(schema).parse(data.path)
    else:
        dataset = load_bundled(data.source)

    if data.minmax_targets is not None:
        minmax = data.minmax_targets
    elif data.source == "csv":
        minmax = schema.minmax_targets
    else:
        minmax = data.source == "diabetes"
    return prepare(dataset, SplitSpec(seed=split_seed), minmax_targets=minmax)


def load_splits(config: RunConfig) -> Tuple[Dataset, Dataset, Dataset]:
    """Train, validation and test splits of the config's dataset, standardized on train."""
    return _load_splits(config.data, config.split_seed)


def build_model(config: RunConfig, train_set: Dataset) -> Model:
    kind = ModelKind(config.model_kind)
    classes = config.model_classes
    if kind is ModelKind.SOFTMAX and classes is None:
        classes = train_set.num_classes
    return make_model(ModelSpec(kind, train_set.p, classes))


def _eval_due(config: RunConfig, step: int, steps_per_epoch: int, total: int) -> bool:
    if step == total:
        return True
    if config.eval == "iteration":
        return True
    return step % steps_per_epoch == 0


def _epsilon(ledger: PrivacyLedger, kind: StrategyKind, delta: float) -> float:
    if kind is StrategyKind.NONPRIVATE:
        return math.inf
    return ledger.epsilon(delta)


def train(config: RunConfig, seed: Optional[int] = None, hooks: Optional[TrainHooks] = None,
          evaluate_on: str = "test") -> RunRecord:
    """Run one seeded training run.

    Args:
        config: run configuration (its ``[strategy]`` kind is trained).
        seed: seed of the run (default: the config's first seed).
        hooks: optional callbacks.
        evaluate_on: ``"test"`` or ``"val"`` split for the metric column.

    Returns:
        The run's metric rows, starting with step 0.

    Raises:
        DivergenceError: if the loss or the parameters stop being finite.
        ConfigError: on invalid strategy options, a missing noise level or a snapshot
            that does not fit the strategy.
        CheckpointError: if ``resume_from`` is not a readable snapshot.
    """
    seed = config.seeds[0] if seed is None else seed
    hooks = hooks or TrainHooks()
    train_set, val_set, test_set = load_splits(config)
    eval_set = val_set if evaluate_on == "val" else test_set
    model = build_model(config, train_set)

    n = train_set.n
    q = config.sample_rate(n)
    steps_per_epoch = config.steps_per_epoch(n)
    total = config.total_steps(n)
    sigma = config.resolve_sigma(n)
    options = config.strategy_config(sigma=sigma)
    strategy = make_strategy(options, model.dim, min(config.batch_size, n))
    if config.resume_from:
        path = config.resume_from.format(seed=seed, label=options.label)
        strategy.resume(load_snapshot(path))
        logger.info(f"Resumed {options.label} estimator from {path}")
    ledger = PrivacyLedger()
    delta = config.privacy.delta

    logger.info(
        f"Run {config.name}: strategy={options.label} seed={seed} sigma={sigma:.4g} "
        f"q={q:.4g} steps={total} d={model.dim}"
    )
    start = time.perf_counter()
    theta = model.init_params()
    x, y = train_set.features, train_set.targets

    def evaluate(step: int) -> MetricRow:
        loss = model.loss(theta, x, y)
        if not math.isfinite(loss):
            logger.error(f"Run {config.name} seed={seed} diverged at step {step} (loss={loss})")
            raise DivergenceError(f"training loss became {loss}", step)
        row = MetricRow(step, loss, model.metric(theta, eval_set.features, eval_set.targets),
                        0.0 if step == 0 else _epsilon(ledger, strategy.kind, delta))
        logger.info(f"  step {step}: loss={row.loss:.6g} {model.metric_name}={row.metric:.6g} eps={row.epsilon:.4g}")
        hooks.on_eval(row)
        return row

    rows = [evaluate(0)]
    for step in range(1, total + 1):
        batch = np.flatnonzero(make_rng(seed, BATCH_STREAM, step).random(n) < q)
        transform_used = strategy.transform
        for release in strategy.releases():
            ledger.record(release.label, release.sigma, q)

        privatized = None
        if batch.size == 0:
            logger.warning(f"step {step}: empty Poisson batch, no update")
        else:
            grads = model.per_sample_gradients(theta, x[batch], y[batch])
            privatized = strategy.privatize(grads, make_rng(seed, NOISE_STREAM, step))
            theta = theta - config.learning_rate * privatized.value
            if not np.all(np.isfinite(theta)):
                logger.error(f"Run {config.name} seed={seed} diverged at step {step} (non-finite parameters)")
                raise DivergenceError("parameters became non-finite", step)
            strategy.observe(privatized.value)
        hooks.on_step(step, strategy, transform_used, privatized)

        if _eval_due(config, step, steps_per_epoch, total):
            rows.append(evaluate(step))

    if config.snapshot_to and strategy.estimator_state is not None:
        save_snapshot(strategy.estimator_state, config.snapshot_to.format(seed=seed, label=options.label))
    wall_clock = time.perf_counter() - start
    logger.info(f"Run {config.name} seed={seed} finished in {wall_clock:.2f}s")
    return RunRecord(
        seed=seed,
        strategy=options.label,
        budget=config.privacy.budget if strategy.kind is not StrategyKind.NONPRIVATE else "none",
        sigma=sigma,
        rows=rows,
        metric_name=model.metric_name,
        learning_rate=config.learning_rate,
        h2=options.h2,
        params=theta,
        wall_clock=wall_clock,
    )
