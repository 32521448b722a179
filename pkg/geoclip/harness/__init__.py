"""
Experiment harness: run configs, the training loop, sweeps and CSV output.
"""

from .config import (
    DataConfig,
    PrivacyConfig,
    RunConfig,
    SweepConfig,
    TuningConfig,
    apply_overrides,
    load_run_config,
    parse_seeds,
    write_run_config,
)
from .trainer import MetricRow, RunRecord, TrainHooks, build_model, load_splits, train
from .sweep import SummaryRow, SweepTable, TuningRow, summarize, sweep, tune
from .emit import emit, write_epsilon_curve, write_metrics, write_summary, write_tuning

__all__ = [
    'DataConfig',
    'PrivacyConfig',
    'RunConfig',
    'SweepConfig',
    'TuningConfig',
    'apply_overrides',
    'load_run_config',
    'parse_seeds',
    'write_run_config',
    'MetricRow',
    'RunRecord',
    'TrainHooks',
    'build_model',
    'load_splits',
    'train',
    'SummaryRow',
    'SweepTable',
    'TuningRow',
    'summarize',
    'sweep',
    'tune',
    'emit',
    'write_epsilon_curve',
    'write_metrics',
    'write_summary',
    'write_tuning',
]
