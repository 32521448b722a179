"""
CSV artifacts of runs and sweeps.

- ``metrics_<seed>.csv``: ``step,loss,metric,epsilon`` per evaluation.
- ``epsilon_curve.csv``: ``step,epsilon``.
- ``summary.csv``: mean and sample std of the final metric per cell.
- ``tuning.csv``: the validation grid of a tuned sweep.

When records span several (strategy, budget) cells, per-run files go to
one ``<strategy>_<budget>/`` subdirectory per cell.
"""
from __future__ import annotations
import csv
from pathlib import Path
from typing import Iterable, List, Sequence, Union

from ..core.utils import ensure_dir, logger
from .sweep import SummaryRow, TuningRow, summarize
from .trainer import RunRecord

METRICS_HEADER = ["step", "loss", "metric", "epsilon"]
SUMMARY_HEADER = ["strategy", "budget", "sigma", "seeds", "step", "loss", "metric", "metric_std", "epsilon"]
TUNING_HEADER = ["strategy", "budget", "learning_rate", "h2", "val_metric", "selected"]


def _fmt(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    return str(value)


def _write(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    try:
        with open(path, 'w', newline='', encoding='utf-8') as f:
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(header)
            for row in rows:
                writer.writerow([_fmt(v) for v in row])
    except OSError as e:
        raise OSError(f"cannot write {path}: {e.strerror or e}") from e
    return path


def write_metrics(record: RunRecord, out_dir: Union[str, Path]) -> Path:
    path = ensure_dir(str(out_dir)) / f"metrics_{record.seed}.csv"
    return _write(path, METRICS_HEADER, record.rows)


def write_epsilon_curve(record: RunRecord, out_dir: Union[str, Path]) -> Path:
    path = ensure_dir(str(out_dir)) / "epsilon_curve.csv"
    return record.epsilon_curve().to_csv(path)


def write_summary(rows: Sequence[SummaryRow], out_dir: Union[str, Path]) -> Path:
    return _write(ensure_dir(str(out_dir)) / "summary.csv", SUMMARY_HEADER, rows)


def write_tuning(rows: Sequence[TuningRow], out_dir: Union[str, Path]) -> Path:
    return _write(ensure_dir(str(out_dir)) / "tuning.csv", TUNING_HEADER, rows)


def cell_dir(record: RunRecord) -> str:
    return f"{record.strategy}_{record.budget}"


def emit(records: Sequence[RunRecord], out_dir: Union[str, Path],
         tuning: Sequence[TuningRow] = ()) -> List[Path]:
    """Write every artifact of ``records`` under ``out_dir``.

    Returns:
        Paths written, in order.

    Raises:
        OSError: naming the path that could not be written.
    """
    out_dir = Path(out_dir)
    cells = {cell_dir(r) for r in records}
    nested = len(cells) > 1
    written = []
    curves_done = set()
    for record in records:
        target = out_dir / cell_dir(record) if nested else out_dir
        written.append(write_metrics(record, target))
        # ε depends only on (σ, q, T), shared by every seed of a cell
        if cell_dir(record) not in curves_done:
            written.append(write_epsilon_curve(record, target))
            curves_done.add(cell_dir(record))
    written.append(write_summary(summarize(records), out_dir))
    if tuning:
        written.append(write_tuning(tuning, out_dir))
    for path in written:
        logger.info(f"Wrote {path}")
    return written
