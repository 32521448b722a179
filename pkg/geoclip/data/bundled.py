"""
Benchmark tables shipped with scikit-learn, exportable as CSV + schema.
"""
from pathlib import Path
from typing import Union

from sklearn import datasets

from .dataset import CLASSIFICATION, REGRESSION, Dataset

BUNDLED = ("diabetes", "breast_cancer")


def load_bundled(name: str) -> Dataset:
    """Diabetes (442 × 10, regression) or Breast Cancer (569 × 30, binary)."""
    if name == "diabetes":
        x, y = datasets.load_diabetes(return_X_y=True)
        return Dataset("diabetes", x, y, REGRESSION)
    if name == "breast_cancer":
        x, y = datasets.load_breast_cancer(return_X_y=True)
        return Dataset("breast_cancer", x, y, CLASSIFICATION, num_classes=2)
    raise ValueError(f"Unknown bundled dataset {name!r}; expected one of {', '.join(BUNDLED)}")


def export_bundled(name: str, out_csv: Union[str, Path]) -> Path:
    """Write a bundled table as CSV plus schema; Diabetes targets are marked for min-max scaling."""
    from ..io.csv_loader import write_csv

    dataset = load_bundled(name)
    return write_csv(dataset, out_csv, minmax_targets=dataset.task == REGRESSION)
