"""
Datasets: containers, splits, preprocessing, generators and bundled tables.
"""

from .dataset import (
    CLASSIFICATION,
    REGRESSION,
    Dataset,
    SplitSpec,
    prepare,
    scale_targets,
    split,
    standardize,
)
from .synthetic import gen_synthetic_classification, gen_synthetic_regression
from .bundled import BUNDLED, export_bundled, load_bundled

__all__ = [
    'CLASSIFICATION',
    'REGRESSION',
    'Dataset',
    'SplitSpec',
    'prepare',
    'scale_targets',
    'split',
    'standardize',
    'gen_synthetic_classification',
    'gen_synthetic_regression',
    'BUNDLED',
    'export_bundled',
    'load_bundled',
]
