"""
File formats for geoclip: CSV dataset ingestion and estimator snapshots.
"""

from .csv_loader import CsvDatasetLoader, DatasetSchema, load_csv, write_csv
from .checkpoint import save_snapshot, load_snapshot

__all__ = [
    'CsvDatasetLoader',
    'DatasetSchema',
    'load_csv',
    'write_csv',
    'save_snapshot',
    'load_snapshot',
]
