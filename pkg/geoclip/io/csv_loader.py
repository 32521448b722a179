"""
CSV dataset ingestion.

A dataset is a comma-separated UTF-8 file (optional header row) plus a
schema file of ``key = value`` lines::

    name = diabetes
    target = target
    task = regression
    header = true
    classes = 2
    ignore = id
    categorical.protocol = tcp:0, udp:1

``target`` is a column name (or a 0-based index when there is no header).
``categorical.<column>`` maps string levels of a column (the target
included) to numbers. Every other cell must parse as a finite float.
"""
from __future__ import annotations
import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..core.errors import DataParseError, NonNumericCellError, RowLengthError, SchemaError
from ..core.utils import logger
from ..data.dataset import CLASSIFICATION, REGRESSION, Dataset, SplitSpec, prepare

_TRUE = {"true", "yes", "1", "on"}
_FALSE = {"false", "no", "0", "off"}


@dataclass(frozen=True)
class DatasetSchema:
    """How to read one CSV dataset."""

    target: str
    task: str
    name: Optional[str] = None
    header: bool = True
    classes: Optional[int] = None
    ignore: Tuple[str, ...] = ()
    categorical: Dict[str, Dict[str, float]] = field(default_factory=dict)
    minmax_targets: bool = False

    def __post_init__(self):
        if self.task not in (REGRESSION, CLASSIFICATION):
            raise SchemaError(f"task must be '{REGRESSION}' or '{CLASSIFICATION}', got {self.task!r}")
        if not self.header and not self.target.isdigit():
            raise SchemaError("without a header row the target must be a column index")

    @classmethod
    def parse(cls, path: Union[str, Path]) -> "DatasetSchema":
        """Read a schema file.

        Raises:
            SchemaError: on malformed lines, unknown keys or missing ``target``/``task``.
        """
        values: Dict[str, object] = {}
        categorical: Dict[str, Dict[str, float]] = {}
        with open(path, encoding='utf-8') as f:
            for lineno, raw in enumerate(f, start=1):
                line = raw.split('#', 1)[0].strip()
                if not line:
                    continue
                if '=' not in line:
                    raise SchemaError(f"{path}, line {lineno}: expected 'key = value'")
                key, value = (s.strip() for s in line.split('=', 1))
                if key.startswith("categorical."):
                    categorical[key[len("categorical."):]] = _parse_levels(value, path, lineno)
                elif key in ("target", "task", "name"):
                    values[key] = value
                elif key in ("header", "minmax_targets"):
                    values[key] = _parse_bool(value, path, lineno)
                elif key == "classes":
                    try:
                        values[key] = int(value)
                    except ValueError:
                        raise SchemaError(f"{path}, line {lineno}: classes must be an integer") from None
                elif key == "ignore":
                    values[key] = tuple(s.strip() for s in value.split(',') if s.strip())
                else:
                    raise SchemaError(f"{path}, line {lineno}: unknown schema key {key!r}")
        for required in ("target", "task"):
            if required not in values:
                raise SchemaError(f"{path}: schema must declare '{required}'")
        return cls(categorical=categorical, **values)

    def write(self, path: Union[str, Path]) -> Path:
        """Write the schema in the format ``parse`` reads."""
        path = Path(path)
        lines = []
        if self.name:
            lines.append(f"name = {self.name}")
        lines += [f"target = {self.target}", f"task = {self.task}",
                  f"header = {str(self.header).lower()}"]
        if self.classes is not None:
            lines.append(f"classes = {self.classes}")
        if self.ignore:
            lines.append(f"ignore = {', '.join(self.ignore)}")
        if self.minmax_targets:
            lines.append("minmax_targets = true")
        for column, levels in self.categorical.items():
            lines.append(f"categorical.{column} = " + ", ".join(f"{k}:{v:g}" for k, v in levels.items()))
        path.write_text("\n".join(lines) + "\n", encoding='utf-8')
        return path


def _parse_bool(value: str, path, lineno: int) -> bool:
    if value.lower() in _TRUE:
        return True
    if value.lower() in _FALSE:
        return False
    raise SchemaError(f"{path}, line {lineno}: expected a boolean, got {value!r}")


def _parse_levels(value: str, path, lineno: int) -> Dict[str, float]:
    levels = {}
    for item in value.split(','):
        if ':' not in item:
            raise SchemaError(f"{path}, line {lineno}: expected 'level:code' pairs, got {item.strip()!r}")
        level, code = item.rsplit(':', 1)
        try:
            levels[level.strip()] = float(code)
        except ValueError:
            raise SchemaError(f"{path}, line {lineno}: category code {code.strip()!r} is not numeric") from None
    return levels


class CsvDatasetLoader:
    """Parses CSV files into ``Dataset`` objects according to a schema."""

    def __init__(self, schema: DatasetSchema):
        self.schema = schema

    def parse(self, file_path: Union[str, Path]) -> Dataset:
        """Parse and validate a CSV file.

        Raises:
            DataParseError: unreadable CSV (bad quoting, invalid UTF-8) or no data rows.
            RowLengthError: a row with the wrong number of cells.
            NonNumericCellError: a cell that is not a finite number or declared category.
        """
        path = str(file_path)
        with open(file_path, newline='', encoding='utf-8') as f:
            reader = csv.reader(f)
            try:
                header, rows = self._read(reader, path)
            except csv.Error as e:
                raise DataParseError(str(e), path, reader.line_num) from None
            except UnicodeDecodeError as e:
                raise DataParseError(f"not valid UTF-8 ({e.reason})", path, _first_undecodable_line(file_path)) from None
        if not rows:
            raise DataParseError("no data rows", path)

        target_idx = self._column_index(header, self.schema.target, path)
        ignored = {self._column_index(header, c, path) for c in self.schema.ignore}
        codecs = [self.schema.categorical.get(name, {}) for name in header]

        table = np.empty((len(rows), len(header)))
        for r, (lineno, cells) in enumerate(rows):
            for c, cell in enumerate(cells):
                if c in ignored:
                    table[r, c] = 0.0
                    continue
                table[r, c] = self._cell(cell.strip(), codecs[c], header[c], path, lineno)

        feature_cols = [c for c in range(len(header)) if c != target_idx and c not in ignored]
        targets = table[:, target_idx]
        if self.schema.task == CLASSIFICATION:
            if not np.all(targets == np.round(targets)) or targets.min() < 0:
                raise DataParseError(
                    f"classification targets in column {header[target_idx]!r} must be nonnegative integers", path
                )
        name = self.schema.name or Path(path).stem
        logger.info(f"Loaded {name}: {len(rows)} rows, {len(feature_cols)} features from {path}")
        return Dataset(
            name=name,
            features=table[:, feature_cols],
            targets=targets,
            task=self.schema.task,
            num_classes=self.schema.classes,
        )

    def _read(self, reader, path: str) -> Tuple[List[str], List[Tuple[int, List[str]]]]:
        header: Optional[List[str]] = None
        width: Optional[int] = None
        rows = []
        for cells in reader:
            if not cells or all(not c.strip() for c in cells):
                continue
            if header is None and self.schema.header:
                header = [c.strip() for c in cells]
                width = len(header)
                continue
            if width is None:
                width = len(cells)
                header = [str(i) for i in range(width)]
            if len(cells) != width:
                raise RowLengthError(f"expected {width} cells, found {len(cells)}", path, reader.line_num)
            rows.append((reader.line_num, cells))
        if header is None:
            raise DataParseError("file is empty", path)
        return header, rows

    @staticmethod
    def _column_index(header: Sequence[str], column: str, path: str) -> int:
        if column in header:
            return list(header).index(column)
        raise SchemaError(f"{path}: column {column!r} not found (columns: {', '.join(header)})")

    @staticmethod
    def _cell(cell: str, codec: Dict[str, float], column: str, path: str, lineno: int) -> float:
        if cell in codec:
            return codec[cell]
        try:
            value = float(cell)
        except ValueError:
            raise NonNumericCellError(f"column {column!r}: cannot parse {cell!r} as a number", path, lineno) from None
        if not math.isfinite(value):
            raise NonNumericCellError(f"column {column!r}: non-finite value {cell!r}", path, lineno)
        return value


def _first_undecodable_line(path: Union[str, Path]) -> Optional[int]:
    with open(path, 'rb') as f:
        for lineno, raw in enumerate(f, start=1):
            try:
                raw.decode('utf-8')
            except UnicodeDecodeError:
                return lineno
    return None


def load_csv(path: Union[str, Path], schema: Union[DatasetSchema, str, Path],
             split_spec: Optional[SplitSpec] = None):
    """Load a CSV dataset.

    Args:
        path: CSV file.
        schema: a ``DatasetSchema`` or the path of a schema file.
        split_spec: when given, also split and standardize with training statistics.

    Returns:
        The raw ``Dataset``, or the prepared ``(train, val, test)`` triple when
        ``split_spec`` is given.
    """
    if not isinstance(schema, DatasetSchema):
        schema = DatasetSchema.parse(schema)
    dataset = CsvDatasetLoader(schema).parse(path)
    if split_spec is None:
        return dataset
    return prepare(dataset, split_spec, minmax_targets=schema.minmax_targets)


def write_csv(dataset: Dataset, out_csv: Union[str, Path], minmax_targets: bool = False) -> Path:
    """Write ``dataset`` as CSV with a header row, plus a ``<stem>.schema`` file beside it."""
    out_csv = Path(out_csv)
    out_csv.parent.mkdir(parents=True, exist_ok=True)
    columns = [f"x{j}" for j in range(dataset.p)] + ["target"]
    table = np.column_stack([dataset.features, dataset.targets])
    fmt = ["%.17g"] * dataset.p + (["%d"] if dataset.task == CLASSIFICATION else ["%.17g"])
    np.savetxt(out_csv, table, delimiter=",", header=",".join(columns), comments="", fmt=fmt)

    schema = DatasetSchema(
        target="target",
        task=dataset.task,
        name=dataset.name,
        classes=dataset.num_classes,
        minmax_targets=minmax_targets,
    )
    schema_path = schema.write(out_csv.with_suffix(".schema"))
    logger.info(f"Wrote {dataset.n} rows of {dataset.name} to {out_csv} (schema {schema_path})")
    return out_csv
