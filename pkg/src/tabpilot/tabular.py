"""Minimal typed table with CSV round-trip.

Tables are immutable by convention: every operation returns a new Table and
callers must not mutate cell lists they did not create.  A cell is either a
value conforming to the column dtype or ``None`` (missing).  Missing is a
cell state, not a dtype.

CSV mapping: missing cells are written as empty fields and read back from
empty fields or the literals ``NaN``/``nan``/``NA``.  Because CSV carries no
type channel, a Text column whose every cell happens to look numeric will
re-read as a numeric column; this is inherent to the format and shared by
every untyped-CSV reader.
"""

from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass, field
from datetime import date, datetime
from enum import Enum
from pathlib import Path


class DType(Enum):
    Integer = "integer"
    Float = "float"
    Text = "text"
    Boolean = "boolean"
    Datetime = "datetime"


class ColumnRole(Enum):
    ID = "id"
    Feature = "feature"
    Target = "target"


class TableError(Exception):
    """Structural violation while building or transforming a table."""


class ParseError(TableError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


class EmptyFileError(ParseError):
    pass


MISSING_LITERALS = {"", "NaN", "nan", "NA"}

_BOOL_WORDS = {"true": True, "false": False}
_DATE_RE = re.compile(r"^\d{4}-\d{2}-\d{2}$")
_DATETIME_RE = re.compile(
    r"^\d{4}-\d{2}-\d{2}[ T]\d{2}:\d{2}(:\d{2}(\.\d{1,6})?)?$"
)


def parse_int(text: str) -> int | None:
    try:
        return int(text)
    except ValueError:
        return None


def parse_float(text: str) -> float | None:
    try:
        value = float(text)
    except ValueError:
        return None
    if math.isnan(value):
        return None
    return value


def parse_datetime(text: str) -> datetime | None:
    if _DATE_RE.match(text):
        try:
            d = date.fromisoformat(text)
        except ValueError:
            return None
        return datetime(d.year, d.month, d.day)
    if _DATETIME_RE.match(text):
        try:
            return datetime.fromisoformat(text.replace(" ", "T"))
        except ValueError:
            return None
    return None


def _check_cell(value, dtype: DType) -> bool:
    if value is None:
        return True
    if dtype is DType.Boolean:
        return isinstance(value, bool)
    if dtype is DType.Integer:
        return isinstance(value, int) and not isinstance(value, bool)
    if dtype is DType.Float:
        return isinstance(value, float) and not math.isnan(value)
    if dtype is DType.Text:
        return isinstance(value, str)
    if dtype is DType.Datetime:
        return isinstance(value, datetime)
    return False


class Table:
    """Ordered named columns of equal length."""

    def __init__(self, columns: list[tuple[str, DType, list]]):
        names = [name for name, _, _ in columns]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise TableError(f"duplicate column names: {dupes}")
        lengths = {len(cells) for _, _, cells in columns}
        if len(lengths) > 1:
            raise TableError(f"columns have unequal lengths: {sorted(lengths)}")
        self._names: list[str] = names
        self._dtypes: dict[str, DType] = {}
        self._cells: dict[str, list] = {}
        for name, dtype, cells in columns:
            if dtype is DType.Float:
                # also collapses numpy scalars to built-in floats
                cells = [float(c) if isinstance(c, (int, float)) and not isinstance(c, bool) else c
                         for c in cells]
            for i, value in enumerate(cells):
                if not _check_cell(value, dtype):
                    raise TableError(
                        f"column {name!r} row {i}: {value!r} does not conform to {dtype.value}"
                    )
            self._dtypes[name] = dtype
            self._cells[name] = list(cells)
        self._n_rows = len(columns[0][2]) if columns else 0

    @property
    def names(self) -> list[str]:
        return list(self._names)

    @property
    def n_rows(self) -> int:
        return self._n_rows

    @property
    def n_columns(self) -> int:
        return len(self._names)

    def has_column(self, name: str) -> bool:
        return name in self._dtypes

    def dtype(self, name: str) -> DType:
        self._require(name)
        return self._dtypes[name]

    def column(self, name: str) -> list:
        self._require(name)
        return list(self._cells[name])

    def columns(self) -> list[tuple[str, DType, list]]:
        return [(n, self._dtypes[n], list(self._cells[n])) for n in self._names]

    def row(self, index: int) -> tuple:
        return tuple(self._cells[n][index] for n in self._names)

    def rows(self) -> list[tuple]:
        return [self.row(i) for i in range(self._n_rows)]

    def missing_count(self, name: str) -> int:
        self._require(name)
        return sum(1 for v in self._cells[name] if v is None)

    def is_numeric(self, name: str) -> bool:
        return self.dtype(name) in (DType.Integer, DType.Float)

    def numeric_values(self, name: str) -> list[float]:
        """Present cells of a numeric column as floats."""
        if not self.is_numeric(name):
            raise TableError(f"column {name!r} is not numeric")
        return [float(v) for v in self._cells[name] if v is not None]

    def with_column(self, name: str, dtype: DType, cells: list) -> Table:
        """Replace an existing column or append a new one."""
        cols = []
        replaced = False
        for n, d, c in self.columns():
            if n == name:
                cols.append((name, dtype, cells))
                replaced = True
            else:
                cols.append((n, d, c))
        if not replaced:
            if self._names and len(cells) != self._n_rows:
                raise TableError(
                    f"new column {name!r} has {len(cells)} rows, table has {self._n_rows}"
                )
            cols.append((name, dtype, cells))
        return Table(cols)

    def without_columns(self, names: list[str]) -> Table:
        drop = set(names)
        return Table([(n, d, c) for n, d, c in self.columns() if n not in drop])

    def select_columns(self, names: list[str]) -> Table:
        for name in names:
            self._require(name)
        return Table([(n, self._dtypes[n], list(self._cells[n])) for n in names])

    def filter_rows(self, keep: list[bool]) -> Table:
        if len(keep) != self._n_rows:
            raise TableError("row mask length mismatch")
        return Table([
            (n, d, [v for v, k in zip(c, keep) if k]) for n, d, c in self.columns()
        ])

    def equals(self, other: Table) -> bool:
        if self._names != other._names:
            return False
        if any(self._dtypes[n] is not other._dtypes[n] for n in self._names):
            return False
        return all(self._cells[n] == other._cells[n] for n in self._names)

    def __eq__(self, other) -> bool:
        return isinstance(other, Table) and self.equals(other)

    def __repr__(self) -> str:
        cols = ", ".join(f"{n}:{self._dtypes[n].value}" for n in self._names)
        return f"Table({self._n_rows} rows; {cols})"

    def _require(self, name: str) -> None:
        if name not in self._dtypes:
            raise KeyError(name)


@dataclass
class Schema:
    """Column roles as assigned from competition metadata."""

    roles: dict[str, ColumnRole] = field(default_factory=dict)

    def target(self) -> str | None:
        targets = [n for n, r in self.roles.items() if r is ColumnRole.Target]
        if len(targets) > 1:
            raise TableError(f"multiple target columns: {targets}")
        return targets[0] if targets else None

    def ids(self) -> list[str]:
        return [n for n, r in self.roles.items() if r is ColumnRole.ID]


def infer_dtype(raw: list[str]) -> DType:
    """Infer a column dtype from raw CSV strings, ignoring missing cells."""
    present = [v for v in raw if v not in MISSING_LITERALS]
    if not present:
        return DType.Text
    if all(parse_int(v) is not None for v in present):
        return DType.Integer
    if all(parse_float(v) is not None for v in present):
        return DType.Float
    lowered = [v.lower() for v in present]
    if all(v in ("true", "false", "0", "1") for v in lowered) and any(
        v in _BOOL_WORDS for v in lowered
    ):
        return DType.Boolean
    if all(parse_datetime(v) is not None for v in present):
        return DType.Datetime
    return DType.Text


def _convert(raw: str, dtype: DType):
    if raw in MISSING_LITERALS:
        return None
    if dtype is DType.Integer:
        return int(raw)
    if dtype is DType.Float:
        return float(raw)
    if dtype is DType.Boolean:
        lowered = raw.lower()
        if lowered in _BOOL_WORDS:
            return _BOOL_WORDS[lowered]
        return bool(int(lowered))
    if dtype is DType.Datetime:
        return parse_datetime(raw)
    return raw


def read_csv_text(text: str) -> Table:
    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        rows = list(reader)
    except csv.Error as exc:
        raise ParseError(str(exc), line=reader.line_num)
    if not rows:
        raise EmptyFileError("file contains no header")
    header = rows[0]
    if len(set(header)) != len(header):
        dupes = sorted({h for h in header if header.count(h) > 1})
        raise ParseError(f"duplicate header fields: {dupes}", line=1)
    body = [row for row in rows[1:] if row]  # blank lines are skipped
    for i, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise ParseError(
                f"expected {len(header)} fields, found {len(row)}", line=i
            )
    columns = []
    for j, name in enumerate(header):
        raw = [row[j] for row in body]
        dtype = infer_dtype(raw)
        cells = [_convert(v, dtype) for v in raw]
        if dtype is DType.Integer and any(c is None for c in cells):
            # no nullable-integer cells: promote to Float when missing present
            dtype = DType.Float
            cells = [None if c is None else float(c) for c in cells]
        columns.append((name, dtype, cells))
    return Table(columns)


def read_csv(path: str | Path) -> Table:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(str(path))
    with path.open("r", encoding="utf-8", newline="") as handle:
        return read_csv_text(handle.read())


def format_cell(value, dtype: DType) -> str:
    if value is None:
        return ""
    if dtype is DType.Boolean:
        return "true" if value else "false"
    if dtype is DType.Float:
        return repr(value)  # shortest round-trip representation
    if dtype is DType.Datetime:
        if (value.hour, value.minute, value.second, value.microsecond) == (0, 0, 0, 0):
            return value.date().isoformat()
        return value.isoformat(sep=" ")
    return str(value)


def write_csv_text(table: Table) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(table.names)
    dtypes = [table.dtype(n) for n in table.names]
    cols = [table.column(n) for n in table.names]
    for i in range(table.n_rows):
        writer.writerow(
            [format_cell(col[i], dt) for col, dt in zip(cols, dtypes)]
        )
    return out.getvalue()


def write_csv(table: Table, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as handle:
        handle.write(write_csv_text(table))


def schema_diff(before: Table, after: Table) -> dict[str, list[str]]:
    """Column-level difference: created, deleted and retyped names."""
    before_names = set(before.names)
    after_names = set(after.names)
    created = sorted(after_names - before_names)
    deleted = sorted(before_names - after_names)
    retyped = sorted(
        n for n in before_names & after_names if before.dtype(n) is not after.dtype(n)
    )
    return {"created": created, "deleted": deleted, "retyped": retyped}
