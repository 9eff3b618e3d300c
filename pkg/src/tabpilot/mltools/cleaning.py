"""Data-cleaning tools: missing values, outliers, duplicates, types."""

from __future__ import annotations

from collections import Counter
from datetime import datetime

from ..tabular import DType, Table, format_cell, parse_datetime, parse_float, parse_int
from .base import (
    ToolResult,
    ensure_columns,
    ensure_numeric,
    natural_sort_key,
    population_mean,
    population_std,
    quantile,
)

FILL_METHODS = ("auto", "mean", "median", "mode", "constant")
OUTLIER_METHODS = ("clip", "remove")
CONVERT_TARGETS = ("int", "float", "str", "bool", "datetime")


def _mode(values: list, dtype: DType):
    counts = Counter(values)
    best = max(counts.values())
    candidates = [v for v, c in counts.items() if c == best]
    return min(candidates, key=natural_sort_key)


def _median(values: list[float]) -> float:
    return quantile(values, 0.5)


def fill_missing_values(table: Table, columns, method: str = "auto",
                        fill_value=None) -> ToolResult:
    columns = ensure_columns(table, columns)
    if method not in FILL_METHODS:
        raise ValueError(f"unknown fill method {method!r}")
    if method == "constant" and fill_value is None:
        raise ValueError("method 'constant' requires fill_value")

    out = table
    lines = []
    for name in columns:
        dtype = table.dtype(name)
        cells = table.column(name)
        present = [v for v in cells if v is not None]
        n_missing = len(cells) - len(present)
        effective = method
        if method == "auto":
            effective = "mean" if table.is_numeric(name) else "mode"
        if effective in ("mean", "median") and not table.is_numeric(name):
            raise ValueError(
                f"method {effective!r} requires a numeric column, "
                f"{name!r} is {dtype.value}"
            )
        if n_missing == 0:
            lines.append(f"{name}: 0 cells filled")
            continue
        if not present and effective != "constant":
            raise ValueError(f"column {name!r} has no present values to fill from")

        if effective == "mean":
            fill = population_mean([float(v) for v in present])
        elif effective == "median":
            fill = _median([float(v) for v in present])
        elif effective == "mode":
            fill = _mode(present, dtype)
        else:
            fill = fill_value

        new_dtype = dtype
        if table.is_numeric(name) and isinstance(fill, (int, float)) and not isinstance(fill, bool):
            fill = float(fill)
            if dtype is DType.Integer:
                if fill.is_integer():
                    fill = int(fill)
                else:
                    new_dtype = DType.Float
        elif not _conforms(fill, dtype):
            raise ValueError(
                f"fill value {fill!r} does not conform to column {name!r} ({dtype.value})"
            )

        filled = [fill if v is None else v for v in cells]
        out = out.with_column(name, new_dtype, filled)
        lines.append(
            f"{name}: {n_missing} cells filled with "
            f"{format_cell(fill, new_dtype)} ({effective})"
        )
    return ToolResult(table=out, report="fill_missing_values: " + "; ".join(lines))


def _conforms(value, dtype: DType) -> bool:
    if dtype is DType.Text:
        return isinstance(value, str)
    if dtype is DType.Boolean:
        return isinstance(value, bool)
    if dtype is DType.Datetime:
        return isinstance(value, datetime)
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def remove_columns_with_missing_data(table: Table, columns=None,
                                     thresh: float = 0.5) -> ToolResult:
    if not 0.0 <= thresh <= 1.0:
        raise ValueError(f"thresh must be within [0, 1], got {thresh}")
    if columns is not None:
        drop = ensure_columns(table, columns)
        detail = "explicitly requested"
    else:
        drop = []
        if table.n_rows:
            for name in table.names:
                fraction = table.missing_count(name) / table.n_rows
                if fraction > thresh:
                    drop.append(name)
        detail = f"missing fraction > {thresh}"
    out = table.without_columns(drop)
    dropped = ", ".join(drop) if drop else "none"
    return ToolResult(
        table=out,
        report=f"remove_columns_with_missing_data: dropped [{dropped}] ({detail})",
    )


def _handle_outliers(table: Table, columns, method: str, bounds_for) -> ToolResult:
    columns = ensure_columns(table, columns)
    ensure_numeric(table, columns)
    if method not in OUTLIER_METHODS:
        raise ValueError(f"unknown outlier method {method!r}")

    lines = []
    per_column_bounds: dict[str, tuple[float, float]] = {}
    for name in columns:
        present = table.numeric_values(name)
        if not present:
            lines.append(f"{name}: no present values, skipped")
            continue
        bounds = bounds_for(name, present)
        if bounds is None:
            lines.append(f"{name}: zero variance, skipped (warning)")
            continue
        per_column_bounds[name] = bounds

    if method == "clip":
        out = table
        for name, (lo, hi) in per_column_bounds.items():
            cells = out.column(name)
            clipped = 0
            new_cells = []
            for v in cells:
                if v is None:
                    new_cells.append(v)
                elif v < lo:
                    new_cells.append(lo)
                    clipped += 1
                elif v > hi:
                    new_cells.append(hi)
                    clipped += 1
                else:
                    new_cells.append(v)
            if clipped:
                dtype = out.dtype(name)
                if dtype is DType.Integer:
                    dtype = DType.Float
                    new_cells = [None if v is None else float(v) for v in new_cells]
                out = out.with_column(name, dtype, new_cells)
            lines.append(f"{name}: {clipped} cells clipped to [{lo!r}, {hi!r}]")
        return ToolResult(table=out, report=_outlier_report(method, lines))

    keep = [True] * table.n_rows
    for name, (lo, hi) in per_column_bounds.items():
        for i, v in enumerate(table.column(name)):
            if v is not None and (v < lo or v > hi):
                keep[i] = False
    removed = keep.count(False)
    out = table.filter_rows(keep)
    for name, (lo, hi) in per_column_bounds.items():
        lines.append(f"{name}: bounds [{lo!r}, {hi!r}]")
    lines.append(f"{removed} rows removed")
    return ToolResult(table=out, report=_outlier_report(method, lines))


def _outlier_report(method: str, lines: list[str]) -> str:
    return f"outliers ({method}): " + "; ".join(lines)


def detect_and_handle_outliers_zscore(table: Table, columns, threshold: float = 3.0,
                                      method: str = "clip") -> ToolResult:
    def bounds_for(name, present):
        mean = population_mean(present)
        std = population_std(present)
        if std == 0.0:
            return None
        return (mean - threshold * std, mean + threshold * std)

    return _handle_outliers(table, columns, method, bounds_for)


def detect_and_handle_outliers_iqr(table: Table, columns, factor: float = 1.5,
                                   method: str = "clip") -> ToolResult:
    def bounds_for(name, present):
        q1 = quantile(present, 0.25)
        q3 = quantile(present, 0.75)
        iqr = q3 - q1
        return (q1 - factor * iqr, q3 + factor * iqr)

    return _handle_outliers(table, columns, method, bounds_for)


def remove_duplicates(table: Table, columns=None, keep: str = "first") -> ToolResult:
    if keep not in ("first", "last"):
        raise ValueError(f"keep must be 'first' or 'last', got {keep!r}")
    key_columns = ensure_columns(table, columns) if columns is not None else table.names
    key_cells = [table.column(n) for n in key_columns]
    n = table.n_rows
    keys = [tuple(col[i] for col in key_cells) for i in range(n)]
    keep_mask = [False] * n
    seen: set = set()
    order = range(n) if keep == "first" else range(n - 1, -1, -1)
    for i in order:
        if keys[i] not in seen:
            seen.add(keys[i])
            keep_mask[i] = True
    removed = n - sum(keep_mask)
    return ToolResult(
        table=table.filter_rows(keep_mask),
        report=f"remove_duplicates: {removed} duplicate rows removed "
               f"(keys: {', '.join(key_columns)}; keep={keep})",
    )


_TARGET_DTYPES = {
    "int": DType.Integer,
    "float": DType.Float,
    "str": DType.Text,
    "bool": DType.Boolean,
    "datetime": DType.Datetime,
}


def _convert_cell(value, source: DType, target: str):
    """Convert one present cell; raises ValueError when not representable."""
    if target == "str":
        return format_cell(value, source)
    if target == "int":
        if isinstance(value, bool):
            return int(value)
        if isinstance(value, int):
            return value
        if isinstance(value, float):
            if value.is_integer():
                return int(value)
            raise ValueError(f"{value!r} is not an integer")
        if isinstance(value, str):
            parsed = parse_int(value.strip())
            if parsed is None:
                raise ValueError(f"{value!r} is not an integer")
            return parsed
        raise ValueError(f"cannot convert {value!r} to int")
    if target == "float":
        if isinstance(value, bool):
            return float(value)
        if isinstance(value, (int, float)):
            return float(value)
        if isinstance(value, str):
            parsed = parse_float(value.strip())
            if parsed is None:
                raise ValueError(f"{value!r} is not a number")
            return parsed
        raise ValueError(f"cannot convert {value!r} to float")
    if target == "bool":
        if isinstance(value, bool):
            return value
        if isinstance(value, (int, float)):
            if value in (0, 1):
                return bool(value)
            raise ValueError(f"{value!r} is not 0/1")
        if isinstance(value, str):
            lowered = value.strip().lower()
            if lowered in ("true", "1"):
                return True
            if lowered in ("false", "0"):
                return False
            raise ValueError(f"{value!r} is not a boolean literal")
        raise ValueError(f"cannot convert {value!r} to bool")
    if target == "datetime":
        if isinstance(value, datetime):
            return value
        if isinstance(value, str):
            parsed = parse_datetime(value.strip())
            if parsed is None:
                raise ValueError(f"{value!r} is not an ISO-8601 date or datetime")
            return parsed
        raise ValueError(f"cannot convert {value!r} to datetime")
    raise ValueError(f"unknown target type {target!r}")


def convert_data_types(table: Table, columns, target_type: str,
                       on_error: str = "raise") -> ToolResult:
    columns = ensure_columns(table, columns)
    if target_type not in CONVERT_TARGETS:
        raise ValueError(f"unknown target type {target_type!r}")
    if on_error not in ("raise", "coerce"):
        raise ValueError(f"on_error must be 'raise' or 'coerce', got {on_error!r}")

    out = table
    lines = []
    for name in columns:
        source = table.dtype(name)
        converted = []
        bad_rows: list[int] = []
        for i, value in enumerate(table.column(name)):
            if value is None:
                converted.append(None)
                continue
            try:
                converted.append(_convert_cell(value, source, target_type))
            except ValueError:
                bad_rows.append(i)
                converted.append(None)
        if bad_rows and on_error == "raise":
            shown = bad_rows[:10]
            raise ValueError(
                f"column {name!r}: {len(bad_rows)} cells not convertible to "
                f"{target_type} (rows {shown})"
            )
        out = out.with_column(name, _TARGET_DTYPES[target_type], converted)
        note = f"{len(bad_rows)} coerced to missing" if bad_rows else "all cells converted"
        lines.append(f"{name} -> {target_type} ({note})")
    return ToolResult(table=out, report="convert_data_types: " + "; ".join(lines))


_DATETIME_TOKENS = {
    "YYYY": lambda d: f"{d.year:04d}",
    "MM": lambda d: f"{d.month:02d}",
    "DD": lambda d: f"{d.day:02d}",
    "hh": lambda d: f"{d.hour:02d}",
    "mm": lambda d: f"{d.minute:02d}",
    "ss": lambda d: f"{d.second:02d}",
}


def _compile_pattern(pattern: str):
    """Split a pattern into literal segments and known tokens."""
    parts = []
    i = 0
    while i < len(pattern):
        for token in ("YYYY", "MM", "DD", "hh", "mm", "ss"):
            if pattern.startswith(token, i):
                parts.append(("token", token))
                i += len(token)
                break
        else:
            ch = pattern[i]
            if ch.isalpha():
                raise ValueError(f"unknown datetime token at {pattern[i:]!r}")
            parts.append(("literal", ch))
            i += 1
    return parts


def format_datetime(table: Table, columns, format: str) -> ToolResult:
    columns = ensure_columns(table, columns)
    for name in columns:
        if table.dtype(name) is not DType.Datetime:
            raise ValueError(
                f"column {name!r} is {table.dtype(name).value}, expected datetime"
            )
    parts = _compile_pattern(format)

    def render(value: datetime) -> str:
        return "".join(
            _DATETIME_TOKENS[payload](value) if kind == "token" else payload
            for kind, payload in parts
        )

    out = table
    for name in columns:
        cells = [None if v is None else render(v) for v in table.column(name)]
        out = out.with_column(name, DType.Text, cells)
    return ToolResult(
        table=out,
        report=f"format_datetime: rendered [{', '.join(columns)}] with {format!r}",
    )
