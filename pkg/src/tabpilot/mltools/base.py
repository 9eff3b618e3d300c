"""Shared plumbing for the native tool library."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime

from ..tabular import DType, Table, format_cell, parse_datetime


class ModelError(Exception):
    """Fit/predict contract violation in the native model tools."""


class ExpressionParseError(Exception):
    """Malformed derive-column expression."""


@dataclass
class FittedState:
    """Parameters learned on a training table, replayable on a test table."""

    tool: str
    params: dict

    def to_json(self) -> dict:
        return {"tool": self.tool, "params": _encode(self.params)}

    @classmethod
    def from_json(cls, payload: dict) -> FittedState:
        return cls(tool=payload["tool"], params=_decode(payload["params"]))


@dataclass
class ToolResult:
    table: Table
    report: str
    fitted: FittedState | None = None

    def __post_init__(self):
        if not self.report:
            raise ValueError("tool report must be non-empty")


@dataclass
class SelectionResult:
    """Outcome of a feature-selection tool: kept columns plus the evidence."""

    selected: list[str]
    report: str
    scores: dict[str, float] = field(default_factory=dict)


def ensure_columns(table: Table, columns: list[str] | str) -> list[str]:
    if isinstance(columns, str):
        columns = [columns]
    for name in columns:
        if not table.has_column(name):
            raise KeyError(name)
    return list(columns)


def ensure_numeric(table: Table, columns: list[str]) -> None:
    for name in columns:
        if not table.is_numeric(name):
            raise ValueError(
                f"column {name!r} is {table.dtype(name).value}, expected numeric"
            )


def natural_sort_key(value):
    """Order values of one column dtype; bools sort False < True."""
    if isinstance(value, bool):
        return int(value)
    return value


def render_value(value, dtype: DType) -> str:
    return format_cell(value, dtype)


def population_mean(values: list[float]) -> float:
    return sum(values) / len(values)


def population_std(values: list[float]) -> float:
    mean = population_mean(values)
    return math.sqrt(sum((v - mean) ** 2 for v in values) / len(values))


def population_variance(values: list[float]) -> float:
    mean = population_mean(values)
    return sum((v - mean) ** 2 for v in values) / len(values)


def quantile(values: list[float], p: float) -> float:
    """Linear-interpolation quantile at h = (n-1)*p over sorted values."""
    ordered = sorted(values)
    if not ordered:
        raise ValueError("quantile of empty sequence")
    h = (len(ordered) - 1) * p
    lo = int(math.floor(h))
    frac = h - lo
    if frac == 0.0:
        return float(ordered[lo])
    return float(ordered[lo] + frac * (ordered[lo + 1] - ordered[lo]))


def pearson(xs: list[float], ys: list[float]) -> float:
    """Pearson correlation; 0.0 when either side has zero variance."""
    n = len(xs)
    if n == 0 or n != len(ys):
        raise ValueError("pearson requires two equal-length non-empty sequences")
    mx = population_mean(xs)
    my = population_mean(ys)
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    sxx = sum((x - mx) ** 2 for x in xs)
    syy = sum((y - my) ** 2 for y in ys)
    if sxx == 0.0 or syy == 0.0:
        return 0.0
    return sxy / math.sqrt(sxx * syy)


# FittedState payloads cross a process boundary as JSON (the CLI sidecar), so
# cell values are tagged with their dtype to survive the round trip exactly.

def _encode(obj):
    if isinstance(obj, dict):
        return {"_kind": "dict", "items": [[_encode(k), _encode(v)] for k, v in obj.items()]}
    if isinstance(obj, (list, tuple)):
        return {"_kind": "list", "items": [_encode(v) for v in obj]}
    if obj is None:
        return {"_kind": "none"}
    if isinstance(obj, bool):
        return {"_kind": "bool", "value": obj}
    if isinstance(obj, int):
        return {"_kind": "int", "value": str(obj)}
    if isinstance(obj, float):
        return {"_kind": "float", "value": repr(obj)}
    if isinstance(obj, str):
        return {"_kind": "str", "value": obj}
    if isinstance(obj, datetime):
        return {"_kind": "datetime", "value": obj.isoformat(sep=" ")}
    raise TypeError(f"cannot encode {type(obj).__name__} in fitted state")


def _decode(obj):
    kind = obj["_kind"]
    if kind == "dict":
        return {_freeze(_decode(k)): _decode(v) for k, v in obj["items"]}
    if kind == "list":
        return [_decode(v) for v in obj["items"]]
    if kind == "none":
        return None
    if kind == "bool":
        return obj["value"]
    if kind == "int":
        return int(obj["value"])
    if kind == "float":
        return float(obj["value"])
    if kind == "str":
        return obj["value"]
    if kind == "datetime":
        parsed = parse_datetime(obj["value"])
        if parsed is None:
            raise ValueError(f"bad datetime in fitted state: {obj['value']!r}")
        return parsed
    raise ValueError(f"unknown fitted-state tag {kind!r}")


def _freeze(key):
    if isinstance(key, list):
        return tuple(key)
    return key
