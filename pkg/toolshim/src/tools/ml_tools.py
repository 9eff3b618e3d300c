"""Importable table tools backed by the native engine.

Every function here mirrors one registry tool, with keyword names equal to
the tool's schema parameters.  A call serializes the DataFrame to a
temporary CSV, runs the `tabpilot tools_apply` subprocess, reads the output
CSV back and (for row-preserving tools) updates the passed frame in place
before returning it, so both `tool(df, ...)` and `df = tool(df, ...)` work
inside generated scripts.

Tools that learn parameters on a training table (encoders, scaling, PCA)
persist their fitted state to a sidecar file keyed by the call's keyword
arguments; calling the same tool with the same keywords on a second table
replays the training-table state, which keeps train/test schemas aligned
across two process invocations.  Pass `fitted_path` to control the sidecar
location explicitly.

Temporary files live under ./tmp of the calling process; each call gets its
own subdirectory, so concurrent calls never collide.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

import pandas as pd

__all__ = [
    "fill_missing_values",
    "remove_columns_with_missing_data",
    "detect_and_handle_outliers_zscore",
    "detect_and_handle_outliers_iqr",
    "remove_duplicates",
    "convert_data_types",
    "format_datetime",
    "one_hot_encode",
    "label_encode",
    "frequency_encode",
    "target_encode",
    "correlation_feature_selection",
    "variance_feature_selection",
    "scale_features",
    "perform_pca",
    "perform_rfe",
    "create_polynomial_features",
    "create_feature_combinations",
    "train_and_validation_and_select_the_best_model",
    "derive_column",
]


class ShimTransportError(Exception):
    """The native command-line binary could not be located or started."""


class ShimToolError(Exception):
    """A native tool failed with an error class this module cannot map."""


class ModelError(Exception):
    pass


class ExpressionParseError(Exception):
    pass


_ERROR_CLASSES = {
    "ValueError": ValueError,
    "KeyError": KeyError,
    "TypeError": TypeError,
    "FileNotFoundError": FileNotFoundError,
    "IOError": OSError,
    "OSError": OSError,
    "IndexError": IndexError,
    "AssertionError": AssertionError,
    "NameError": NameError,
    "AttributeError": AttributeError,
    "IndentationError": IndentationError,
    "TimeoutError": TimeoutError,
    "ModelError": ModelError,
    "ExpressionParseError": ExpressionParseError,
}

_ERROR_LINE_RE = re.compile(r"error:\s*([A-Za-z_][A-Za-z0-9_]*):\s*(.*)")

last_call: dict = {}  # paths of the most recent delegation, for tests


def _cli_command() -> list[str]:
    explicit = os.environ.get("TABPILOT_CLI")
    if explicit:
        return explicit.split()
    binary = shutil.which("tabpilot")
    if binary:
        return [binary]
    # same interpreter fallback: the engine installed as a module
    probe = subprocess.run(
        [sys.executable, "-c", "import tabpilot"],
        capture_output=True,
    )
    if probe.returncode == 0:
        return [sys.executable, "-m", "tabpilot.cli"]
    raise ShimTransportError(
        "cannot locate the native 'tabpilot' command; install the engine or "
        "set TABPILOT_CLI"
    )


def _tmp_root() -> Path:
    root = Path(os.environ.get("TOOLS_SHIM_TMP", "tmp"))
    root.mkdir(parents=True, exist_ok=True)
    return root


def _fitted_sidecar(tool: str, params: dict) -> Path:
    digest = hashlib.sha1(
        json.dumps({"tool": tool, "params": params}, sort_keys=True).encode()
    ).hexdigest()[:16]
    directory = _tmp_root() / "fitted"
    directory.mkdir(parents=True, exist_ok=True)
    return directory / f"{tool}_{digest}.json"


def _raise_native_error(stderr: str) -> None:
    for line in reversed(stderr.strip().splitlines()):
        match = _ERROR_LINE_RE.search(line)
        if match:
            name, message = match.groups()
            exc_type = _ERROR_CLASSES.get(name)
            if exc_type is KeyError:
                raise KeyError(message.strip("'\""))
            if exc_type is not None:
                raise exc_type(message)
            raise ShimToolError(f"{name}: {message}")
    raise ShimToolError(stderr.strip() or "native tool call failed")


def _sync_in_place(df: pd.DataFrame, out: pd.DataFrame) -> pd.DataFrame:
    """Mirror the engine's output onto the caller's frame when row counts
    allow it; otherwise hand back the fresh frame."""
    if len(out) != len(df):
        return out
    dropped = [c for c in df.columns if c not in set(out.columns)]
    if dropped:
        df.drop(columns=dropped, inplace=True)
    for column in out.columns:
        df[column] = out[column].to_numpy()
    return df


def _delegate(tool: str, data: pd.DataFrame, params: dict,
              fitted_path: str | os.PathLike | None = None,
              uses_fitted: bool = False,
              test: pd.DataFrame | None = None):
    if not isinstance(data, pd.DataFrame):
        raise TypeError(f"{tool} expects a pandas DataFrame, got "
                        f"{type(data).__name__}")
    workdir = Path(tempfile.mkdtemp(prefix=f"{tool}_", dir=_tmp_root()))
    in_path = workdir / "in.csv"
    out_path = workdir / "out.csv"
    data.to_csv(in_path, index=False)
    command = _cli_command() + [
        "tools_apply", "--tool", tool,
        "--params", json.dumps(params),
        "--in", str(in_path), "--out", str(out_path),
    ]
    if uses_fitted:
        sidecar = Path(fitted_path) if fitted_path else _fitted_sidecar(tool, params)
        command += ["--fitted", str(sidecar)]
    report_path = None
    if test is not None:
        test_path = workdir / "in2.csv"
        test.to_csv(test_path, index=False)
        command += ["--in2", str(test_path)]
    if tool == "train_and_validation_and_select_the_best_model":
        report_path = workdir / "model_report.json"
        command += ["--report", str(report_path)]

    try:
        completed = subprocess.run(command, capture_output=True, text=True)
    except FileNotFoundError as exc:
        raise ShimTransportError(f"failed to start {command[0]!r}") from exc
    if completed.returncode != 0:
        _raise_native_error(completed.stderr)
    out = pd.read_csv(out_path)
    last_call.update({
        "tool": tool, "input": in_path, "output": out_path,
        "report": report_path, "workdir": workdir,
    })
    return out, report_path


def _table_tool(tool: str, data: pd.DataFrame, params: dict,
                fitted_path=None, uses_fitted: bool = False) -> pd.DataFrame:
    out, _ = _delegate(tool, data, params, fitted_path=fitted_path,
                       uses_fitted=uses_fitted)
    return _sync_in_place(data, out)


# --- data cleaning -------------------------------------------------------------

def fill_missing_values(data, columns, method="auto", fill_value=None):
    params = {"columns": columns, "method": method}
    if fill_value is not None:
        params["fill_value"] = fill_value
    return _table_tool("fill_missing_values", data, params)


def remove_columns_with_missing_data(data, columns=None, thresh=0.5):
    params = {"thresh": thresh}
    if columns is not None:
        params["columns"] = columns
    return _table_tool("remove_columns_with_missing_data", data, params)


def detect_and_handle_outliers_zscore(data, columns, threshold=3.0, method="clip"):
    return _table_tool(
        "detect_and_handle_outliers_zscore", data,
        {"columns": columns, "threshold": threshold, "method": method})


def detect_and_handle_outliers_iqr(data, columns, factor=1.5, method="clip"):
    return _table_tool(
        "detect_and_handle_outliers_iqr", data,
        {"columns": columns, "factor": factor, "method": method})


def remove_duplicates(data, columns=None, keep="first"):
    params = {"keep": keep}
    if columns is not None:
        params["columns"] = columns
    return _table_tool("remove_duplicates", data, params)


def convert_data_types(data, columns, target_type, on_error="raise"):
    return _table_tool(
        "convert_data_types", data,
        {"columns": columns, "target_type": target_type, "on_error": on_error})


def format_datetime(data, columns, format):
    return _table_tool("format_datetime", data,
                       {"columns": columns, "format": format})


# --- feature engineering ---------------------------------------------------------

def one_hot_encode(data, columns, fitted_path=None):
    return _table_tool("one_hot_encode", data, {"columns": columns},
                       fitted_path=fitted_path, uses_fitted=True)


def label_encode(data, columns, fitted_path=None):
    return _table_tool("label_encode", data, {"columns": columns},
                       fitted_path=fitted_path, uses_fitted=True)


def frequency_encode(data, columns, fitted_path=None):
    return _table_tool("frequency_encode", data, {"columns": columns},
                       fitted_path=fitted_path, uses_fitted=True)


def target_encode(data, columns, target, m=0.0, fitted_path=None):
    return _table_tool("target_encode", data,
                       {"columns": columns, "target": target, "m": m},
                       fitted_path=fitted_path, uses_fitted=True)


def correlation_feature_selection(data, target, threshold):
    return _table_tool("correlation_feature_selection", data,
                       {"target": target, "threshold": threshold})


def variance_feature_selection(data, columns, threshold=0.0):
    return _table_tool("variance_feature_selection", data,
                       {"columns": columns, "threshold": threshold})


def scale_features(data, columns, method="standard", fitted_path=None):
    return _table_tool("scale_features", data,
                       {"columns": columns, "method": method},
                       fitted_path=fitted_path, uses_fitted=True)


def perform_pca(data, columns, n_components, fitted_path=None):
    return _table_tool("perform_pca", data,
                       {"columns": columns, "n_components": n_components},
                       fitted_path=fitted_path, uses_fitted=True)


def perform_rfe(data, target, columns, n_features_to_select):
    return _table_tool("perform_rfe", data,
                       {"target": target, "columns": columns,
                        "n_features_to_select": n_features_to_select})


def create_polynomial_features(data, columns, degree=2, interactions=True):
    return _table_tool("create_polynomial_features", data,
                       {"columns": columns, "degree": degree,
                        "interactions": interactions})


def create_feature_combinations(data, columns, combination_type):
    return _table_tool("create_feature_combinations", data,
                       {"columns": columns, "combination_type": combination_type})


def derive_column(data, new_name, expression):
    return _table_tool("derive_column", data,
                       {"new_name": new_name, "expression": expression})


# --- model building ----------------------------------------------------------------

def train_and_validation_and_select_the_best_model(
        data, target, task_type="classification", candidates=None, grids=None,
        cv_folds=5, metric=None, seed=0, id_column=None, feature_columns=None,
        test=None):
    """Returns (model report dict, prediction frame or None).

    The fitted model never crosses the process boundary; predictions for the
    paired `test` frame and the selection report come back instead.
    """
    params = {"target": target, "task_type": task_type, "cv_folds": cv_folds,
              "seed": seed}
    if candidates is not None:
        params["candidates"] = candidates
    if grids is not None:
        params["grids"] = grids
    if metric is not None:
        params["metric"] = metric
    if id_column is not None:
        params["id_column"] = id_column
    if feature_columns is not None:
        params["feature_columns"] = feature_columns
    out, report_path = _delegate(
        "train_and_validation_and_select_the_best_model", data, params,
        test=test)
    report = json.loads(Path(report_path).read_text(encoding="utf-8"))
    predictions = out if test is not None else None
    return report, predictions
