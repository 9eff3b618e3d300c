"""Deterministic tool pipelines: a serializable program of tool invocations.

A program declares named CSV inputs and outputs plus an ordered step list.
Each step reads one table binding (or several, for the model step), runs a
registry tool with validated parameters, and writes its result back to a
binding.  Steps that learn parameters on a training table publish them under
a fit key so the paired test-side step can replay them, which is what keeps
train and test schemas aligned.
"""

from __future__ import annotations

import json
import time
import traceback
from dataclasses import dataclass, field
from pathlib import Path

from ..devloop.errors import ErrorRecord, ExecutionResult
from ..registry import ToolRegistry
from ..tabular import DType, Table, read_csv, write_csv
from . import cleaning, features, models
from .base import FittedState, SelectionResult, ToolResult
from .expressions import derive_column


class PipelineValidationError(Exception):
    pass


@dataclass
class PipelineStep:
    tool: str
    params: dict = field(default_factory=dict)
    inputs: list[str] = field(default_factory=list)
    output: str = ""
    fit: str | None = None
    apply: str | None = None

    def to_json(self) -> dict:
        payload: dict = {
            "tool": self.tool,
            "params": self.params,
            "in": self.inputs[0] if len(self.inputs) == 1 else self.inputs,
            "out": self.output,
        }
        if self.fit:
            payload["fit"] = self.fit
        if self.apply:
            payload["apply"] = self.apply
        return payload

    @classmethod
    def from_json(cls, payload: dict) -> PipelineStep:
        raw_in = payload.get("in", [])
        inputs = [raw_in] if isinstance(raw_in, str) else list(raw_in)
        return cls(
            tool=payload["tool"],
            params=dict(payload.get("params", {})),
            inputs=inputs,
            output=payload.get("out", ""),
            fit=payload.get("fit"),
            apply=payload.get("apply"),
        )


@dataclass
class PipelineProgram:
    inputs: dict[str, str]
    outputs: dict[str, str]
    steps: list[PipelineStep] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "inputs": self.inputs,
            "outputs": self.outputs,
            "steps": [step.to_json() for step in self.steps],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)

    @classmethod
    def from_json(cls, payload: dict) -> PipelineProgram:
        return cls(
            inputs=dict(payload.get("inputs", {})),
            outputs=dict(payload.get("outputs", {})),
            steps=[PipelineStep.from_json(s) for s in payload.get("steps", [])],
        )

    @classmethod
    def loads(cls, text: str) -> PipelineProgram:
        return cls.from_json(json.loads(text))

    def validate(self, registry: ToolRegistry) -> None:
        defined = set(self.inputs)
        fitted_keys: set[str] = set()
        for i, step in enumerate(self.steps):
            where = f"step {i} ({step.tool})"
            if not registry.has_tool(step.tool):
                raise PipelineValidationError(f"{where}: unknown tool")
            if step.tool not in TOOL_WRAPPERS:
                raise PipelineValidationError(f"{where}: tool has no native implementation")
            try:
                registry.validate_params(step.tool, step.params)
            except Exception as exc:
                raise PipelineValidationError(f"{where}: {exc}") from exc
            if not step.inputs:
                raise PipelineValidationError(f"{where}: no input binding")
            for binding in step.inputs:
                if binding not in defined:
                    raise PipelineValidationError(
                        f"{where}: input binding {binding!r} not yet defined"
                    )
            if not step.output:
                raise PipelineValidationError(f"{where}: no output binding")
            if step.apply is not None:
                if step.apply not in fitted_keys:
                    raise PipelineValidationError(
                        f"{where}: apply key {step.apply!r} has no earlier fit"
                    )
            if step.fit is not None:
                fitted_keys.add(step.fit)
            defined.add(step.output)
        for binding in self.outputs:
            if binding not in defined:
                raise PipelineValidationError(
                    f"output binding {binding!r} is never produced"
                )


# --- step wrappers -----------------------------------------------------------
#
# Every wrapper takes (tables, params, fitted, context) and returns a
# ToolResult.  `tables` is the list of bound input tables in declared order.

@dataclass
class PipelineContext:
    workspace: Path
    reports: list[str] = field(default_factory=list)


def _single(tables: list[Table], tool: str) -> Table:
    if len(tables) != 1:
        raise ValueError(f"{tool} expects exactly one input binding")
    return tables[0]


def _plain(fn, tool: str, fitted_aware: bool = False):
    def wrapper(tables, params, fitted, context):
        table = _single(tables, tool)
        if fitted_aware:
            return fn(table, fitted=fitted, **params)
        return fn(table, **params)
    return wrapper


def _selection(fn, tool: str):
    def wrapper(tables, params, fitted, context):
        table = _single(tables, tool)
        retain = list(params.pop("retain", []) or [])
        result: SelectionResult = fn(table, **params)
        keep = list(result.selected)
        for extra in retain + [params.get("target")]:
            if extra and table.has_column(extra) and extra not in keep:
                keep.append(extra)
        ordered = [n for n in table.names if n in set(keep)]
        return ToolResult(table=table.select_columns(ordered), report=result.report)
    return wrapper


def _derive(tables, params, fitted, context):
    table = _single(tables, "derive_column")
    return derive_column(table, **params)


def _model_step(tables, params, fitted, context):
    if len(tables) not in (1, 2):
        raise ValueError("the model step expects one or two input bindings")
    train = tables[0]
    test = tables[1] if len(tables) == 2 else None
    params = dict(params)
    target = params.pop("target")
    id_column = params.pop("id_column", None)
    feature_columns = params.pop("feature_columns", None)
    if feature_columns is None:
        feature_columns = [
            n for n in train.names
            if n != target and n != id_column and train.is_numeric(n)
        ]
    columns = [n for n in feature_columns if n != target]
    report, fitted_model = models.train_and_validation_and_select_the_best_model(
        train.select_columns(columns + [target]), target=target, **params,
    )
    best = report.best()
    summary = (
        f"model selection: chose {report.selected} "
        f"(mean_cv_{report.metric}={best.mean_cv_score:.6f}, "
        f"params={json.dumps(best.best_params, sort_keys=True)}); "
        f"{sum(len(c.evaluations) for c in report.candidates)} grid evaluations "
        f"over {report.cv_folds} folds"
    )
    if context is not None:
        report_path = context.workspace / "model_report.json"
        report_path.write_text(
            json.dumps(report.to_json(), indent=2) + "\n", encoding="utf-8"
        )

    if test is None:
        return ToolResult(table=train, report=summary)

    predictions = fitted_model.predict_table(test)
    if fitted_model.task_type == "classification":
        out_dtype = fitted_model.label_dtype
    else:
        out_dtype = DType.Float
    columns_out: list[tuple[str, DType, list]] = []
    if id_column is not None:
        if not test.has_column(id_column):
            raise ValueError(f"id column {id_column!r} missing from the test table")
        columns_out.append((id_column, test.dtype(id_column), test.column(id_column)))
    columns_out.append((target, out_dtype, predictions))
    return ToolResult(table=Table(columns_out), report=summary)


TOOL_WRAPPERS = {
    "fill_missing_values": _plain(cleaning.fill_missing_values, "fill_missing_values"),
    "remove_columns_with_missing_data": _plain(
        cleaning.remove_columns_with_missing_data, "remove_columns_with_missing_data"),
    "detect_and_handle_outliers_zscore": _plain(
        cleaning.detect_and_handle_outliers_zscore, "detect_and_handle_outliers_zscore"),
    "detect_and_handle_outliers_iqr": _plain(
        cleaning.detect_and_handle_outliers_iqr, "detect_and_handle_outliers_iqr"),
    "remove_duplicates": _plain(cleaning.remove_duplicates, "remove_duplicates"),
    "convert_data_types": _plain(cleaning.convert_data_types, "convert_data_types"),
    "format_datetime": _plain(cleaning.format_datetime, "format_datetime"),
    "one_hot_encode": _plain(features.one_hot_encode, "one_hot_encode", fitted_aware=True),
    "label_encode": _plain(features.label_encode, "label_encode", fitted_aware=True),
    "frequency_encode": _plain(features.frequency_encode, "frequency_encode", fitted_aware=True),
    "target_encode": _plain(features.target_encode, "target_encode", fitted_aware=True),
    "correlation_feature_selection": _selection(
        features.correlation_feature_selection, "correlation_feature_selection"),
    "variance_feature_selection": _selection(
        features.variance_feature_selection, "variance_feature_selection"),
    "scale_features": _plain(features.scale_features, "scale_features", fitted_aware=True),
    "perform_pca": _plain(features.perform_pca, "perform_pca", fitted_aware=True),
    "perform_rfe": _selection(features.perform_rfe, "perform_rfe"),
    "create_polynomial_features": _plain(
        features.create_polynomial_features, "create_polynomial_features"),
    "create_feature_combinations": _plain(
        features.create_feature_combinations, "create_feature_combinations"),
    "train_and_validation_and_select_the_best_model": _model_step,
    "derive_column": _derive,
}


def run_pipeline(program: PipelineProgram, workspace: str | Path,
                 registry: ToolRegistry | None = None) -> ExecutionResult:
    """Execute a program against a workspace; failures become ErrorRecords."""
    workspace = Path(workspace)
    started = time.monotonic()
    try:
        if registry is not None:
            program.validate(registry)
        tables: dict[str, Table] = {}
        for binding, rel_path in program.inputs.items():
            tables[binding] = read_csv(workspace / rel_path)
        context = PipelineContext(workspace=workspace)
        context_fitted: dict[str, FittedState | None] = {}
        for step in program.steps:
            wrapper = TOOL_WRAPPERS[step.tool]
            bound = [tables[b] for b in step.inputs]
            fitted = context_fitted.get(step.apply) if step.apply else None
            result = wrapper(bound, dict(step.params), fitted, context)
            tables[step.output] = result.table
            context.reports.append(result.report)
            if step.fit:
                context_fitted[step.fit] = result.fitted
        for binding, rel_path in program.outputs.items():
            target_path = workspace / rel_path
            target_path.parent.mkdir(parents=True, exist_ok=True)
            write_csv(tables[binding], target_path)
        duration = time.monotonic() - started
        return ExecutionResult(
            exit_ok=True,
            stdout="\n".join(context.reports) + ("\n" if context.reports else ""),
            stderr="",
            duration=duration,
        )
    except Exception as exc:  # converted, never propagated
        duration = time.monotonic() - started
        stderr = f"{type(exc).__name__}: {exc}"
        record = ErrorRecord.from_stderr(stderr)
        return ExecutionResult(
            exit_ok=False,
            stdout="",
            stderr=stderr + "\n" + traceback.format_exc(limit=3),
            duration=duration,
            error=record,
        )
