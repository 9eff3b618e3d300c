"""Every exported tool must reproduce the native CLI's output bytewise."""

from __future__ import annotations

import json
import subprocess
from pathlib import Path

import pandas as pd
import pytest

from tools import ml_tools

# (tool, params) applied to the fixture training table
TOOL_CALLS = [
    ("fill_missing_values", {"columns": ["Age"], "method": "median"}),
    ("remove_columns_with_missing_data", {"thresh": 0.5}),
    ("detect_and_handle_outliers_zscore",
     {"columns": ["Fare"], "threshold": 3.0, "method": "clip"}),
    ("detect_and_handle_outliers_iqr",
     {"columns": ["Age", "Fare"], "factor": 1.5, "method": "clip"}),
    ("remove_duplicates", {"keep": "first"}),
    ("convert_data_types", {"columns": ["Survived"], "target_type": "str"}),
    ("one_hot_encode", {"columns": ["Embarked"]}),
    ("label_encode", {"columns": ["Sex"]}),
    ("frequency_encode", {"columns": ["Sex"]}),
    ("target_encode", {"columns": ["Sex"], "target": "Survived"}),
    ("correlation_feature_selection", {"target": "Survived", "threshold": 0.05}),
    ("variance_feature_selection", {"columns": ["SibSp", "Parch"]}),
    ("scale_features", {"columns": ["Fare"], "method": "standard"}),
    ("perform_pca", {"columns": ["SibSp", "Parch"], "n_components": 2}),
    ("perform_rfe", {"target": "Survived",
                     "columns": ["SibSp", "Parch", "Fare"],
                     "n_features_to_select": 2}),
    ("create_polynomial_features", {"columns": ["SibSp", "Parch"], "degree": 2}),
    ("create_feature_combinations",
     {"columns": ["Pclass", "Sex"], "combination_type": "concat"}),
    ("derive_column", {"new_name": "FamilySize",
                       "expression": "SibSp + Parch + 1"}),
]


def _native_apply(cli_command, tool, params, in_path, out_path, extra=()):
    completed = subprocess.run(
        [*cli_command, "tools_apply", "--tool", tool,
         "--params", json.dumps(params),
         "--in", str(in_path), "--out", str(out_path), *extra],
        capture_output=True, text=True)
    assert completed.returncode == 0, completed.stderr
    return out_path


@pytest.mark.parametrize("tool,params", TOOL_CALLS,
                         ids=[tool for tool, _ in TOOL_CALLS])
def test_shim_output_matches_native_bytewise(tool, params, workspace,
                                             cli_command, tmp_path):
    source = workspace / "train.csv"
    native_out = tmp_path / "native.csv"
    _native_apply(cli_command, tool, params, source, native_out)

    frame = pd.read_csv(source)
    getattr(ml_tools, tool)(frame, **params)
    shim_out = Path(ml_tools.last_call["output"])
    assert shim_out.read_bytes() == native_out.read_bytes()


def test_format_datetime_equivalence(cli_command, tmp_path):
    source = tmp_path / "dates.csv"
    source.write_text("d,x\n2024-03-07,1\n2023-12-31,2\n,3\n", encoding="utf-8")
    params = {"columns": ["d"], "format": "YYYY/MM/DD"}
    native_out = tmp_path / "native.csv"
    _native_apply(cli_command, "format_datetime", params, source, native_out)
    frame = pd.read_csv(source)
    ml_tools.format_datetime(frame, **params)
    assert Path(ml_tools.last_call["output"]).read_bytes() == \
        native_out.read_bytes()


def test_model_tool_equivalence_and_report(workspace, cli_command, tmp_path):
    params = {"target": "Survived", "task_type": "classification",
              "candidates": ["decision_tree"],
              "grids": {"decision_tree": {"max_depth": [4]}},
              "cv_folds": 3, "seed": 2, "id_column": "PassengerId",
              "feature_columns": ["Pclass", "SibSp", "Parch", "Fare"]}
    # cleaning first so features are missing-free on both routes
    train = pd.read_csv(workspace / "train.csv")
    test = pd.read_csv(workspace / "test.csv")
    train_path = tmp_path / "train_clean.csv"
    test_path = tmp_path / "test_clean.csv"
    for frame, path in ((train, train_path), (test, test_path)):
        ml_tools.fill_missing_values(frame, columns=["Age", "Fare"],
                                     method="median")
        frame.to_csv(path, index=False)

    native_out = tmp_path / "native_predictions.csv"
    _native_apply(cli_command, "train_and_validation_and_select_the_best_model",
                  params, train_path, native_out,
                  extra=("--in2", str(test_path),
                         "--report", str(tmp_path / "native_report.json")))

    report, predictions = ml_tools.train_and_validation_and_select_the_best_model(
        pd.read_csv(train_path), test=pd.read_csv(test_path), **params)
    shim_out = Path(ml_tools.last_call["output"])
    assert shim_out.read_bytes() == native_out.read_bytes()
    assert report["selected"] == "decision_tree"
    assert len(predictions) == 418
    native_report = json.loads((tmp_path / "native_report.json").read_text())
    assert report == native_report


class TestStarImportSurface:
    def test_exactly_the_twenty_documented_names(self):
        exported = set(ml_tools.__all__)
        assert len(exported) == 20
        assert "derive_column" in exported
        namespace: dict = {}
        exec("from tools.ml_tools import *", namespace)
        public = {name for name in namespace if not name.startswith("_")}
        assert public == exported

    def test_every_export_is_callable(self):
        for name in ml_tools.__all__:
            assert callable(getattr(ml_tools, name))


class TestInPlaceSemantics:
    def test_loop_rebinding_pattern_updates_originals(self, workspace):
        train = pd.read_csv(workspace / "train.csv")
        test = pd.read_csv(workspace / "test.csv")
        for frame in [train, test]:
            frame = ml_tools.fill_missing_values(frame, columns=["Age", "Fare"],
                                                 method="median")
            frame = ml_tools.remove_columns_with_missing_data(frame,
                                                              columns=["Cabin"])
        # the originals were healed despite the loop-variable rebinding
        assert train["Age"].isna().sum() == 0
        assert test["Age"].isna().sum() == 0
        assert "Cabin" not in train.columns
        assert "Cabin" not in test.columns

    def test_row_dropping_call_returns_fresh_frame(self, tmp_path):
        frame = pd.DataFrame({"k": [1, 1, 2], "v": ["a", "a", "b"]})
        result = ml_tools.remove_duplicates(frame)
        assert len(result) == 2
        assert len(frame) == 3  # caller's frame untouched when rows drop


class TestFittedPairing:
    def test_same_keywords_pair_train_and_test_calls(self, workspace):
        train = pd.read_csv(workspace / "train.csv")
        test = pd.read_csv(workspace / "test.csv")
        ml_tools.one_hot_encode(train, columns=["Embarked"])
        ml_tools.one_hot_encode(test, columns=["Embarked"])
        train_cols = [c for c in train.columns if c.startswith("Embarked_")]
        test_cols = [c for c in test.columns if c.startswith("Embarked_")]
        assert train_cols == test_cols == ["Embarked_C", "Embarked_Q", "Embarked_S"]

    def test_explicit_sidecar_path(self, workspace, tmp_path):
        sidecar = tmp_path / "scale.json"
        train = pd.read_csv(workspace / "train.csv")
        ml_tools.scale_features(train, columns=["Fare"], method="minmax",
                                fitted_path=sidecar)
        assert sidecar.exists()
        test = pd.read_csv(workspace / "test.csv")
        ml_tools.scale_features(test, columns=["Fare"], method="minmax",
                                fitted_path=sidecar)
        assert test["Fare"].max() <= 2.0  # train statistics were reused


class TestErrorMapping:
    def test_unknown_column_raises_key_error(self, workspace):
        frame = pd.read_csv(workspace / "train.csv")
        with pytest.raises(KeyError):
            ml_tools.fill_missing_values(frame, columns=["Ghost"])

    def test_mean_on_text_raises_value_error(self, workspace):
        frame = pd.read_csv(workspace / "train.csv")
        with pytest.raises(ValueError):
            ml_tools.fill_missing_values(frame, columns=["Name"], method="mean")

    def test_unknown_keyword_fails_before_any_spawn(self, workspace):
        frame = pd.read_csv(workspace / "train.csv")
        ml_tools.last_call.clear()
        with pytest.raises(TypeError):
            ml_tools.fill_missing_values(frame, columns=["Age"], metod="median")
        assert ml_tools.last_call == {}

    def test_missing_binary_raises_transport_error(self, workspace, monkeypatch):
        frame = pd.read_csv(workspace / "train.csv")
        monkeypatch.setenv("TABPILOT_CLI", "/nonexistent/binary")
        with pytest.raises(ml_tools.ShimTransportError):
            ml_tools.fill_missing_values(frame, columns=["Age"])
