"""A generated-style cleaning script runs through the shim and its outputs
pass the native cleaning gate suite."""

from __future__ import annotations

import shutil
import subprocess
import sys
from pathlib import Path

import pandas as pd

SCRIPT = Path(__file__).parent / "fixtures" / "cleaning_script.py"


def test_cleaning_script_passes_the_gate_suite(workspace, cli_command,
                                               isolated_tmp):
    script_path = workspace / "generated_cleaning.py"
    shutil.copy(SCRIPT, script_path)
    completed = subprocess.run(
        [sys.executable, script_path.name],
        cwd=workspace, capture_output=True, text=True,
        env=_script_env(workspace),
    )
    assert completed.returncode == 0, completed.stderr
    assert "after handling" in completed.stdout

    cleaned = pd.read_csv(workspace / "cleaned_train.csv")
    assert cleaned.isna().sum().sum() == 0
    assert "Cabin" not in cleaned.columns
    assert cleaned["Age"].min() == 2.5
    assert cleaned["Age"].max() == 54.5
    assert (workspace / "data_cleaning/images/Age_after_outliers.png").exists()

    suite = subprocess.run(
        [*cli_command, "test", "--phase", "dc", "--workspace", str(workspace)],
        capture_output=True, text=True)
    assert suite.returncode == 0, suite.stdout
    assert "11/11 checks passed" in suite.stdout


def _script_env(workspace):
    import os
    env = dict(os.environ)
    env["TOOLS_SHIM_TMP"] = str(workspace / "tmp")
    env["MPLBACKEND"] = "Agg"
    return env
