from __future__ import annotations

import shutil
import subprocess
import sys
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parents[2]
FIXTURE_WORKSPACE = REPO_ROOT / "tests" / "fixtures" / "titanic"


@pytest.fixture(autouse=True)
def isolated_tmp(tmp_path, monkeypatch):
    """Each test gets its own shim scratch space and working directory."""
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv("TOOLS_SHIM_TMP", str(tmp_path / "tmp"))
    yield tmp_path


@pytest.fixture(scope="session")
def cli_command() -> list[str]:
    binary = shutil.which("tabpilot")
    if binary:
        return [binary]
    probe = subprocess.run([sys.executable, "-c", "import tabpilot"],
                           capture_output=True)
    if probe.returncode != 0:
        pytest.skip("the native engine is not installed")
    return [sys.executable, "-m", "tabpilot.cli"]


@pytest.fixture()
def workspace(tmp_path) -> Path:
    destination = tmp_path / "workspace"
    shutil.copytree(FIXTURE_WORKSPACE, destination)
    return destination
