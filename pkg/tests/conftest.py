from __future__ import annotations

import shutil
from pathlib import Path

import pytest

from tabpilot.registry import ToolRegistry
from tabpilot.tabular import DType, Table, read_csv
from tabpilot.workflow import RunConfig, run_competition

FIXTURES = Path(__file__).parent / "fixtures"
TITANIC = FIXTURES / "titanic"

RUN_SEED = 11


@pytest.fixture(scope="session")
def registry() -> ToolRegistry:
    return ToolRegistry.load()


@pytest.fixture(scope="session")
def titanic_train() -> Table:
    return read_csv(TITANIC / "train.csv")


@pytest.fixture(scope="session")
def titanic_test() -> Table:
    return read_csv(TITANIC / "test.csv")


@pytest.fixture()
def titanic_workspace(tmp_path) -> Path:
    workspace = tmp_path / "workspace"
    shutil.copytree(TITANIC, workspace)
    return workspace


@pytest.fixture(scope="session")
def completed_run(tmp_path_factory) -> Path:
    """One full deterministic run shared by every read-only assertion."""
    workspace = tmp_path_factory.mktemp("run") / "workspace"
    shutil.copytree(TITANIC, workspace)
    state = run_competition(workspace, RunConfig(seed=RUN_SEED))
    assert state.status.state == "succeeded", "fixture run must succeed"
    return workspace


def make_table(*columns) -> Table:
    """Shorthand: make_table(("a", DType.Integer, [1, 2]), ...)."""
    return Table(list(columns))


@pytest.fixture()
def small_numeric() -> Table:
    return make_table(
        ("a", DType.Float, [1.0, 2.0, 3.0, 4.0]),
        ("b", DType.Float, [2.0, 4.0, 6.0, 8.0]),
        ("y", DType.Integer, [0, 0, 1, 1]),
    )
