"""Sandboxed execution of code artifacts.

Script artifacts run as a child process of the configured interpreter with
the workspace as working directory and a wall-clock timeout; pipeline
artifacts are interpreted natively by the tool engine.  Either way the
caller gets an ExecutionResult whose error, if any, is already classified.
"""

from __future__ import annotations

import os
import subprocess
import time
from dataclasses import dataclass
from pathlib import Path

from ..registry import ToolRegistry
from .errors import ErrorRecord, ExecutionResult

SCRIPT_FILENAME = "_artifact.py"


class SandboxSpawnFailure(Exception):
    """The interpreter command itself could not be started."""


@dataclass
class CodeArtifact:
    kind: str  # script | pipeline
    body: object  # str for scripts, PipelineProgram for pipelines
    phase: str

    def __post_init__(self):
        if self.kind not in ("script", "pipeline"):
            raise ValueError(f"unknown artifact kind {self.kind!r}")
        if self.kind == "script" and not (isinstance(self.body, str) and self.body.strip()):
            raise ValueError("script artifact body must be non-empty")

    def rendered(self) -> str:
        if self.kind == "script":
            return self.body
        return self.body.dumps()


def execute_script(body: str, workspace: Path, timeout: float,
                   interpreter_command: list[str]) -> ExecutionResult:
    script_path = workspace / SCRIPT_FILENAME
    script_path.write_text(body, encoding="utf-8")
    env = dict(os.environ)
    env.setdefault("MPLBACKEND", "Agg")
    started = time.monotonic()
    try:
        completed = subprocess.run(
            [*interpreter_command, SCRIPT_FILENAME],
            cwd=str(workspace),
            capture_output=True,
            text=True,
            timeout=timeout,
            env=env,
        )
    except FileNotFoundError as exc:
        raise SandboxSpawnFailure(
            f"interpreter command not found: {interpreter_command[0]!r}"
        ) from exc
    except subprocess.TimeoutExpired as exc:
        duration = time.monotonic() - started
        stderr = (exc.stderr or b"")
        if isinstance(stderr, bytes):
            stderr = stderr.decode("utf-8", errors="replace")
        record = ErrorRecord.from_stderr(
            f"TimeoutError: execution exceeded {timeout} seconds", timed_out=True
        )
        return ExecutionResult(
            exit_ok=False, stdout="", stderr=stderr, duration=duration, error=record
        )
    duration = time.monotonic() - started
    if completed.returncode == 0:
        return ExecutionResult(
            exit_ok=True, stdout=completed.stdout, stderr=completed.stderr,
            duration=duration,
        )
    record = ErrorRecord.from_stderr(completed.stderr or
                                     f"process exited with code {completed.returncode}")
    return ExecutionResult(
        exit_ok=False, stdout=completed.stdout, stderr=completed.stderr,
        duration=duration, error=record,
    )


def execute_artifact(code: CodeArtifact, workspace: str | Path, timeout: float,
                     interpreter_command: list[str] | None = None,
                     registry: ToolRegistry | None = None) -> ExecutionResult:
    """Run one artifact against a workspace and capture the outcome."""
    workspace = Path(workspace)
    if not workspace.is_dir():
        raise FileNotFoundError(f"workspace does not exist: {workspace}")
    if code.kind == "script":
        import sys
        command = interpreter_command or [sys.executable]
        return execute_script(code.body, workspace, timeout, command)
    from ..mltools.pipeline import run_pipeline
    return run_pipeline(code.body, workspace, registry=registry)
