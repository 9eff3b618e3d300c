"""Bounded generate / execute / classify / debug / test development loop.

One loop pass: (re)generate when scheduled, execute the artifact, then either
record and debug the failure or run the phase's unit-test suite.  Three or
more similar recorded errors trigger a feasibility check that can schedule a
full regeneration with a cleared history.  The pass counter bounds every
path, including regeneration passes.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol

from .errors import ErrorClass, ErrorRecord, similar_history
from .sandbox import CodeArtifact, execute_artifact


@dataclass
class LoopOutcome:
    code: CodeArtifact | None
    execution_flag: bool
    rounds_used: int
    error_history: list[ErrorRecord] = field(default_factory=list)
    stdout: str = ""  # captured output of the last execution


@dataclass
class DebugTrace:
    located: str
    correction: str
    changed: bool


class DeveloperBackend(Protocol):
    def generate(self, regenerated: bool) -> CodeArtifact: ...

    def debug(self, code: CodeArtifact, error: ErrorRecord) -> tuple[CodeArtifact, DebugTrace]: ...

    def debug_test_failures(self, code: CodeArtifact, failures: list[str]) -> tuple[CodeArtifact, DebugTrace]: ...

    def evaluate_retry(self, history: list[ErrorRecord], threshold: int) -> bool: ...


def evaluate_retry_rule(history: list[ErrorRecord], threshold: int,
                        similarity: float = 0.8) -> bool:
    """Default feasibility rule: pairwise token-set similarity >= 0.8 over
    the last `threshold` normalized messages."""
    return similar_history(history, threshold, similarity)


_QUOTED_NAME_RE = re.compile(r"['\"]([^'\"]+)['\"]")
_PATH_IN_MESSAGE_RE = re.compile(r"(?:~|\.{1,2})?(?:/[\w.\-+~]+)+/?")


def rule_based_debug(code: CodeArtifact, error: ErrorRecord) -> tuple[CodeArtifact, DebugTrace]:
    """Deterministic repair table; a no-op repair is legal and flagged."""
    if error.error_class is ErrorClass.File:
        return _repair_file_error(code, error)
    if error.error_class is ErrorClass.Key:
        return _repair_key_error(code, error)
    if error.error_class is ErrorClass.Timeout:
        return _repair_timeout(code, error)
    return code, DebugTrace(
        located=f"{error.error_class.value} error with no applicable repair rule",
        correction="no-op; regeneration left to the retry evaluator",
        changed=False,
    )


def _repair_file_error(code: CodeArtifact, error: ErrorRecord):
    # file errors usually quote the offending path, relative or absolute
    quoted = [m for m in _QUOTED_NAME_RE.findall(error.message) if "/" in m]
    match = _PATH_IN_MESSAGE_RE.search(error.message)
    if code.kind == "script":
        if quoted:
            target = quoted[-1]
        else:
            target = match.group(0) if match else "."
        prelude = (
            "import os as _os\n"
            f"_os.makedirs(_os.path.dirname({target!r}) or '.', exist_ok=True)\n"
        )
        repaired = CodeArtifact(kind="script", body=prelude + code.body,
                                phase=code.phase)
        return repaired, DebugTrace(
            located=f"file access failure around {target!r}",
            correction="create the missing directory before any writes",
            changed=True,
        )
    return code, DebugTrace(
        located="file access failure inside a native pipeline",
        correction="no-op; pipeline inputs are declared, regeneration preferred",
        changed=False,
    )


def _repair_key_error(code: CodeArtifact, error: ErrorRecord):
    match = _QUOTED_NAME_RE.search(error.message)
    name = match.group(1) if match else None
    if code.kind == "pipeline" and name is not None:
        program = code.body
        changed = False
        kept_steps = []
        for step in program.steps:
            params = dict(step.params)
            for key in ("columns", "feature_columns", "retain"):
                value = params.get(key)
                if isinstance(value, list) and name in value:
                    params[key] = [v for v in value if v != name]
                    changed = True
            if isinstance(params.get("columns"), list) and not params["columns"]:
                changed = True
                continue  # step lost its last column; drop it entirely
            step = type(step)(tool=step.tool, params=params, inputs=step.inputs,
                              output=step.output, fit=step.fit, apply=step.apply)
            kept_steps.append(step)
        if changed:
            program = type(program)(inputs=program.inputs, outputs=program.outputs,
                                    steps=kept_steps)
            repaired = CodeArtifact(kind="pipeline", body=program, phase=code.phase)
            return repaired, DebugTrace(
                located=f"reference to unknown column {name!r}",
                correction=f"removed {name!r} from step column lists",
                changed=True,
            )
    return code, DebugTrace(
        located=f"unknown key {name!r}" if name else "unknown key",
        correction="no-op; no removable reference found",
        changed=False,
    )


def _repair_timeout(code: CodeArtifact, error: ErrorRecord):
    if code.kind == "pipeline":
        program = code.body
        changed = False
        new_steps = []
        for step in program.steps:
            params = dict(step.params)
            for key, value in list(params.items()):
                if key in ("n_estimators", "iterations", "cv_folds") and isinstance(value, int):
                    params[key] = max(1, value // 2)
                    changed = True
                if key == "grids" and isinstance(value, dict):
                    params[key] = {
                        family: {
                            hp: [max(1, v // 2) if isinstance(v, int) and hp in
                                 ("n_estimators", "iterations", "cv_folds") else v
                                 for v in values]
                            for hp, values in grid.items()
                        }
                        for family, grid in value.items()
                    }
                    changed = True
            new_steps.append(type(step)(tool=step.tool, params=params,
                                        inputs=step.inputs, output=step.output,
                                        fit=step.fit, apply=step.apply))
        if changed:
            program = type(program)(inputs=program.inputs, outputs=program.outputs,
                                    steps=new_steps)
            repaired = CodeArtifact(kind="pipeline", body=program, phase=code.phase)
            return repaired, DebugTrace(
                located="wall-clock budget exhausted",
                correction="halved iteration-count parameters",
                changed=True,
            )
    return code, DebugTrace(
        located="wall-clock budget exhausted",
        correction="no iteration-count parameters to halve; no-op",
        changed=False,
    )


def develop(
    phase_key: str,
    backend: DeveloperBackend,
    workspace: Path,
    max_debug_tries: int,
    error_threshold: int,
    timeout: float,
    suite_runner: Callable[[], tuple[bool, list[str]] | None] | None = None,
    trace: Callable[[str, dict], None] | None = None,
    interpreter_command: list[str] | None = None,
    registry=None,
) -> LoopOutcome:
    """Run the bounded development loop for one phase attempt."""
    emit = trace or (lambda event, payload: None)
    error_log = Path(workspace) / f"error_log_{phase_key}.jsonl"

    code: CodeArtifact | None = None
    retry_flag = False
    error_history: list[ErrorRecord] = []
    rounds_used = 0
    execution_flag = False
    last_stdout = ""

    round_index = 0
    while round_index < max_debug_tries:
        rounds_used = round_index + 1
        if round_index == 0 or retry_flag:
            code = backend.generate(regenerated=retry_flag)
            error_history = []
            emit("code_generated", {
                "round": rounds_used,
                "regenerated": retry_flag,
                "kind": code.kind,
                "history_len": len(error_history),
            })
            retry_flag = False

        result = execute_artifact(code, workspace, timeout,
                                  interpreter_command=interpreter_command,
                                  registry=registry)
        last_stdout = result.stdout
        emit("execution", {
            "round": rounds_used,
            "exit_ok": result.exit_ok,
            "error_class": result.error.error_class.value if result.error else None,
        })

        if not result.exit_ok:
            error_history.append(result.error)
            with error_log.open("a", encoding="utf-8") as handle:
                handle.write(json.dumps(result.error.to_json()) + "\n")
            emit("error_recorded", {
                "round": rounds_used,
                "class": result.error.error_class.value,
                "normalized": result.error.normalized,
                "history_len": len(error_history),
            })
            if len(error_history) >= error_threshold:
                retry_flag = backend.evaluate_retry(error_history, error_threshold)
                emit("evaluate_retry", {
                    "round": rounds_used,
                    "history_len": len(error_history),
                    "regenerate": retry_flag,
                })
                if retry_flag:
                    round_index += 1
                    continue
            code, debug_trace = backend.debug(code, result.error)
            emit("debug", {
                "round": rounds_used,
                "located": debug_trace.located,
                "correction": debug_trace.correction,
                "changed": debug_trace.changed,
            })
        else:
            suite = suite_runner() if suite_runner is not None else None
            if suite is None:
                execution_flag = True
                emit("loop_success", {"round": rounds_used, "suite": None})
                break
            passed, failures = suite
            emit("unit_tests", {
                "round": rounds_used,
                "passed": passed,
                "failures": failures,
            })
            if passed:
                execution_flag = True
                emit("loop_success", {"round": rounds_used, "suite": "passed"})
                break
            code, debug_trace = backend.debug_test_failures(code, failures)
            emit("debug", {
                "round": rounds_used,
                "located": debug_trace.located,
                "correction": debug_trace.correction,
                "changed": debug_trace.changed,
            })
        round_index += 1

    if not execution_flag:
        rounds_used = round_index
        emit("loop_exhausted", {"rounds_used": rounds_used})
    return LoopOutcome(
        code=code,
        execution_flag=execution_flag,
        rounds_used=rounds_used,
        error_history=error_history,
        stdout=last_stdout,
    )
