"""Command-line entry point.

Exit codes: 0 success, 1 operational failure, 2 usage error; the `test`
subcommand exits with its failure count.
"""

from __future__ import annotations

import argparse
import json
import shutil
import sys
from pathlib import Path

from . import metrics as metrics_mod
from .agents.reader import parse_target_from_info
from .mltools.base import FittedState
from .mltools.pipeline import PipelineContext, TOOL_WRAPPERS
from .phasetests import run_suite
from .registry import ToolRegistry, UnknownTool
from .tabular import read_csv, write_csv
from .workflow import (
    CompetitionRun,
    MissingInputFile,
    Phase,
    PhaseExhausted,
    RunConfig,
    WorkflowError,
    run_competition,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tabpilot",
        description="Drive a tabular competition workspace from raw inputs "
                    "to a validated submission.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run the full six-phase workflow")
    run_p.add_argument("--workspace", required=True)
    run_p.add_argument("--config", help="JSON config file")
    run_p.add_argument("--backend", choices=["llm", "deterministic", "replay"])
    run_p.add_argument("--hitl", action="store_true")
    run_p.add_argument("--seed", type=int)
    run_p.add_argument("--trials", type=int, default=1)
    run_p.add_argument("--grade", action="store_true",
                       help="grade against a seeded holdout of train.csv")
    run_p.add_argument("--parallel", type=int, default=1, metavar="N",
                       help="run up to N trials concurrently "
                            "(disjoint workspaces)")

    phase_p = sub.add_parser("phase", help="run a single phase")
    phase_p.add_argument("--workspace", required=True)
    phase_p.add_argument("--phase", required=True,
                         choices=[p.key for p in Phase.ordered()])
    phase_p.add_argument("--config")
    phase_p.add_argument("--backend", choices=["llm", "deterministic", "replay"])
    phase_p.add_argument("--seed", type=int)

    list_p = sub.add_parser("tools_list", help="list the registered tools")
    list_p.add_argument("--format", choices=["text", "json"], default="text")

    describe_p = sub.add_parser("tools_describe", help="print one tool schema")
    describe_p.add_argument("--tool", required=True)
    describe_p.add_argument("--rendering", choices=["json", "markdown"],
                            default="markdown")

    apply_p = sub.add_parser("tools_apply", help="apply one tool to a CSV file")
    apply_p.add_argument("--tool", required=True)
    apply_p.add_argument("--params", default="{}", help="JSON parameter object")
    apply_p.add_argument("--in", dest="input", required=True)
    apply_p.add_argument("--in2", dest="input2",
                         help="second input CSV (the model tool's test table)")
    apply_p.add_argument("--out", required=True)
    apply_p.add_argument("--fitted",
                         help="fitted-state sidecar: loaded when it exists, "
                              "written after a fitting call otherwise")
    apply_p.add_argument("--report", help="path for the model report JSON")

    test_p = sub.add_parser("test", help="run a phase unit-test suite")
    test_p.add_argument("--phase", required=True, choices=["dc", "fe", "mbvp"])
    test_p.add_argument("--workspace", required=True)
    test_p.add_argument("--target")

    score_p = sub.add_parser("score", help="summarize a trials file")
    score_p.add_argument("--trials-file", required=True)
    score_p.add_argument("--format", choices=["text", "json"], default="text")

    report_p = sub.add_parser("report", help="regenerate the final report")
    report_p.add_argument("--workspace", required=True)

    return parser


class UsageError(Exception):
    pass


def _load_config(args) -> RunConfig:
    if getattr(args, "config", None):
        try:
            config = RunConfig.from_file(args.config)
        except FileNotFoundError:
            raise UsageError(f"config file not found: {args.config}")
        except (TypeError, ValueError, json.JSONDecodeError) as exc:
            raise UsageError(f"bad config file {args.config}: {exc}")
    else:
        config = RunConfig()
    if getattr(args, "backend", None):
        config.backend = args.backend
    if getattr(args, "seed", None) is not None:
        config.seed = args.seed
    if getattr(args, "hitl", False):
        config.hitl_enabled = True
    config.validate()
    return config


def _cmd_run(args) -> int:
    config = _load_config(args)
    workspace = Path(args.workspace)
    if args.trials <= 1 and not args.grade:
        state = run_competition(workspace, config)
        print(f"status: {state.status.state}"
              + (f" (failed at {state.status.failed_phase.key})"
                 if state.status.failed_phase else ""))
        return 0 if state.status.state == "succeeded" else 1

    trials_dir = workspace / "trials"
    info_target, id_column, smaller_better, metric = _grading_context(workspace)
    jobs = []
    for trial_id in range(args.trials):
        trial_workspace = trials_dir / f"trial_{trial_id}"
        if trial_workspace.exists():
            shutil.rmtree(trial_workspace)
        trial_config = _trial_config(config, config.seed + trial_id)
        metrics_mod.build_holdout_workspace(
            workspace, trial_workspace, info_target, id_column,
            seed=trial_config.seed)
        jobs.append((trial_id, trial_workspace, trial_config))

    # trials touch disjoint workspaces, so they may run concurrently
    workers = max(1, min(args.parallel, args.trials))
    if workers == 1:
        outcomes = [_run_one_trial(job, info_target) for job in jobs]
    else:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(
                lambda job: _run_one_trial(job, info_target), jobs))

    records = []
    for (trial_id, trial_workspace, _), (made, valid, note) in zip(jobs, outcomes):
        if note:
            print(f"trial {trial_id}: {note}")
        raw = None
        if valid:
            labels = trials_dir / f"trial_{trial_id}_{metrics_mod.HOLDOUT_LABEL_FILE}"
            raw = metrics_mod.grade_submission(
                trial_workspace / "submission.csv", labels,
                info_target, id_column, metric)
        records.append(metrics_mod.TrialRecord(
            trial_id=trial_id, made=made, valid=valid, raw_score=raw,
            smaller_better=smaller_better))
        score_text = "n/a" if raw is None else f"{raw:.4f}"
        print(f"trial {trial_id}: made={made} valid={valid} score={score_text}")
    metrics_mod.write_trials(records, workspace / "trials.jsonl")
    summary = metrics_mod.summarize_trials(records)
    _print_summary(summary, "text")
    return 0


def _run_one_trial(job, target) -> tuple[bool, bool, str]:
    trial_id, trial_workspace, trial_config = job
    try:
        run_competition(trial_workspace, trial_config)
        made = (trial_workspace / "submission.csv").exists()
        valid = made and run_suite("mbvp", trial_workspace, target=target).passed
        return made, valid, ""
    except WorkflowError as exc:
        return False, False, str(exc)


def _trial_config(config: RunConfig, seed: int) -> RunConfig:
    import copy
    trial = copy.deepcopy(config)
    trial.seed = seed
    return trial


def _grading_context(workspace: Path):
    info_path = workspace / "competition_info.txt"
    target = None
    if info_path.exists():
        target = parse_target_from_info(info_path.read_text(encoding="utf-8"))
    train = read_csv(workspace / "train.csv")
    test = read_csv(workspace / "test.csv")
    if target is None:
        extras = [c for c in train.names if c not in set(test.names)]
        if len(extras) != 1:
            raise WorkflowError("cannot infer the target for grading; "
                                "run the full workflow first")
        target = extras[0]
    id_candidates = [c for c in train.names
                     if "id" in c.lower()
                     and len(set(train.column(c))) == train.n_rows]
    id_column = id_candidates[0] if id_candidates else None
    overview = (workspace / "overview.txt")
    smaller_better = False
    metric = "accuracy"
    if overview.exists():
        from .agents.reader import sniff_metric
        name, smaller = sniff_metric(overview.read_text(encoding="utf-8"))
        smaller_better = smaller
        metric = "rmse" if smaller else "accuracy"
    return target, id_column, smaller_better, metric


def _resume_state(run: CompetitionRun) -> None:
    """Mark phases passed from the artifacts already in the workspace."""
    from .workflow import PhaseRecord
    workspace = run.workspace
    artifact_gates = {
        Phase.UnderstandBackground: ["competition_info.txt"],
        Phase.PreliminaryEDA: [],
        Phase.DataCleaning: ["cleaned_train.csv", "cleaned_test.csv"],
        Phase.InDepthEDA: [],
        Phase.FeatureEngineering: ["processed_train.csv", "processed_test.csv"],
    }
    info_path = workspace / "competition_info.txt"
    if info_path.exists():
        overview = (workspace / "overview.txt").read_text(encoding="utf-8")
        from .agents.reader import reader_execute
        run.state.info = reader_execute(
            overview, read_csv(workspace / "train.csv"),
            read_csv(workspace / "test.csv"))
    for phase, files in artifact_gates.items():
        if all((workspace / f).exists() for f in files):
            run.state.history.append(PhaseRecord(phase=phase, passed=True,
                                                 iterations_used=0))
        else:
            break


def _cmd_phase(args) -> int:
    config = _load_config(args)
    run = CompetitionRun(args.workspace, config)
    phase = Phase.from_key(args.phase)
    _resume_state(run)
    try:
        outcome = run.execute_phase(phase)
    except (PhaseExhausted, WorkflowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"phase {phase.key}: passed={outcome.passed} "
          f"iterations={outcome.iterations_used}")
    return 0


def _cmd_tools_list(args) -> int:
    registry = ToolRegistry.load()
    if args.format == "json":
        payload = [
            {"name": spec.name, "phase": spec.phase,
             "description": spec.description}
            for spec in registry.specs()
        ]
        print(json.dumps(payload, indent=2))
        return 0
    for spec in registry.specs():
        print(f"{spec.name} [{spec.phase}]: {spec.description}")
    return 0


def _cmd_tools_describe(args) -> int:
    registry = ToolRegistry.load()
    try:
        print(registry.get_schema(args.tool, rendering=args.rendering))
    except UnknownTool:
        print(f"error: unknown tool {args.tool!r}", file=sys.stderr)
        return 1
    return 0


def _cmd_tools_apply(args) -> int:
    registry = ToolRegistry.load()
    if not registry.has_tool(args.tool):
        print(f"error: unknown tool {args.tool!r}", file=sys.stderr)
        return 1
    try:
        params = json.loads(args.params)
    except json.JSONDecodeError as exc:
        print(f"error: --params is not valid JSON: {exc}", file=sys.stderr)
        return 2
    try:
        registry.validate_params(args.tool, params)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    out_path = Path(args.out)
    fitted = None
    fitted_path = Path(args.fitted) if args.fitted else None
    fitting = False
    if fitted_path is not None and fitted_path.exists():
        fitted = FittedState.from_json(
            json.loads(fitted_path.read_text(encoding="utf-8")))
    elif fitted_path is not None:
        fitting = True

    out_dir = out_path.parent if str(out_path.parent) else Path(".")
    try:
        tables = [read_csv(args.input)]
        if args.input2:
            tables.append(read_csv(args.input2))
        out_dir.mkdir(parents=True, exist_ok=True)
        context = PipelineContext(workspace=out_dir)
        wrapper = TOOL_WRAPPERS[args.tool]
        result = wrapper(tables, dict(params), fitted, context)
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1

    write_csv(result.table, out_path)
    print(result.report)
    if args.tool == "train_and_validation_and_select_the_best_model" and args.report:
        default_report = out_dir / "model_report.json"
        report_target = Path(args.report)
        if default_report.exists() and report_target != default_report:
            report_target.parent.mkdir(parents=True, exist_ok=True)
            shutil.move(str(default_report), report_target)
    if fitting and result.fitted is not None:
        fitted_path.parent.mkdir(parents=True, exist_ok=True)
        fitted_path.write_text(
            json.dumps(result.fitted.to_json(), indent=2), encoding="utf-8")
    return 0


def _cmd_test(args) -> int:
    result = run_suite(args.phase, args.workspace, target=args.target)
    for line in result.summary_lines():
        print(line)
    failures = len(result.failures())
    print(f"{len(result.results) - failures}/{len(result.results)} checks passed")
    return failures


def _print_summary(summary, fmt: str) -> None:
    if fmt == "json":
        print(json.dumps(summary.to_json(), indent=2))
        return
    print(f"{'MS':>8} {'VS':>8} {'CS':>8} {'ANPS':>8} {'scored':>8}")
    print(f"{summary.MS:8.3f} {summary.VS:8.3f} {summary.CS:8.3f} "
          f"{summary.ANPS:8.3f} {summary.scored_trials:8d}")


def _cmd_score(args) -> int:
    records = metrics_mod.read_trials(args.trials_file)
    if not records:
        print("error: trials file is empty", file=sys.stderr)
        return 1
    _print_summary(metrics_mod.summarize_trials(records), args.format)
    return 0


def _cmd_report(args) -> int:
    from .agents.base import PhaseReport
    from .agents.summarizer import REPORT_SECTIONS, final_report

    workspace = Path(args.workspace)
    reports: dict[str, PhaseReport] = {}
    for phase_key, _ in REPORT_SECTIONS:
        path = workspace / f"report_{phase_key}.md"
        if path.exists():
            parsed = _parse_phase_report(phase_key, path.read_text(encoding="utf-8"))
            if parsed is not None:
                reports[phase_key] = parsed
    content = final_report(reports, best_model_line=_best_model(workspace))
    (workspace / "research_report.md").write_text(content, encoding="utf-8")
    print(f"research_report.md regenerated with {len(reports)} phase section(s)")
    return 0


def _best_model(workspace: Path) -> str:
    report_path = workspace / "model_report.json"
    if not report_path.exists():
        return ""
    payload = json.loads(report_path.read_text(encoding="utf-8"))
    for candidate in payload.get("candidates", []):
        if candidate.get("family") == payload.get("selected"):
            return (f"The best model was {payload['selected']} with a validation "
                    f"{payload.get('metric', 'score')} of "
                    f"{candidate.get('mean_cv_score'):.4f}.")
    return ""


def _parse_phase_report(phase_key, text):
    import re

    from .agents.base import FIXED_QUESTION_2, PhaseReport
    pattern = re.compile(r"Question (\d)\n(.*?)\nAnswer \1\n(.*?)(?=\nQuestion \d\n|\n## |\Z)",
                         re.DOTALL)
    questions, answers = [], []
    for match in pattern.finditer(text):
        questions.append(match.group(2).strip())
        answers.append(match.group(3).strip())
    if len(questions) != 6:
        return None
    questions[1] = FIXED_QUESTION_2
    return PhaseReport(phase_key=phase_key, questions=questions, answers=answers)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    handlers = {
        "run": _cmd_run,
        "phase": _cmd_phase,
        "tools_list": _cmd_tools_list,
        "tools_describe": _cmd_tools_describe,
        "tools_apply": _cmd_tools_apply,
        "test": _cmd_test,
        "score": _cmd_score,
        "report": _cmd_report,
    }
    try:
        return handlers[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except MissingInputFile as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except WorkflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
