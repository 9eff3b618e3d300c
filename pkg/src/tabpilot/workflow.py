"""Six-phase competition workflow: sequencing, gates, retries, tracing.

Phases advance strictly in order.  Every phase attempt runs in a fresh
staging directory seeded with the workspace's current files; only a passing
attempt promotes its outputs back, so a failed iteration leaves no partial
artifacts behind.  All events land in run_trace.jsonl as sequence-numbered
records without timestamps, which keeps reruns byte-comparable.
"""

from __future__ import annotations

import json
import shutil
import sys
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .agents import developer as developer_agents
from .agents import planner as planner_agents
from .agents import reviewer as reviewer_agents
from .agents import summarizer as summarizer_agents
from .agents.base import CompetitionInfo, PhaseReport, PlanDoc
from .agents.reader import reader_execute
from .devloop.loop import LoopOutcome, develop
from .devloop.sandbox import SCRIPT_FILENAME
from .llmclient import ChatRequest, LlmClient, LlmConfig, Transcript
from .phasetests import SuiteConfig, run_suite
from .registry import ToolRegistry
from .tabular import Table, read_csv

REQUIRED_INPUTS = ("overview.txt", "train.csv", "test.csv", "sample_submission.csv")
IMAGE_DIRS = ("pre_eda/images", "data_cleaning/images", "deep_eda/images")


class WorkflowError(Exception):
    pass


class MissingInputFile(WorkflowError):
    def __init__(self, filename: str):
        self.filename = filename
        super().__init__(f"workspace is missing the required input {filename!r}")


class BackendUnavailable(WorkflowError):
    pass


class PhaseExhausted(WorkflowError):
    def __init__(self, phase: "Phase", iterations: int):
        self.phase = phase
        self.iterations = iterations
        super().__init__(
            f"phase {phase.key} failed after {iterations} iteration(s)"
        )


class PhaseOrderError(WorkflowError):
    pass


class Phase(Enum):
    UnderstandBackground = ("understand_background", 1)
    PreliminaryEDA = ("pre_eda", 2)
    DataCleaning = ("data_cleaning", 3)
    InDepthEDA = ("deep_eda", 4)
    FeatureEngineering = ("feature_engineering", 5)
    ModelBuildValidatePredict = ("model_build_validate_predict", 6)

    @property
    def key(self) -> str:
        return self.value[0]

    @property
    def ordinal(self) -> int:
        return self.value[1]

    @classmethod
    def ordered(cls) -> list["Phase"]:
        return sorted(cls, key=lambda p: p.ordinal)

    @classmethod
    def from_key(cls, key: str) -> "Phase":
        for phase in cls:
            if phase.key == key:
                return phase
        raise ValueError(f"unknown phase {key!r}")


PHASE_SUITES = {
    Phase.DataCleaning: "dc",
    Phase.FeatureEngineering: "fe",
    Phase.ModelBuildValidatePredict: "mbvp",
}

PHASE_READS = {
    Phase.UnderstandBackground: ["overview.txt", "train.csv", "test.csv"],
    Phase.PreliminaryEDA: ["train.csv", "test.csv"],
    Phase.DataCleaning: ["train.csv", "test.csv"],
    Phase.InDepthEDA: ["cleaned_train.csv"],
    Phase.FeatureEngineering: ["cleaned_train.csv", "cleaned_test.csv"],
    Phase.ModelBuildValidatePredict: [
        "processed_train.csv", "processed_test.csv", "sample_submission.csv"],
}

PHASE_RETRIEVAL_QUERIES = {
    Phase.DataCleaning: "fill missing values, drop sparse columns, clip outliers, "
                        "remove duplicate rows",
    Phase.FeatureEngineering: "encode categorical features, derive and scale "
                              "numeric features",
    Phase.ModelBuildValidatePredict: "train validate select the best model and predict",
}


@dataclass
class RunConfig:
    max_phase_iterations: int = 3
    max_debug_tries: int = 5
    error_threshold: int = 3
    hitl_enabled: bool = False
    backend: str = "deterministic"  # llm | deterministic | replay
    seed: int = 0
    timeout_seconds: float = 600.0
    interpreter_command: list[str] | None = None
    user_rules_path: str | None = None
    transcript_path: str | None = None
    llm: LlmConfig = field(default_factory=LlmConfig)
    suite: SuiteConfig = field(default_factory=SuiteConfig)

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        for name in ("max_phase_iterations", "max_debug_tries", "error_threshold"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.error_threshold > self.max_debug_tries:
            raise ValueError("error_threshold cannot exceed max_debug_tries")
        if self.backend not in ("llm", "deterministic", "replay"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.timeout_seconds <= 0:
            raise ValueError("timeout_seconds must be positive")

    @classmethod
    def from_json(cls, payload: dict) -> "RunConfig":
        llm_payload = payload.pop("llm", {})
        suite_payload = payload.pop("suite", {})
        config = cls(**payload)
        config.llm = LlmConfig(**llm_payload)
        config.suite = SuiteConfig(**suite_payload)
        return config

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass
class PhaseRecord:
    phase: Phase
    plan: PlanDoc | None = None
    code_text: str | None = None
    stdout: str = ""
    review: dict | None = None
    report: PhaseReport | None = None
    iterations_used: int = 0
    passed: bool = False
    rounds_used: int = 0


@dataclass
class HistoryContext:
    records: list[PhaseRecord] = field(default_factory=list)

    def append(self, record: PhaseRecord) -> None:
        self.records.append(record)

    def for_phase(self, phase: Phase) -> PhaseRecord | None:
        for record in reversed(self.records):
            if record.phase is phase:
                return record
        return None

    def summary_text(self) -> str:
        lines = []
        for record in self.records:
            status = "passed" if record.passed else "failed"
            lines.append(f"- {record.phase.key}: {status} "
                         f"({record.iterations_used} iteration(s))")
        return "\n".join(lines) if lines else "no phases completed yet"


@dataclass
class RunStatus:
    state: str  # running | succeeded | failed
    failed_phase: Phase | None = None

    @classmethod
    def running(cls) -> "RunStatus":
        return cls("running")

    @classmethod
    def succeeded(cls) -> "RunStatus":
        return cls("succeeded")

    @classmethod
    def failed(cls, phase: Phase) -> "RunStatus":
        return cls("failed", failed_phase=phase)


@dataclass
class CompetitionState:
    workspace: Path
    current_phase: Phase = Phase.UnderstandBackground
    phase_iteration: int = 1
    history: HistoryContext = field(default_factory=HistoryContext)
    status: RunStatus = field(default_factory=RunStatus.running)
    info: CompetitionInfo | None = None


@dataclass
class PhaseOutcome:
    passed: bool
    iterations_used: int


class TraceWriter:
    """Sequence-numbered JSONL event log; no wall-clock fields."""

    def __init__(self, path: Path):
        self.path = path
        self.seq = 0
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("", encoding="utf-8")

    def event(self, event_type: str, **payload) -> None:
        self.seq += 1
        record = {"seq": self.seq, "event": event_type}
        record.update(payload)
        with self.path.open("a", encoding="utf-8") as handle:
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")


def read_trace(path: str | Path) -> list[dict]:
    records = []
    with Path(path).open("r", encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                records.append(json.loads(line))
    return records


# --- human-in-the-loop plan gate -----------------------------------------------

@dataclass
class HitlDecision:
    action: str  # approve | edit | regenerate
    text: str = ""


def hitl_review(plan: PlanDoc, input_fn=input, print_fn=print,
                interactive: bool | None = None) -> HitlDecision:
    """Interactive plan gate; non-interactive sessions approve with a warning."""
    if interactive is None:
        interactive = sys.stdin.isatty()
    if not interactive:
        print_fn("warning: plan review requested without an interactive "
                 "terminal; approving the plan unchanged")
        return HitlDecision("approve")
    print_fn("---- plan under review ----")
    print_fn(plan.raw_text)
    print_fn("---------------------------")
    while True:
        answer = input_fn("[a]pprove / [e]dit / [r]egenerate? ").strip().lower()
        if answer in ("a", "approve", ""):
            return HitlDecision("approve")
        if answer in ("e", "edit"):
            print_fn("enter the replacement plan; finish with a single '.' line")
            lines = []
            while True:
                line = input_fn("")
                if line.strip() == ".":
                    break
                lines.append(line)
            return HitlDecision("edit", text="\n".join(lines))
        if answer in ("r", "regenerate"):
            note = input_fn("note for the planner: ")
            return HitlDecision("regenerate", text=note)
        print_fn("please answer a, e or r")


# --- the runner -----------------------------------------------------------------

ACTIVE_AGENTS = ["planner", "developer"]


class CompetitionRun:
    def __init__(self, workspace: str | Path, config: RunConfig,
                 registry: ToolRegistry | None = None,
                 hitl_io: dict | None = None):
        self.workspace = Path(workspace)
        self.config = config
        self.registry = registry or ToolRegistry.load()
        self.trace = TraceWriter(self.workspace / "run_trace.jsonl")
        self.state = CompetitionState(workspace=self.workspace)
        self.hitl_io = hitl_io or {}
        self._client: LlmClient | None = None
        self.user_rules = ""
        if config.user_rules_path:
            rules_path = Path(config.user_rules_path)
            if rules_path.exists():
                self.user_rules = rules_path.read_text(encoding="utf-8")

    # -- backend plumbing --

    def _ensure_client(self) -> LlmClient:
        if self._client is not None:
            return self._client
        config = self.config
        if config.backend == "replay":
            if not config.transcript_path or not Path(config.transcript_path).exists():
                raise BackendUnavailable(
                    "replay backend needs an existing transcript file")
            transcript = Transcript.load(config.transcript_path)
            self._client = LlmClient(config.llm, mode="replay", transcript=transcript)
        else:
            if not config.llm.endpoint_url:
                raise BackendUnavailable(
                    "llm backend configured without an endpoint_url")
            mode = "record" if config.transcript_path else "live"
            transcript = (Transcript(path=Path(config.transcript_path))
                          if config.transcript_path else None)
            self._client = LlmClient(config.llm, mode=mode, transcript=transcript)
        return self._client

    def _complete_fn(self, tier: str):
        client = self._ensure_client()
        model = self.config.llm.model_for_tier(tier)

        def complete(system: str, user: str) -> str:
            request = ChatRequest(
                messages=[{"role": "system", "content": system},
                          {"role": "user", "content": user}],
                model=model,
                temperature=self.config.llm.temperature,
            )
            return client.complete(request)

        return complete

    # -- run entry points --

    def run(self) -> CompetitionState:
        for filename in REQUIRED_INPUTS:
            if not (self.workspace / filename).exists():
                raise MissingInputFile(filename)
        if self.config.backend in ("llm", "replay"):
            self._ensure_client()  # fail fast when unreachable
        for directory in IMAGE_DIRS:
            (self.workspace / directory).mkdir(parents=True, exist_ok=True)
        self.trace.event("run_start", backend=self.config.backend,
                         seed=self.config.seed)
        try:
            for phase in Phase.ordered():
                try:
                    self.execute_phase(phase)
                except PhaseExhausted as exc:
                    self.state.status = RunStatus.failed(phase)
                    self.trace.event("run_end", status="failed", phase=phase.key,
                                     iterations=exc.iterations)
                    self._write_final_report()
                    return self.state
            self.state.status = RunStatus.succeeded()
            self.trace.event("run_end", status="succeeded")
            self._write_final_report()
            return self.state
        finally:
            shutil.rmtree(self._staging_root(), ignore_errors=True)

    def execute_phase(self, phase: Phase) -> PhaseOutcome:
        state = self.state
        for earlier in Phase.ordered():
            if earlier.ordinal >= phase.ordinal:
                break
            record = state.history.for_phase(earlier)
            if record is None or not record.passed:
                raise PhaseOrderError(
                    f"phase {phase.key} requires {earlier.key} to have passed")
        state.current_phase = phase
        outcome: PhaseOutcome | None = None
        for iteration in range(1, self.config.max_phase_iterations + 1):
            state.phase_iteration = iteration
            self.trace.event("phase_start", phase=phase.key, iteration=iteration)
            record = self._attempt_phase(phase, iteration)
            state.history.append(record)
            self._write_phase_report(phase, record)
            self.trace.event("phase_result", phase=phase.key,
                             iteration=iteration, passed=record.passed)
            if record.passed:
                outcome = PhaseOutcome(passed=True, iterations_used=iteration)
                break
        if outcome is None:
            raise PhaseExhausted(phase, self.config.max_phase_iterations)
        return outcome

    # -- phase internals --

    def _attempt_phase(self, phase: Phase, iteration: int) -> PhaseRecord:
        if phase is Phase.UnderstandBackground:
            return self._attempt_reader_phase(phase, iteration)
        return self._attempt_agents_phase(phase, iteration)

    def _attempt_reader_phase(self, phase: Phase, iteration: int) -> PhaseRecord:
        record = PhaseRecord(phase=phase, iterations_used=iteration)
        try:
            overview = (self.workspace / "overview.txt").read_text(encoding="utf-8")
            train = read_csv(self.workspace / "train.csv")
            test = read_csv(self.workspace / "test.csv")
            if self.config.backend in ("llm", "replay"):
                from .agents.reader import reader_with_model
                info = reader_with_model(overview, train, test,
                                         self._complete_fn("light"))
            else:
                info = reader_execute(overview, train, test)
        except Exception as exc:
            self.trace.event("reader", phase=phase.key, ok=False, error=str(exc))
            record.stdout = f"reader failed: {exc}"
            return record
        self.state.info = info
        info_path = self.workspace / "competition_info.txt"
        info_path.write_text(info.to_markdown(), encoding="utf-8")
        self.trace.event("reader", phase=phase.key, ok=True,
                         target=info.target_variable, metric=info.metric_name)
        record.passed = info_path.exists()
        record.stdout = info.to_markdown()
        record.report = summarizer_agents.build_phase_report(
            phase_key=phase.key,
            files_read=PHASE_READS[phase],
            files_written=["competition_info.txt"],
            before=None, after=None,
            issue_notes="Identified the target variable, the evaluation metric "
                        "and the per-column feature classes.",
            stats_notes=(f"target {info.target_variable}; metric {info.metric_name} "
                         f"({'smaller' if info.smaller_better else 'larger'} is better)"),
            rounds_used=0, passed=record.passed,
            next_notes="Profile distributions and missing data before cleaning.",
        )
        return record

    def _attempt_agents_phase(self, phase: Phase, iteration: int) -> PhaseRecord:
        record = PhaseRecord(phase=phase, iterations_used=iteration)
        info = self.state.info
        if info is None:
            record.stdout = "no competition info available"
            return record

        staging = self._make_staging(phase, iteration)
        try:
            try:
                plan = self._run_planner(phase, staging, info)
            except Exception as exc:
                self.trace.event("planner_failed", phase=phase.key, error=str(exc))
                record.stdout = f"planner failed: {exc}"
                return record
            record.plan = plan
            backend = self._make_developer(phase, staging, info, plan)
            suite_key = PHASE_SUITES.get(phase)
            suite_runner = None
            if suite_key is not None:
                def suite_runner():
                    result = run_suite(suite_key, staging,
                                       target=info.target_variable,
                                       config=self.config.suite)
                    self.trace.event("unit_suite", phase=phase.key,
                                     suite=suite_key, passed=result.passed,
                                     failures=[r.name for r in result.failures()])
                    return result.passed, [
                        f"{r.name}: {r.message}" for r in result.failures()]

            def emit(event_type: str, payload: dict) -> None:
                self.trace.event(f"devloop_{event_type}", phase=phase.key,
                                 iteration=iteration, **payload)

            try:
                loop = develop(
                    phase_key=phase.key,
                    backend=backend,
                    workspace=staging,
                    max_debug_tries=self.config.max_debug_tries,
                    error_threshold=self.config.error_threshold,
                    timeout=self.config.timeout_seconds,
                    suite_runner=suite_runner,
                    trace=emit,
                    interpreter_command=self.config.interpreter_command,
                    registry=self.registry,
                )
            except Exception as exc:
                self.trace.event("developer_failed", phase=phase.key, error=str(exc))
                record.stdout = f"developer failed: {exc}"
                return record
            record.rounds_used = loop.rounds_used
            record.code_text = loop.code.rendered() if loop.code else None
            record.stdout = loop.stdout
            gate_passed = loop.execution_flag and self._artifact_gate(phase, staging,
                                                                      record.stdout)
            review = self._run_reviewer(phase, gate_passed, loop)
            record.review = {"scores": review.scores, "suggestions": review.suggestions}
            if gate_passed:
                self._promote(staging, phase)
                record.passed = True
            record.report = self._run_summarizer(phase, record, loop)
        finally:
            self._append_error_log(staging, phase)
            shutil.rmtree(staging, ignore_errors=True)
        return record

    # -- staging --

    def _staging_root(self) -> Path:
        return self.workspace / ".iterations"

    def _make_staging(self, phase: Phase, iteration: int) -> Path:
        staging = self._staging_root() / phase.key / f"iter_{iteration}"
        if staging.exists():
            shutil.rmtree(staging)
        staging.mkdir(parents=True)
        for entry in self.workspace.iterdir():
            if entry.name in (".iterations", "run_trace.jsonl"):
                continue
            if entry.name.startswith("error_log_"):
                continue  # each attempt logs fresh; the root log accumulates
            if entry.is_file():
                shutil.copy2(entry, staging / entry.name)
        for directory in IMAGE_DIRS:
            (staging / directory).mkdir(parents=True, exist_ok=True)
        return staging

    def _promote(self, staging: Path, phase: Phase) -> None:
        for entry in sorted(staging.rglob("*")):
            if entry.is_dir():
                continue
            relative = entry.relative_to(staging)
            if relative.name == SCRIPT_FILENAME:
                continue
            if relative.name.startswith("error_log_"):
                continue  # appended separately so failed attempts persist too
            destination = self.workspace / relative
            destination.parent.mkdir(parents=True, exist_ok=True)
            shutil.copy2(entry, destination)

    def _append_error_log(self, staging: Path, phase: Phase) -> None:
        source = staging / f"error_log_{phase.key}.jsonl"
        if not source.exists():
            return
        destination = self.workspace / source.name
        with destination.open("a", encoding="utf-8") as handle:
            handle.write(source.read_text(encoding="utf-8"))

    # -- agents --

    def _run_planner(self, phase: Phase, staging: Path,
                     info: CompetitionInfo) -> PlanDoc:
        reads = PHASE_READS[phase]
        train = read_csv(staging / reads[0])
        test_path = staging / (reads[1] if len(reads) > 1 else reads[0])
        test = read_csv(test_path) if test_path.exists() else train
        suite_key = PHASE_SUITES.get(phase)
        retrieved: list[str] = []
        if suite_key is not None:
            query = PHASE_RETRIEVAL_QUERIES[phase]
            retrieved = [spec.name for spec in
                         self.registry.retrieve(query, phase=suite_key, k=5)]
            self.trace.event("tool_retrieval", phase=phase.key, query=query,
                             results=retrieved)
        if self.config.backend in ("llm", "replay"):
            plan = planner_agents.plan_with_model(
                phase.key, info, self.state.history.summary_text(),
                retrieved, self.user_rules, self._complete_fn("heavy"))
        else:
            plan = planner_agents.deterministic_plan(
                phase.key, info, train, test, retrieved, self.user_rules)
        self.trace.event("plan", phase=phase.key, tasks=len(plan.tasks),
                         images=plan.planned_images)
        if self.config.hitl_enabled:
            plan = self._apply_hitl(phase, plan, info, train, test, retrieved)
        return plan

    def _apply_hitl(self, phase: Phase, plan: PlanDoc, info: CompetitionInfo,
                    train: Table, test: Table, retrieved: list[str]) -> PlanDoc:
        decision = hitl_review(plan, **self.hitl_io)
        self.trace.event("hitl", phase=phase.key, action=decision.action)
        if decision.action == "edit":
            edited = PlanDoc(phase_key=plan.phase_key, tasks=plan.tasks,
                             raw_text=decision.text,
                             planned_images=plan.planned_images)
            return edited
        if decision.action == "regenerate":
            rules = self.user_rules + "\n" + decision.text
            if self.config.backend in ("llm", "replay"):
                return planner_agents.plan_with_model(
                    phase.key, info, self.state.history.summary_text(),
                    retrieved, rules, self._complete_fn("heavy"))
            return planner_agents.deterministic_plan(
                phase.key, info, train, test, retrieved, rules)
        return plan

    def _make_developer(self, phase: Phase, staging: Path, info: CompetitionInfo,
                        plan: PlanDoc):
        if self.config.backend in ("llm", "replay"):
            return developer_agents.ModelBackedDeveloper(
                phase.key, self._complete_fn("heavy"), plan.raw_text, info,
                history_text=self.state.history.summary_text())
        return developer_agents.DeterministicDeveloper(
            phase.key, staging, info, seed=self.config.seed)

    def _run_reviewer(self, phase: Phase, passed: bool, loop: LoopOutcome):
        debug_rounds = max(0, loop.rounds_used - 1)
        if self.config.backend in ("llm", "replay"):
            outcome_text = (f"phase {phase.key}: "
                            f"{'passed' if passed else 'failed'} after "
                            f"{loop.rounds_used} loop round(s)")
            review = reviewer_agents.review_with_model(
                ACTIVE_AGENTS, outcome_text, self._complete_fn("light"))
        else:
            review = reviewer_agents.deterministic_review(
                ACTIVE_AGENTS, passed, debug_rounds)
        self.trace.event("review", phase=phase.key, scores=review.scores)
        return review

    def _run_summarizer(self, phase: Phase, record: PhaseRecord,
                        loop: LoopOutcome) -> PhaseReport:
        before, after = self._diff_tables(phase)
        written = self._written_files(phase)
        stats = self._stats_extract(record.stdout)
        issues = self._issue_notes(phase, record)
        report = summarizer_agents.build_phase_report(
            phase_key=phase.key,
            files_read=PHASE_READS[phase],
            files_written=written,
            before=before, after=after,
            issue_notes=issues,
            stats_notes=stats,
            rounds_used=loop.rounds_used,
            passed=record.passed,
            next_notes=self._next_notes(phase),
        )
        self.trace.event("summary", phase=phase.key, passed=record.passed)
        return report

    def _diff_tables(self, phase: Phase) -> tuple[Table | None, Table | None]:
        pairs = {
            Phase.DataCleaning: ("train.csv", "cleaned_train.csv"),
            Phase.FeatureEngineering: ("cleaned_train.csv", "processed_train.csv"),
        }
        names = pairs.get(phase)
        if names is None:
            return None, None
        tables = []
        for name in names:
            path = self.workspace / name
            tables.append(read_csv(path) if path.exists() else None)
        return tables[0], tables[1]

    def _written_files(self, phase: Phase) -> list[str]:
        candidates = {
            Phase.PreliminaryEDA: ["pre_eda/images/"],
            Phase.DataCleaning: ["cleaned_train.csv", "cleaned_test.csv",
                                 "data_cleaning/images/"],
            Phase.InDepthEDA: ["deep_eda/images/"],
            Phase.FeatureEngineering: ["processed_train.csv", "processed_test.csv"],
            Phase.ModelBuildValidatePredict: ["submission.csv", "model_report.json"],
        }
        out = []
        for name in candidates.get(phase, []):
            path = self.workspace / name
            if name.endswith("/"):
                if path.is_dir() and any(path.iterdir()):
                    out.append(name)
            elif path.exists():
                out.append(name)
        return out

    @staticmethod
    def _stats_extract(stdout: str, limit: int = 600) -> str:
        marker = developer_agents.STATS_MARKER
        if marker in stdout:
            block = stdout.split(marker, 1)[1].strip()
            return block[:limit]
        return stdout.strip()[:limit]

    def _issue_notes(self, phase: Phase, record: PhaseRecord) -> str:
        if phase is Phase.DataCleaning and record.stdout:
            lines = [l for l in record.stdout.splitlines()
                     if l.startswith(("fill_missing_values", "outliers",
                                      "remove_", "convert_"))]
            if lines:
                return " | ".join(lines)[:600]
        if not record.passed:
            return "the phase did not pass its gate on this iteration"
        return ""

    def _next_notes(self, phase: Phase) -> str:
        notes = {
            Phase.PreliminaryEDA: "Clean the missing values and outliers "
                                  "surfaced above before engineering features.",
            Phase.DataCleaning: "Explore the cleaned distributions and "
                                "target relations before engineering features.",
            Phase.InDepthEDA: "Engineer features along the strongest "
                              "target relations found here.",
            Phase.FeatureEngineering: "Model on the processed numeric matrix; "
                                      "exclude identifier columns.",
            Phase.ModelBuildValidatePredict: "Review the submission and the "
                                             "model report.",
        }
        return notes.get(phase, "")

    # -- gates and reports --

    def _artifact_gate(self, phase: Phase, staging: Path, stdout: str) -> bool:
        if phase in (Phase.PreliminaryEDA, Phase.InDepthEDA):
            passed = developer_agents.STATS_MARKER in stdout
            self.trace.event("artifact_gate", phase=phase.key, passed=passed,
                             requirement="printed statistics block")
            return passed
        return True

    def _write_phase_report(self, phase: Phase, record: PhaseRecord) -> None:
        path = self.workspace / f"report_{phase.key}.md"
        parts = []
        if record.report is not None:
            parts.append(record.report.to_markdown())
        if record.review is not None:
            parts.append("## Review")
            for agent, score in record.review["scores"].items():
                line = f"- {agent}: score {score}/5"
                suggestion = record.review["suggestions"].get(agent, "")
                if suggestion:
                    line += f" ({suggestion})"
                parts.append(line)
        path.write_text("\n\n".join(parts) + "\n", encoding="utf-8")

    def _best_model_line(self) -> str:
        report_path = self.workspace / "model_report.json"
        if not report_path.exists():
            return ""
        payload = json.loads(report_path.read_text(encoding="utf-8"))
        selected = payload.get("selected")
        for candidate in payload.get("candidates", []):
            if candidate.get("family") == selected:
                score = candidate.get("mean_cv_score")
                return (f"The best model was {selected} with a validation "
                        f"{payload.get('metric', 'score')} of {score:.4f}.")
        return ""

    def _write_final_report(self) -> None:
        reports = {}
        for record in self.state.history.records:
            if record.report is not None and record.passed:
                reports[record.phase.key] = record.report
        failed = (self.state.status.failed_phase.key
                  if self.state.status.failed_phase else None)
        content = summarizer_agents.final_report(
            reports, failed_phase=failed, best_model_line=self._best_model_line())
        (self.workspace / "research_report.md").write_text(content, encoding="utf-8")


def run_competition(workspace: str | Path, config: RunConfig,
                    registry: ToolRegistry | None = None,
                    hitl_io: dict | None = None) -> CompetitionState:
    return CompetitionRun(workspace, config, registry=registry,
                          hitl_io=hitl_io).run()
