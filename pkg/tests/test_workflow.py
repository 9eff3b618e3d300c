from __future__ import annotations

import json

import pytest

from tabpilot.agents.developer import DeterministicDeveloper
from tabpilot.agents.reader import reader_execute
from tabpilot.devloop.loop import DebugTrace, evaluate_retry_rule
from tabpilot.devloop.sandbox import CodeArtifact
from tabpilot.mltools import PipelineProgram, PipelineStep
from tabpilot.tabular import read_csv
from tabpilot.workflow import (
    BackendUnavailable,
    CompetitionRun,
    HitlDecision,
    MissingInputFile,
    Phase,
    PhaseExhausted,
    PhaseOrderError,
    PhaseRecord,
    RunConfig,
    hitl_review,
    read_trace,
    run_competition,
)


class TestPhaseEnum:
    def test_six_phases_in_order(self):
        ordered = Phase.ordered()
        assert len(ordered) == 6
        assert [p.ordinal for p in ordered] == [1, 2, 3, 4, 5, 6]
        assert ordered[0] is Phase.UnderstandBackground
        assert ordered[-1] is Phase.ModelBuildValidatePredict


class TestRunConfig:
    def test_defaults_match_contract(self):
        config = RunConfig()
        assert config.max_phase_iterations == 3
        assert config.max_debug_tries == 5
        assert config.error_threshold == 3
        assert config.timeout_seconds == 600

    def test_threshold_cannot_exceed_tries(self):
        with pytest.raises(ValueError):
            RunConfig(max_debug_tries=2, error_threshold=3)

    def test_counts_must_be_positive(self):
        with pytest.raises(ValueError):
            RunConfig(max_phase_iterations=0)

    def test_from_json_round_trip(self):
        config = RunConfig.from_json({
            "seed": 4, "backend": "deterministic",
            "llm": {"model_light": "small"},
        })
        assert config.seed == 4
        assert config.llm.model_light == "small"


class TestPreconditions:
    def test_missing_train_named_in_error(self, titanic_workspace):
        (titanic_workspace / "train.csv").unlink()
        with pytest.raises(MissingInputFile) as exc:
            run_competition(titanic_workspace, RunConfig())
        assert exc.value.filename == "train.csv"

    def test_llm_backend_without_endpoint_unavailable(self, titanic_workspace):
        with pytest.raises(BackendUnavailable):
            run_competition(titanic_workspace, RunConfig(backend="llm"))

    def test_replay_backend_without_transcript_unavailable(self, titanic_workspace):
        with pytest.raises(BackendUnavailable):
            run_competition(titanic_workspace, RunConfig(backend="replay"))

    def test_phase_order_enforced(self, titanic_workspace):
        run = CompetitionRun(titanic_workspace, RunConfig())
        with pytest.raises(PhaseOrderError):
            run.execute_phase(Phase.DataCleaning)


class TestSuccessfulRunTrace:
    def test_phase_sequence_is_monotone_and_complete(self, completed_run):
        trace = read_trace(completed_run / "run_trace.jsonl")
        starts = [r["phase"] for r in trace if r["event"] == "phase_start"]
        ordinals = [Phase.from_key(k).ordinal for k in starts]
        assert ordinals == sorted(ordinals)
        assert set(starts) == {p.key for p in Phase.ordered()}

    def test_hitl_never_invoked_when_disabled(self, completed_run):
        trace = read_trace(completed_run / "run_trace.jsonl")
        assert not [r for r in trace if r["event"] == "hitl"]

    def test_gate_soundness_suite_pass_precedes_phase_pass(self, completed_run):
        trace = read_trace(completed_run / "run_trace.jsonl")
        for suite_key, phase in (("dc", "data_cleaning"),
                                 ("fe", "feature_engineering"),
                                 ("mbvp", "model_build_validate_predict")):
            suite_events = [r for r in trace if r["event"] == "unit_suite"
                            and r["suite"] == suite_key]
            assert suite_events and suite_events[-1]["passed"] is True
            results = [r for r in trace if r["event"] == "phase_result"
                       and r["phase"] == phase]
            assert results[-1]["passed"] is True

    def test_tool_retrieval_recorded_per_tool_phase(self, completed_run):
        trace = read_trace(completed_run / "run_trace.jsonl")
        retrievals = {r["phase"]: r["results"]
                      for r in trace if r["event"] == "tool_retrieval"}
        assert set(retrievals) == {"data_cleaning", "feature_engineering",
                                   "model_build_validate_predict"}
        assert "fill_missing_values" in retrievals["data_cleaning"]

    def test_devloop_bounded_work(self, completed_run):
        trace = read_trace(completed_run / "run_trace.jsonl")
        per_phase_iteration: dict = {}
        for record in trace:
            if record["event"] == "devloop_execution":
                key = (record["phase"], record["iteration"])
                per_phase_iteration[key] = per_phase_iteration.get(key, 0) + 1
        config = RunConfig()
        assert per_phase_iteration
        for count in per_phase_iteration.values():
            assert count <= config.max_debug_tries + 1

    def test_workspace_layout_complete(self, completed_run):
        for name in ("cleaned_train.csv", "cleaned_test.csv",
                     "processed_train.csv", "processed_test.csv",
                     "submission.csv", "competition_info.txt",
                     "research_report.md", "run_trace.jsonl"):
            assert (completed_run / name).exists(), name
        for phase in Phase.ordered():
            assert (completed_run / f"report_{phase.key}.md").exists()
        for directory in ("pre_eda/images", "data_cleaning/images",
                          "deep_eda/images"):
            assert (completed_run / directory).is_dir()

    def test_final_report_names_best_model_and_score(self, completed_run):
        text = (completed_run / "research_report.md").read_text()
        report = json.loads((completed_run / "model_report.json").read_text())
        assert report["selected"] in text
        assert "validation accuracy" in text

    def test_feature_change_answers_track_schema_diffs(self, completed_run):
        fe_report = (completed_run / "report_feature_engineering.md").read_text()
        for feature in ("FamilySize", "IsAlone", "AgeBins", "FarePerPerson"):
            assert feature in fe_report
        dc_report = (completed_run / "report_data_cleaning.md").read_text()
        assert "deleted: Cabin" in dc_report


class _BrokenPipelineDeveloper:
    """Always emits a pipeline that fails at runtime; repairs never help."""

    def __init__(self):
        self.generations = 0

    def generate(self, regenerated: bool) -> CodeArtifact:
        self.generations += 1
        program = PipelineProgram(
            inputs={"train": "train.csv", "test": "test.csv"},
            outputs={"train": "cleaned_train.csv", "test": "cleaned_test.csv"},
            steps=[PipelineStep(tool="fill_missing_values",
                                params={"columns": ["GhostColumn"],
                                        "method": "median"},
                                inputs=["train"], output="train")])
        return CodeArtifact("pipeline", program, "data_cleaning")

    def debug(self, code, error):
        return code, DebugTrace("scripted", "no-op", False)

    def debug_test_failures(self, code, failures):
        return code, DebugTrace("scripted", "no-op", False)

    def evaluate_retry(self, history, threshold):
        return evaluate_retry_rule(history, threshold)


class _LeakyThenGoodDeveloper(DeterministicDeveloper):
    """First phase iteration copies raw files (missing cells leak through);
    later iterations compile the real cleaning pipeline."""

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.iteration_probe = {"count": 0}

    def generate(self, regenerated: bool) -> CodeArtifact:
        if self.iteration_probe["count"] == 0:
            program = PipelineProgram(
                inputs={"train": "train.csv", "test": "test.csv"},
                outputs={"train": "cleaned_train.csv",
                         "test": "cleaned_test.csv"},
                steps=[])
            return CodeArtifact("pipeline", program, self.phase_key)
        return super().generate(regenerated)

    def debug_test_failures(self, code, failures):
        # modeled as unfixable within the iteration
        return code, DebugTrace("scripted", "no-op", False)


class _InjectingRun(CompetitionRun):
    def __init__(self, *args, injections=None, **kwargs):
        super().__init__(*args, **kwargs)
        self.injections = injections or {}

    def _make_developer(self, phase, staging, info, plan):
        factory = self.injections.get(phase)
        if factory is not None:
            return factory(phase, staging, info)
        return super()._make_developer(phase, staging, info, plan)


def _prime_through_eda(run: CompetitionRun) -> None:
    workspace = run.workspace
    overview = (workspace / "overview.txt").read_text(encoding="utf-8")
    run.state.info = reader_execute(
        overview, read_csv(workspace / "train.csv"),
        read_csv(workspace / "test.csv"))
    for phase in (Phase.UnderstandBackground, Phase.PreliminaryEDA):
        run.state.history.append(PhaseRecord(phase=phase, passed=True,
                                             iterations_used=1))


class TestPhaseFaultInjection:
    def test_unfixable_developer_exhausts_three_iterations(self, titanic_workspace):
        run = _InjectingRun(
            titanic_workspace, RunConfig(seed=2),
            injections={Phase.DataCleaning:
                        lambda phase, staging, info: _BrokenPipelineDeveloper()})
        _prime_through_eda(run)
        with pytest.raises(PhaseExhausted) as exc:
            run.execute_phase(Phase.DataCleaning)
        assert exc.value.iterations == 3
        assert not (titanic_workspace / "cleaned_train.csv").exists()
        trace = read_trace(titanic_workspace / "run_trace.jsonl")
        starts = [r for r in trace if r["event"] == "phase_start"
                  and r["phase"] == "data_cleaning"]
        assert [r["iteration"] for r in starts] == [1, 2, 3]
        results = [r["passed"] for r in trace if r["event"] == "phase_result"
                   and r["phase"] == "data_cleaning"]
        assert results == [False, False, False]

    def test_leaky_first_iteration_passes_on_second(self, titanic_workspace):
        probe = {"factory_calls": 0}

        def factory(phase, staging, info):
            developer = _LeakyThenGoodDeveloper(phase.key, staging, info, seed=2)
            developer.iteration_probe["count"] = probe["factory_calls"]
            probe["factory_calls"] += 1
            return developer

        run = _InjectingRun(titanic_workspace, RunConfig(seed=2),
                            injections={Phase.DataCleaning: factory})
        _prime_through_eda(run)
        outcome = run.execute_phase(Phase.DataCleaning)
        assert outcome.passed is True
        assert outcome.iterations_used == 2
        cleaned = read_csv(titanic_workspace / "cleaned_train.csv")
        assert all(cleaned.missing_count(n) == 0 for n in cleaned.names)
        trace = read_trace(titanic_workspace / "run_trace.jsonl")
        suite_events = [r for r in trace if r["event"] == "unit_suite"]
        assert any(not r["passed"] and
                   "test_cleaned_train_no_missing_values" in r["failures"]
                   for r in suite_events)

    def test_failed_run_sets_failed_phase_status(self, titanic_workspace):
        run = _InjectingRun(
            titanic_workspace, RunConfig(seed=2),
            injections={Phase.DataCleaning:
                        lambda phase, staging, info: _BrokenPipelineDeveloper()})
        state = run.run()
        assert state.status.state == "failed"
        assert state.status.failed_phase is Phase.DataCleaning
        report = (titanic_workspace / "research_report.md").read_text()
        assert "data_cleaning" in report
        assert (titanic_workspace / "report_data_cleaning.md").exists()
        # error records from every failed iteration survive at workspace root
        log = titanic_workspace / "error_log_data_cleaning.jsonl"
        records = [json.loads(line) for line in log.read_text().splitlines()]
        assert len(records) == 15  # 3 iterations x 5 loop rounds
        assert all(r["class"] == "Key" for r in records)


class TestHitl:
    def _plan(self):
        from tabpilot.agents import PlanDoc, PlanTask
        return PlanDoc(phase_key="data_cleaning",
                       tasks=[PlanTask("do the thing")],
                       raw_text="# original plan")

    def test_non_interactive_session_approves_with_warning(self, capsys):
        decision = hitl_review(self._plan(), interactive=False)
        assert decision.action == "approve"
        assert "warning" in capsys.readouterr().out

    def test_approve_leaves_plan_unchanged(self):
        answers = iter(["a"])
        decision = hitl_review(self._plan(), input_fn=lambda _: next(answers),
                               print_fn=lambda *a: None, interactive=True)
        assert decision == HitlDecision("approve")

    def test_edit_captures_replacement_verbatim(self):
        answers = iter(["e", "replacement line one", "  line two  ", "."])
        decision = hitl_review(self._plan(), input_fn=lambda _: next(answers),
                               print_fn=lambda *a: None, interactive=True)
        assert decision.action == "edit"
        assert decision.text == "replacement line one\n  line two  "

    def test_regenerate_carries_the_note(self):
        answers = iter(["r", "use medians everywhere"])
        decision = hitl_review(self._plan(), input_fn=lambda _: next(answers),
                               print_fn=lambda *a: None, interactive=True)
        assert decision.action == "regenerate"
        assert decision.text == "use medians everywhere"

    def test_edit_flows_into_the_phase_plan(self, titanic_workspace):
        answers = iter(["e", "hand-written plan", "."])
        run = CompetitionRun(
            titanic_workspace,
            RunConfig(seed=2, hitl_enabled=True),
            hitl_io={"input_fn": lambda _: next(answers),
                     "print_fn": lambda *a: None,
                     "interactive": True})
        _prime_through_eda(run)
        outcome = run.execute_phase(Phase.DataCleaning)
        assert outcome.passed
        record = run.state.history.for_phase(Phase.DataCleaning)
        assert record.plan.raw_text == "hand-written plan"
        trace = read_trace(titanic_workspace / "run_trace.jsonl")
        hitl_events = [r for r in trace if r["event"] == "hitl"]
        assert [e["action"] for e in hitl_events] == ["edit"]

    def test_regenerate_invokes_planner_once_more(self, titanic_workspace):
        answers = iter(["r", "prefer medians"])
        run = CompetitionRun(
            titanic_workspace,
            RunConfig(seed=2, hitl_enabled=True),
            hitl_io={"input_fn": lambda _: next(answers),
                     "print_fn": lambda *a: None,
                     "interactive": True})
        _prime_through_eda(run)
        outcome = run.execute_phase(Phase.DataCleaning)
        assert outcome.passed
        record = run.state.history.for_phase(Phase.DataCleaning)
        assert "prefer medians" in record.plan.raw_text
