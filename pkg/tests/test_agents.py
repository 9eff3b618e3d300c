from __future__ import annotations

import pytest

from tabpilot.agents import (
    AgentError,
    AgentRole,
    NoTargetIdentified,
    build_phase_report,
    describe_feature_changes,
    deterministic_plan,
    deterministic_review,
    final_report,
)
from tabpilot.agents.base import FIXED_QUESTION_2, PhaseReport
from tabpilot.agents.developer import DeterministicDeveloper
from tabpilot.agents.planner import parse_plan_markdown, plan_with_model
from tabpilot.agents.reader import (
    classify_column,
    reader_execute,
    reader_with_model,
    sniff_metric,
)
from tabpilot.tabular import DType, Table


class TestRoles:
    def test_tier_assignment(self):
        assert AgentRole.Reader.backend_tier == "light"
        assert AgentRole.Reviewer.backend_tier == "light"
        assert AgentRole.Summarizer.backend_tier == "light"
        assert AgentRole.Planner.backend_tier == "heavy"
        assert AgentRole.Developer.backend_tier == "heavy"


OVERVIEW = ("Predict survival. The evaluation metric is accuracy: higher is "
            "better. Submit a CSV.")


class TestReader:
    def test_titanic_target_and_metric(self, titanic_train, titanic_test):
        info = reader_execute(OVERVIEW, titanic_train, titanic_test)
        assert info.target_variable == "Survived"
        assert info.metric_name == "accuracy"
        assert info.smaller_better is False
        assert info.feature_classes["PassengerId"] == "id"
        assert info.feature_classes["Sex"] == "categorical"
        assert info.feature_classes["Age"] == "numerical"

    def test_identical_columns_raise(self, titanic_test):
        with pytest.raises(NoTargetIdentified):
            reader_execute(OVERVIEW, titanic_test, titanic_test)

    def test_distinct_id_like_column_classified_id(self):
        table = Table([
            ("HouseId", DType.Integer, [10, 11, 12, 13]),
            ("Price", DType.Float, [1.0, 2.0, 2.0, 3.0]),
        ])
        assert classify_column(table, "HouseId") == "id"
        assert classify_column(table, "Price") == "numerical"

    def test_date_like_text_column_classified_datetime(self):
        table = Table([
            ("when", DType.Text, ["2024-01-02", "03/04/2021"]),
        ])
        assert classify_column(table, "when") == "datetime"

    def test_metric_direction_sniffing(self):
        assert sniff_metric("judged by RMSE on the test set") == ("rmse", True)
        assert sniff_metric("scored with accuracy")[1] is False
        assert sniff_metric("no recognizable wording") == ("score", False)

    def test_eight_sections_rendered(self, titanic_train, titanic_test):
        info = reader_execute(OVERVIEW, titanic_train, titanic_test)
        markdown = info.to_markdown()
        for i in range(1, 9):
            assert f"## {i}. " in markdown

    def test_model_backed_reader_parses_json_block(self, titanic_train, titanic_test):
        def complete(system, user):
            return ("summary text\n```json\n"
                    '{"feature_classes": {"Sex": "categorical"}, '
                    '"target": "Survived", '
                    '"metric": {"name": "accuracy", "smaller_better": false}}'
                    "\n```")
        info = reader_with_model(OVERVIEW, titanic_train, titanic_test, complete)
        assert info.target_variable == "Survived"
        assert info.feature_classes["Sex"] == "categorical"

    def test_model_backed_reader_falls_back_on_garbage(self, titanic_train,
                                                       titanic_test):
        info = reader_with_model(OVERVIEW, titanic_train, titanic_test,
                                 lambda s, u: "no json here at all")
        assert info.target_variable == "Survived"


@pytest.fixture()
def info(titanic_train, titanic_test):
    return reader_execute(OVERVIEW, titanic_train, titanic_test)


class TestDeterministicPlanner:
    def test_cleaning_plan_has_four_named_steps(self, info, titanic_train,
                                                titanic_test):
        plan = deterministic_plan("data_cleaning", info, titanic_train,
                                  titanic_test, [], "")
        assert len(plan.tasks) == 4
        objectives = " | ".join(t.objective.lower() for t in plan.tasks)
        assert "missing" in objectives
        assert "outlier" in objectives.replace("clip", "outlier")
        assert "save" in objectives or "dedup" in objectives
        tools = {t for task in plan.tasks for t in task.tool_refs}
        assert "fill_missing_values" in tools
        assert "detect_and_handle_outliers_iqr" in tools
        plan.validate()

    def test_empty_user_rules_do_not_change_the_plan(self, info, titanic_train,
                                                     titanic_test):
        without = deterministic_plan("data_cleaning", info, titanic_train,
                                     titanic_test, [], "")
        with_empty = deterministic_plan("data_cleaning", info, titanic_train,
                                        titanic_test, [], "\n\n")
        assert without.raw_text == with_empty.raw_text

    def test_eda_plan_respects_image_budget(self, info, titanic_train,
                                            titanic_test):
        plan = deterministic_plan("pre_eda", info, titanic_train, titanic_test,
                                  [], "")
        assert plan.planned_images <= 10


class TestPlanParsing:
    def _oversized(self):
        return "\n".join(f"### Task {i}: step {i}\n- do thing {i}"
                         for i in range(1, 7))

    def test_parse_counts_tasks(self):
        plan = parse_plan_markdown("data_cleaning", self._oversized())
        assert len(plan.tasks) == 6
        with pytest.raises(AgentError):
            plan.validate()

    def test_oversized_plan_regenerates_then_truncates(self):
        calls = []

        def complete(system, user):
            calls.append(user)
            return self._oversized()  # misbehaves on both attempts

        plan = plan_with_model("data_cleaning", _stub_info(), "state", [], "",
                               complete)
        assert len(calls) == 2  # one regeneration attempt
        assert "Regenerate within the limits" in calls[1]
        assert len(plan.tasks) == 4  # then clamped
        plan.validate()

    def test_compliant_plan_needs_one_call(self):
        calls = []

        def complete(system, user):
            calls.append(user)
            return "### Task 1: everything\n- one action"

        plan = plan_with_model("pre_eda", _stub_info(), "state", [], "", complete)
        assert len(calls) == 1
        assert len(plan.tasks) == 1

    def test_image_budget_enforced(self):
        text = "### Task 1: plots\n- draw\nImages: 12"
        plan = parse_plan_markdown("pre_eda", text)
        with pytest.raises(AgentError):
            plan.validate()
        assert plan.truncated().planned_images == 10


def _stub_info():
    from tabpilot.agents.base import CompetitionInfo
    return CompetitionInfo(
        overview="o", files="f", problem_definition="p",
        data_information="d", target_variable="y",
        evaluation_metric="accuracy", submission_format="s",
        other_aspects="n", feature_classes={"y": "numerical"},
    )


class TestDeterministicDeveloper:
    def test_cleaning_pipeline_compiles_and_validates(self, info,
                                                      titanic_workspace,
                                                      registry):
        developer = DeterministicDeveloper("data_cleaning", titanic_workspace,
                                           info, seed=1)
        artifact = developer.generate(regenerated=False)
        assert artifact.kind == "pipeline"
        artifact.body.validate(registry)
        tools = [step.tool for step in artifact.body.steps]
        assert "remove_columns_with_missing_data" in tools
        assert "fill_missing_values" in tools
        assert "detect_and_handle_outliers_iqr" in tools
        assert "remove_duplicates" in tools

    def test_eda_script_is_generated(self, info, titanic_workspace):
        developer = DeterministicDeveloper("pre_eda", titanic_workspace, info)
        artifact = developer.generate(regenerated=False)
        assert artifact.kind == "script"
        assert "read_csv" in artifact.body

    def test_unit_test_failure_triggers_recomppile(self, info, titanic_workspace):
        developer = DeterministicDeveloper("data_cleaning", titanic_workspace,
                                           info, seed=1)
        artifact = developer.generate(regenerated=False)
        rebuilt, trace = developer.debug_test_failures(
            artifact, ["test_cleaned_train_no_missing_values: hole"])
        assert trace.changed
        assert rebuilt.kind == "pipeline"


class TestReviewer:
    def test_clean_pass_scores_five(self):
        review = deterministic_review(["planner", "developer"], True, 0)
        assert review.scores == {"planner": 5, "developer": 5}
        assert review.suggestions["developer"] == ""

    def test_pass_after_debugging_scores_three(self):
        review = deterministic_review(["planner", "developer"], True, 2)
        assert review.scores["developer"] == 3
        assert review.scores["planner"] == 5
        assert review.suggestions["developer"]

    def test_failed_phase_scores_one_with_suggestion(self):
        review = deterministic_review(["planner", "developer"], False, 5)
        assert review.scores["developer"] == 1
        assert review.suggestions["developer"] != ""


class TestSummarizer:
    def test_feature_change_answer_matches_schema_diff(self, titanic_train):
        from tabpilot.mltools import remove_columns_with_missing_data
        cleaned = remove_columns_with_missing_data(titanic_train, thresh=0.5).table
        answer = describe_feature_changes(titanic_train, cleaned)
        assert "deleted: Cabin" in answer

    def test_report_carries_six_pairs_and_fixed_question(self):
        report = build_phase_report(
            "data_cleaning", ["train.csv"], ["cleaned_train.csv"],
            None, None, "issues", "stats", 1, True, "next")
        report.validate()
        assert len(report.questions) == 6
        assert report.questions[1] == FIXED_QUESTION_2
        markdown = report.to_markdown()
        assert "Question 2" in markdown and "Answer 6" in markdown

    def test_no_files_answer_says_none(self):
        report = build_phase_report("pre_eda", [], [], None, None,
                                    "", "", 1, True, "")
        assert "Read: none." in report.answers[0]

    def test_wrong_question_count_rejected(self):
        with pytest.raises(AgentError):
            PhaseReport("x", ["q"] * 5, ["a"] * 5).validate()


class TestFinalReport:
    def _report(self, phase):
        return build_phase_report(phase, ["in.csv"], ["out.csv"], None, None,
                                  "issues", "stats", 1, True, "next")

    def test_failed_run_contains_only_reached_sections(self):
        reports = {"pre_eda": self._report("pre_eda")}
        text = final_report(reports, failed_phase="data_cleaning")
        assert "PRELIMINARY EDA" in text
        assert "stopped at data_cleaning" in text
        assert "failed during data_cleaning" in text

    def test_empty_history_is_headers_only(self):
        text = final_report({})
        for header in ("PRELIMINARY EDA", "DATA CLEANING", "DEEP EDA",
                       "FEATURE ENGINEERING", "MODEL BUILDING", "CONCLUSION"):
            assert header in text

    def test_success_mentions_best_model(self):
        text = final_report(
            {"model_build_validate_predict":
             self._report("model_build_validate_predict")},
            best_model_line="The best model was random_forest with a "
                            "validation accuracy of 0.8379.")
        assert "random_forest" in text
        assert "0.8379" in text
