from __future__ import annotations

import json
import shutil

from tabpilot.cli import main
from tabpilot.mltools import fill_missing_values
from tabpilot.tabular import read_csv, write_csv


class TestUsage:
    def test_unknown_flag_exits_two(self, capsys):
        assert main(["tools_list", "--bogus"]) == 2

    def test_unknown_command_exits_two(self):
        assert main(["frobnicate"]) == 2

    def test_missing_required_flag_exits_two(self):
        assert main(["test", "--phase", "dc"]) == 2


class TestToolsCommands:
    def test_tools_list_json(self, capsys):
        assert main(["tools_list", "--format", "json"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert len(payload) == 19

    def test_tools_describe_markdown(self, capsys):
        assert main(["tools_describe", "--tool", "fill_missing_values"]) == 0
        out = capsys.readouterr().out
        assert "auto | mean | median | mode | constant" in out

    def test_tools_describe_unknown_exits_one(self):
        assert main(["tools_describe", "--tool", "nope"]) == 1

    def test_tools_apply_matches_in_process_call(self, titanic_workspace,
                                                  tmp_path, capsys):
        out_path = tmp_path / "filled.csv"
        code = main([
            "tools_apply", "--tool", "fill_missing_values",
            "--params", '{"columns": ["Age"], "method": "median"}',
            "--in", str(titanic_workspace / "train.csv"),
            "--out", str(out_path),
        ])
        assert code == 0
        via_cli = out_path.read_bytes()
        table = read_csv(titanic_workspace / "train.csv")
        expected = fill_missing_values(table, ["Age"], method="median").table
        in_process = tmp_path / "expected.csv"
        write_csv(expected, in_process)
        assert via_cli == in_process.read_bytes()
        assert read_csv(out_path).missing_count("Age") == 0

    def test_tools_apply_bad_params_exit_codes(self, titanic_workspace, tmp_path):
        assert main(["tools_apply", "--tool", "fill_missing_values",
                     "--params", "{not json",
                     "--in", str(titanic_workspace / "train.csv"),
                     "--out", str(tmp_path / "x.csv")]) == 2
        assert main(["tools_apply", "--tool", "fill_missing_values",
                     "--params", '{"columns": ["Age"], "method": "wat"}',
                     "--in", str(titanic_workspace / "train.csv"),
                     "--out", str(tmp_path / "x.csv")]) == 1

    def test_tools_apply_fitted_sidecar_spans_two_invocations(
            self, titanic_workspace, tmp_path):
        sidecar = tmp_path / "scaler.json"
        train_out = tmp_path / "train_scaled.csv"
        test_out = tmp_path / "test_scaled.csv"
        assert main(["tools_apply", "--tool", "scale_features",
                     "--params", '{"columns": ["Fare"], "method": "minmax"}',
                     "--in", str(titanic_workspace / "train.csv"),
                     "--out", str(train_out), "--fitted", str(sidecar)]) == 0
        assert sidecar.exists()
        assert main(["tools_apply", "--tool", "scale_features",
                     "--params", '{"columns": ["Fare"], "method": "minmax"}',
                     "--in", str(titanic_workspace / "test.csv"),
                     "--out", str(test_out), "--fitted", str(sidecar)]) == 0
        # the test table reuses train statistics, so values may exceed 1.0
        scaled = read_csv(test_out)
        values = scaled.numeric_values("Fare")
        assert min(values) >= 0.0 or max(values) > 1.0


class TestSuiteCommand:
    def test_exit_code_counts_failures(self, completed_run, tmp_path, capsys):
        assert main(["test", "--phase", "dc",
                     "--workspace", str(completed_run)]) == 0
        broken = tmp_path / "broken"
        shutil.copytree(completed_run, broken)
        (broken / "cleaned_train.csv").unlink()
        (broken / "cleaned_test.csv").unlink()
        failures = main(["test", "--phase", "dc", "--workspace", str(broken)])
        assert failures == 1  # only the existence check fails


class TestScoreCommand:
    def test_score_prints_summary_columns(self, tmp_path, capsys):
        trials = tmp_path / "trials.jsonl"
        trials.write_text(
            '{"trial_id": 0, "made": true, "valid": true, "raw_score": 0.8,'
            ' "smaller_better": false}\n'
            '{"trial_id": 1, "made": true, "valid": false, "raw_score": null,'
            ' "smaller_better": false}\n')
        assert main(["score", "--trials-file", str(trials)]) == 0
        out = capsys.readouterr().out
        header, values = out.strip().splitlines()
        assert header.split() == ["MS", "VS", "CS", "ANPS", "scored"]
        assert values.split()[:3] == ["1.000", "0.500", "0.650"]

    def test_score_json_format(self, tmp_path, capsys):
        trials = tmp_path / "trials.jsonl"
        trials.write_text(
            '{"trial_id": 0, "made": true, "valid": true, "raw_score": 1.0,'
            ' "smaller_better": true}\n')
        assert main(["score", "--trials-file", str(trials),
                     "--format", "json"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["ANPS"] == 0.5  # 1/(1+1)


class TestReportCommand:
    def test_report_regenerates_from_phase_reports(self, completed_run,
                                                   tmp_path, capsys):
        # work on a copy: the session workspace must stay byte-stable
        workspace = tmp_path / "report_ws"
        shutil.copytree(completed_run, workspace)
        research = workspace / "research_report.md"
        research.unlink()
        assert main(["report", "--workspace", str(workspace)]) == 0
        regenerated = research.read_text()
        for header in ("PRELIMINARY EDA", "DATA CLEANING", "CONCLUSION"):
            assert header in regenerated
        assert json.loads(
            (workspace / "model_report.json").read_text())["selected"] \
            in regenerated


class TestTrialsCommand:
    def test_two_parallel_graded_trials(self, titanic_workspace, capsys):
        code = main(["run", "--workspace", str(titanic_workspace),
                     "--trials", "2", "--parallel", "2", "--seed", "31"])
        assert code == 0
        out = capsys.readouterr().out
        assert "trial 0: made=True valid=True" in out
        assert "trial 1: made=True valid=True" in out
        from tabpilot.metrics import read_trials, summarize_trials
        records = read_trials(titanic_workspace / "trials.jsonl")
        assert len(records) == 2
        summary = summarize_trials(records)
        assert summary.MS == summary.VS == 1.0
        assert all(r.raw_score >= 0.78 for r in records)

    def test_bad_config_is_a_usage_error(self, titanic_workspace, tmp_path,
                                         capsys):
        bad = tmp_path / "config.json"
        bad.write_text('{"max_debug_tries": "not a number"}')
        assert main(["run", "--workspace", str(titanic_workspace),
                     "--config", str(bad)]) == 2


class TestPhaseCommand:
    def test_single_phase_resumes_from_artifacts(self, completed_run, tmp_path,
                                                 capsys):
        workspace = tmp_path / "resume"
        shutil.copytree(completed_run, workspace)
        (workspace / "submission.csv").unlink()
        code = main(["phase", "--workspace", str(workspace),
                     "--phase", "model_build_validate_predict", "--seed", "11"])
        assert code == 0
        assert (workspace / "submission.csv").exists()

    def test_run_missing_input_exits_one(self, tmp_path, capsys):
        assert main(["run", "--workspace", str(tmp_path)]) == 1
        assert "overview.txt" in capsys.readouterr().err
