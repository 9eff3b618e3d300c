"""Summarizer: six-question phase reports and the final research report."""

from __future__ import annotations

from pathlib import Path

from ..tabular import Table, schema_diff
from .base import FIXED_QUESTION_2, PhaseReport

PHASE_QUESTIONS = {
    "q1": "What files did you process and which files were generated? "
          "Answer with the file paths.",
    "q3": "What issues did this phase find in the data, and how were they handled?",
    "q4": "Which statistics or results from this phase matter most for the next one?",
    "q5": "Did the development loop hit errors or failed checks, and how many "
          "rounds did it need?",
    "q6": "What should the next phase pay attention to?",
}


def describe_feature_changes(before: Table | None, after: Table | None) -> str:
    if before is None or after is None:
        return "No feature set changed in this phase: none."
    diff = schema_diff(before, after)
    parts = []
    if diff["created"]:
        parts.append("created: " + ", ".join(diff["created"]))
    if diff["deleted"]:
        parts.append("deleted: " + ", ".join(diff["deleted"]))
    if diff["retyped"]:
        parts.append("type changed: " + ", ".join(diff["retyped"]))
    if not parts:
        return "No features were created, deleted or retyped."
    return "; ".join(parts) + "."


def build_phase_report(
    phase_key: str,
    files_read: list[str],
    files_written: list[str],
    before: Table | None,
    after: Table | None,
    issue_notes: str,
    stats_notes: str,
    rounds_used: int,
    passed: bool,
    next_notes: str,
) -> PhaseReport:
    answer1_read = ", ".join(files_read) if files_read else "none"
    answer1_written = ", ".join(files_written) if files_written else "none"
    answers = [
        f"Read: {answer1_read}. Generated: {answer1_written}.",
        describe_feature_changes(before, after),
        issue_notes or "No data issues surfaced in this phase.",
        stats_notes or "No statistics were recorded.",
        (f"The loop used {rounds_used} round(s) and "
         f"{'passed' if passed else 'did not pass'} its checks."),
        next_notes or "No special considerations.",
    ]
    report = PhaseReport(
        phase_key=phase_key,
        questions=[
            PHASE_QUESTIONS["q1"],
            FIXED_QUESTION_2,
            PHASE_QUESTIONS["q3"],
            PHASE_QUESTIONS["q4"],
            PHASE_QUESTIONS["q5"],
            PHASE_QUESTIONS["q6"],
        ],
        answers=answers,
    )
    report.validate()
    return report


REPORT_SECTIONS = [
    ("pre_eda", "PRELIMINARY EDA"),
    ("data_cleaning", "DATA CLEANING"),
    ("deep_eda", "DEEP EDA"),
    ("feature_engineering", "FEATURE ENGINEERING"),
    ("model_build_validate_predict", "MODEL BUILDING, VALIDATION, AND PREDICTION"),
]


def final_report(phase_reports: dict[str, PhaseReport],
                 failed_phase: str | None = None,
                 best_model_line: str = "") -> str:
    """Assemble the run-level report from the per-phase reports."""
    lines = ["# COMPETITION RESEARCH REPORT", ""]
    for number, (phase_key, title) in enumerate(REPORT_SECTIONS, start=1):
        lines.append(f"## {number}. {title}")
        report = phase_reports.get(phase_key)
        if report is None:
            if failed_phase is not None:
                lines.append(f"Not reached: the run stopped at {failed_phase}.")
            lines.append("")
            continue
        for question, answer in zip(report.questions, report.answers):
            lines.append(f"- {answer}")
        lines.append("")
    lines.append(f"## {len(REPORT_SECTIONS) + 1}. CONCLUSION")
    if failed_phase is not None:
        lines.append(
            f"The run failed during {failed_phase}; earlier sections describe "
            "the work completed before the failure."
        )
    else:
        if best_model_line:
            lines.append(best_model_line)
        lines.append(
            "All six phases completed; the submission file passed the "
            "validation checks."
        )
    lines.append("")
    return "\n".join(lines)


def write_final_report(path: Path, content: str) -> None:
    path.write_text(content, encoding="utf-8")
