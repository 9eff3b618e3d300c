"""Shared agent contracts: roles, competition info, plans and reports."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from importlib import resources


class AgentRole(Enum):
    Reader = "reader"
    Planner = "planner"
    Developer = "developer"
    Reviewer = "reviewer"
    Summarizer = "summarizer"

    @property
    def backend_tier(self) -> str:
        # planning and coding demand the stronger model tier
        return "heavy" if self in (AgentRole.Planner, AgentRole.Developer) else "light"


MAX_PLAN_TASKS = 4
MAX_EDA_IMAGES = 10

FEATURE_CLASSES = ("id", "numerical", "categorical", "datetime")

INFO_SECTIONS = (
    "Competition Overview",
    "Files",
    "Problem Definition",
    "Data Information",
    "Target Variable",
    "Evaluation Metric",
    "Submission Format",
    "Other Key Aspects",
)


class AgentError(Exception):
    pass


class NoTargetIdentified(AgentError):
    """Train and test expose identical columns; no target can be inferred."""


@dataclass
class CompetitionInfo:
    overview: str
    files: str
    problem_definition: str
    data_information: str
    target_variable: str
    evaluation_metric: str
    submission_format: str
    other_aspects: str
    feature_classes: dict[str, str] = field(default_factory=dict)
    metric_name: str = "accuracy"
    smaller_better: bool = False

    def validate(self) -> None:
        for name, cls in self.feature_classes.items():
            if cls not in FEATURE_CLASSES:
                raise AgentError(f"column {name!r} has unknown class {cls!r}")
        if not self.target_variable:
            raise AgentError("no target variable recorded")

    def id_columns(self) -> list[str]:
        return [n for n, c in self.feature_classes.items() if c == "id"]

    def to_markdown(self) -> str:
        direction = "smaller is better" if self.smaller_better else "larger is better"
        bodies = [
            self.overview,
            self.files,
            self.problem_definition,
            self.data_information,
            self.target_variable,
            f"{self.evaluation_metric}\n\nMetric: {self.metric_name} ({direction}).",
            self.submission_format,
            self.other_aspects,
        ]
        parts = ["# Competition Information"]
        for i, (title, body) in enumerate(zip(INFO_SECTIONS, bodies), start=1):
            parts.append(f"## {i}. {title}\n{body.strip()}\n")
        return "\n".join(parts)


@dataclass
class PlanTask:
    objective: str
    actions: list[str] = field(default_factory=list)
    tool_refs: list[str] = field(default_factory=list)
    constraints: str = ""


@dataclass
class PlanDoc:
    phase_key: str
    tasks: list[PlanTask]
    raw_text: str
    planned_images: int = 0

    def validate(self) -> None:
        if not 1 <= len(self.tasks) <= MAX_PLAN_TASKS:
            raise AgentError(
                f"plan must contain 1..{MAX_PLAN_TASKS} tasks, has {len(self.tasks)}"
            )
        if self.planned_images > MAX_EDA_IMAGES:
            raise AgentError(
                f"plan schedules {self.planned_images} images, limit is {MAX_EDA_IMAGES}"
            )

    def truncated(self) -> PlanDoc:
        """Clamp the plan to its count limits (used after a failed regeneration)."""
        tasks = self.tasks[:MAX_PLAN_TASKS]
        images = min(self.planned_images, MAX_EDA_IMAGES)
        raw = self.raw_text
        if len(tasks) != len(self.tasks) or images != self.planned_images:
            raw += "\n\n(Plan clamped to the task and image limits.)"
        return PlanDoc(phase_key=self.phase_key, tasks=tasks, raw_text=raw,
                       planned_images=images)


@dataclass
class ReviewReport:
    scores: dict[str, int]
    suggestions: dict[str, str]

    def validate(self) -> None:
        for agent, score in self.scores.items():
            if not 1 <= score <= 5:
                raise AgentError(f"score for {agent} outside [1, 5]: {score}")

    def to_markdown(self) -> str:
        lines = ["## Review"]
        for agent in self.scores:
            lines.append(f"- {agent}: score {self.scores[agent]}/5")
            suggestion = self.suggestions.get(agent, "")
            if suggestion:
                lines.append(f"  - suggestion: {suggestion}")
        return "\n".join(lines)


FIXED_QUESTION_2 = (
    "Which features changed during this phase? Name every feature that was "
    "created or deleted, and every feature whose type was modified, with a "
    "short explanation for each. (This question is fixed for every phase.)"
)


@dataclass
class PhaseReport:
    phase_key: str
    questions: list[str]
    answers: list[str]

    def validate(self) -> None:
        if len(self.questions) != 6 or len(self.answers) != 6:
            raise AgentError("a phase report carries exactly six question/answer pairs")
        if self.questions[1] != FIXED_QUESTION_2:
            raise AgentError("question 2 must be the fixed feature-change question")

    def to_markdown(self) -> str:
        lines = ["REPORT", "", "QUESTIONS AND ANSWERS", ""]
        for i, (question, answer) in enumerate(zip(self.questions, self.answers), 1):
            lines.append(f"Question {i}")
            lines.append(question)
            lines.append(f"Answer {i}")
            lines.append(answer)
            lines.append("")
        return "\n".join(lines)


def load_prompt(name: str) -> str:
    return resources.files("tabpilot.agents").joinpath(
        "prompts", f"{name}.txt"
    ).read_text(encoding="utf-8")


def fill_prompt(template: str, **values: str) -> str:
    out = template
    for key, value in values.items():
        out = out.replace("{" + key + "}", str(value))
    return out
