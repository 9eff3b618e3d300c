"""Agent roles: reader, planner, developer, reviewer, summarizer."""

from .base import (
    FIXED_QUESTION_2,
    MAX_EDA_IMAGES,
    MAX_PLAN_TASKS,
    AgentError,
    AgentRole,
    CompetitionInfo,
    NoTargetIdentified,
    PhaseReport,
    PlanDoc,
    PlanTask,
    ReviewReport,
)
from .developer import DeterministicDeveloper, ModelBackedDeveloper
from .planner import deterministic_plan, parse_plan_markdown, plan_with_model
from .reader import reader_execute
from .reviewer import deterministic_review, review_with_model
from .summarizer import build_phase_report, describe_feature_changes, final_report
