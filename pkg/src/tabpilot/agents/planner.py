"""Planner: turn competition state into a bounded task plan."""

from __future__ import annotations

import re

from ..tabular import Table
from .base import (
    MAX_EDA_IMAGES,
    MAX_PLAN_TASKS,
    AgentError,
    CompetitionInfo,
    PlanDoc,
    PlanTask,
    fill_prompt,
    load_prompt,
)
from . import strategy


def _render(plan: PlanDoc, user_rules: str) -> str:
    lines = [f"# Plan: {plan.phase_key}", ""]
    if user_rules.strip():
        lines.append("User rules honored by this plan:")
        for rule in user_rules.strip().splitlines():
            if rule.strip():
                lines.append(f"- {rule.strip()}")
        lines.append("")
    for i, task in enumerate(plan.tasks, 1):
        lines.append(f"### Task {i}: {task.objective}")
        for action in task.actions:
            lines.append(f"- {action}")
        if task.tool_refs:
            lines.append(f"- tools: {', '.join(task.tool_refs)}")
        if task.constraints:
            lines.append(f"- constraints: {task.constraints}")
        lines.append("")
    if plan.planned_images:
        lines.append(f"Images: {plan.planned_images}")
    return "\n".join(lines)


def deterministic_plan(phase_key: str, info: CompetitionInfo,
                       train: Table, test: Table,
                       retrieved_tools: list[str], user_rules: str) -> PlanDoc:
    """Rule-driven plan mirroring what the offline developer will compile."""
    target = info.target_variable
    if phase_key == "pre_eda":
        tasks = [
            PlanTask("Describe the dataset structure",
                     ["print train and test shapes, column types and missing counts"]),
            PlanTask("Profile numeric features",
                     ["print summary statistics for every numeric feature",
                      "plot up to four histograms into pre_eda/images/"]),
            PlanTask("Profile categorical features",
                     ["print value frequencies for low-cardinality features",
                      "plot up to four bar charts into pre_eda/images/"]),
            PlanTask("Summarize findings",
                     ["print a findings block naming missing-value and outlier risks"]),
        ]
        images = 8
    elif phase_key == "data_cleaning":
        profile = strategy.cleaning_profile(train, test, info)
        tasks = [
            PlanTask(
                "Handle missing values",
                [f"fill numeric gaps with the column median: {profile.fill_numeric}",
                 f"fill categorical gaps with the column mode: {profile.fill_categorical}"],
                tool_refs=["fill_missing_values"],
            ),
            PlanTask(
                "Drop sparse columns",
                [f"drop columns above {strategy.SPARSE_DROP_THRESHOLD:.0%} missing: "
                 f"{profile.drop_columns or 'none'}"],
                tool_refs=["remove_columns_with_missing_data"],
            ),
            PlanTask(
                "Clip outliers",
                [f"IQR-clip continuous numeric columns with factor 1.5: "
                 f"{profile.clip_columns}"],
                tool_refs=["detect_and_handle_outliers_iqr"],
            ),
            PlanTask(
                "Deduplicate and save",
                ["remove duplicate training rows",
                 "write cleaned_train.csv and cleaned_test.csv"],
                tool_refs=["remove_duplicates"],
            ),
        ]
        images = 0
    elif phase_key == "deep_eda":
        tasks = [
            PlanTask("Univariate statistics",
                     [f"print summary statistics of the cleaned numeric features"]),
            PlanTask("Relations to the target",
                     [f"print mean {target} per category of each categorical feature"]),
            PlanTask("Correlation analysis",
                     ["print the correlation matrix of the numeric features"]),
            PlanTask("Summarize insights",
                     ["print an insights block ranking features by observed signal"]),
        ]
        images = 4
    elif phase_key == "feature_engineering":
        profile = strategy.feature_profile(train, info)
        tasks = [
            PlanTask(
                "Derive combination features",
                [f"derive {name} = {expr}" for name, expr in profile.derivations]
                or ["no derivations apply to this schema"],
            ),
            PlanTask(
                "Encode categorical features",
                [f"one-hot encode {profile.one_hot_columns or 'nothing'} fitted on train"],
                tool_refs=["one_hot_encode"],
            ),
            PlanTask(
                "Prune unusable columns",
                [f"drop high-cardinality text columns {profile.drop_text_columns or 'none'}"],
                tool_refs=["remove_columns_with_missing_data"],
            ),
            PlanTask(
                "Scale and save",
                [f"standard-scale {profile.scale_columns or 'nothing'} with train statistics",
                 "write processed_train.csv and processed_test.csv"],
                tool_refs=["scale_features"],
            ),
        ]
        images = 0
    elif phase_key == "model_build_validate_predict":
        profile = strategy.model_profile(train, info)
        tasks = [
            PlanTask(
                "Assemble the feature matrix",
                [f"use numeric non-identifier features: {profile.feature_columns}"],
            ),
            PlanTask(
                "Train, validate and select",
                [f"cross-validate {profile.candidates} over the default grids "
                 f"({profile.cv_folds} folds, metric {profile.metric})"],
                tool_refs=["train_and_validation_and_select_the_best_model"],
            ),
            PlanTask(
                "Predict and write the submission",
                [f"predict {target} for test.csv",
                 "write submission.csv shaped like sample_submission.csv"],
            ),
        ]
        images = 0
    else:
        raise AgentError(f"no plan template for phase {phase_key!r}")

    plan = PlanDoc(phase_key=phase_key, tasks=tasks, raw_text="",
                   planned_images=images)
    plan.raw_text = _render(plan, user_rules)
    plan.validate()
    return plan


# --- model-backed planning ----------------------------------------------------

_TASK_HEADER_RE = re.compile(r"^#{0,4}\s*Task\s+(\d+)\s*[:.]?\s*(.*)$",
                             re.IGNORECASE | re.MULTILINE)
_IMAGES_RE = re.compile(r"^Images:\s*(\d+)\s*$", re.IGNORECASE | re.MULTILINE)


def parse_plan_markdown(phase_key: str, text: str) -> PlanDoc:
    """Extract a PlanDoc from model output; counts are NOT clamped here."""
    headers = list(_TASK_HEADER_RE.finditer(text))
    tasks: list[PlanTask] = []
    for i, match in enumerate(headers):
        end = headers[i + 1].start() if i + 1 < len(headers) else len(text)
        body = text[match.end():end]
        actions = [line.strip("- ").strip()
                   for line in body.splitlines() if line.strip().startswith("-")]
        tasks.append(PlanTask(objective=match.group(2).strip() or f"task {i + 1}",
                              actions=actions))
    if not tasks:
        tasks = [PlanTask(objective=text.strip().splitlines()[0] if text.strip() else "plan",
                          actions=[])]
    images_match = _IMAGES_RE.search(text)
    images = int(images_match.group(1)) if images_match else 0
    return PlanDoc(phase_key=phase_key, tasks=tasks, raw_text=text,
                   planned_images=images)


def plan_with_model(phase_key: str, info: CompetitionInfo, state_summary: str,
                    retrieved_tools: list[str], user_rules: str,
                    complete) -> PlanDoc:
    """One model call; one regeneration on limit violations; then clamp."""
    prompt = fill_prompt(
        load_prompt("planner_task"),
        phase_name=phase_key,
        background_info=info.to_markdown(),
        state_info=state_summary,
        tools=", ".join(retrieved_tools) or "none",
        user_rules=user_rules or "none",
    )
    system = load_prompt("planner_system")
    text = complete(system, prompt)
    plan = parse_plan_markdown(phase_key, text)
    try:
        plan.validate()
        return plan
    except AgentError:
        pass
    retry_prompt = prompt + (
        f"\n\nThe previous plan violated the limits (at most {MAX_PLAN_TASKS} "
        f"tasks and {MAX_EDA_IMAGES} images). Regenerate within the limits."
    )
    text = complete(system, retry_prompt)
    plan = parse_plan_markdown(phase_key, text)
    try:
        plan.validate()
        return plan
    except AgentError:
        clamped = plan.truncated()
        clamped.validate()
        return clamped
