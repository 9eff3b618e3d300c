"""Reviewer: score the phase's agents and collect improvement notes."""

from __future__ import annotations

import json

from .base import ReviewReport, fill_prompt, load_prompt


def deterministic_review(active_agents: list[str], phase_passed: bool,
                         debug_rounds: int) -> ReviewReport:
    """Rubric: 5 for a clean pass, 3 for a pass that needed debugging,
    1 for a failed phase; suggestions templated from the outcome."""
    scores: dict[str, int] = {}
    suggestions: dict[str, str] = {}
    for agent in active_agents:
        if not phase_passed:
            scores[agent] = 1
            suggestions[agent] = (
                "the phase failed; simplify the approach and double-check "
                "column references against the workspace files"
            )
        elif agent == "developer" and debug_rounds > 0:
            scores[agent] = 3
            suggestions[agent] = (
                f"passed only after {debug_rounds} debug round(s); validate "
                "inputs before generating the artifact"
            )
        else:
            scores[agent] = 5
            suggestions[agent] = ""
    report = ReviewReport(scores=scores, suggestions=suggestions)
    report.validate()
    return report


def review_with_model(active_agents: list[str], outcome_text: str,
                      complete) -> ReviewReport:
    prompt = fill_prompt(
        load_prompt("reviewer_task"),
        agents=", ".join(active_agents),
        outcome=outcome_text,
    )
    reply = complete(load_prompt("reviewer_system"), prompt)
    try:
        payload = json.loads(_strip_fences(reply))
        scores = {a: int(payload[a]["score"]) for a in active_agents}
        suggestions = {a: str(payload[a].get("suggestion", "")) for a in active_agents}
        report = ReviewReport(scores=scores, suggestions=suggestions)
        report.validate()
        return report
    except Exception:
        # malformed reply: fall back to the rubric with neutral scores
        return ReviewReport(scores={a: 3 for a in active_agents},
                            suggestions={a: "review reply was malformed" for a in active_agents})


def _strip_fences(text: str) -> str:
    text = text.strip()
    if text.startswith("```"):
        text = text.split("\n", 1)[1] if "\n" in text else text
        if text.endswith("```"):
            text = text[: -3]
    return text.strip()
