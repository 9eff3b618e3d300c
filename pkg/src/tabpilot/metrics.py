"""Run scoring: normalized performance, trial aggregation, offline grading.

A trial's raw score comes either from an external grader callback or from
the built-in holdout grader, which carves a seeded 20% slice out of
train.csv before the run, presents it as the trial's test set, and grades
the submission against the withheld labels.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .tabular import DType, Table, read_csv, write_csv


class DomainError(ValueError):
    pass


def nps(s: float, smaller_better: bool) -> float:
    """Normalized performance score: 1/(1+s) when smaller is better, else s."""
    if smaller_better:
        if s < 0:
            raise DomainError(f"smaller-better scores must be >= 0, got {s}")
        return 1.0 / (1.0 + s)
    if not 0.0 <= s <= 1.0:
        raise DomainError(f"larger-better scores must lie in [0, 1], got {s}")
    return s


def anps(scores: list[float]) -> float:
    """Mean normalized score over the scored trials; 0 when none scored."""
    if not scores:
        return 0.0
    return sum(scores) / len(scores)


def comprehensive_score(vs: float, anps_value: float) -> float:
    if not 0.0 <= vs <= 1.0:
        raise DomainError(f"VS must lie in [0, 1], got {vs}")
    if not 0.0 <= anps_value <= 1.0:
        raise DomainError(f"ANPS must lie in [0, 1], got {anps_value}")
    return 0.5 * vs + 0.5 * anps_value


@dataclass
class TrialRecord:
    trial_id: int
    made: bool
    valid: bool
    raw_score: float | None = None
    smaller_better: bool = False

    def __post_init__(self):
        if self.valid and not self.made:
            raise ValueError("a valid trial implies a made submission")
        if self.raw_score is not None and not self.valid:
            raise ValueError("a scored trial implies a valid submission")

    def to_json(self) -> dict:
        return {
            "trial_id": self.trial_id,
            "made": self.made,
            "valid": self.valid,
            "raw_score": self.raw_score,
            "smaller_better": self.smaller_better,
        }

    @classmethod
    def from_json(cls, payload: dict) -> TrialRecord:
        return cls(
            trial_id=payload["trial_id"],
            made=payload["made"],
            valid=payload["valid"],
            raw_score=payload.get("raw_score"),
            smaller_better=payload.get("smaller_better", False),
        )


@dataclass
class ScoreSummary:
    MS: float
    VS: float
    ANPS: float
    CS: float
    scored_trials: int

    def to_json(self) -> dict:
        return {"MS": self.MS, "VS": self.VS, "ANPS": self.ANPS,
                "CS": self.CS, "scored_trials": self.scored_trials}


def summarize_trials(records: list[TrialRecord]) -> ScoreSummary:
    if not records:
        raise ValueError("summarize_trials needs at least one record")
    made = sum(1 for r in records if r.made) / len(records)
    valid = sum(1 for r in records if r.valid) / len(records)
    scored = [nps(r.raw_score, r.smaller_better)
              for r in records if r.raw_score is not None]
    mean_nps = anps(scored)
    return ScoreSummary(
        MS=made,
        VS=valid,
        ANPS=mean_nps,
        CS=comprehensive_score(valid, mean_nps),
        scored_trials=len(scored),
    )


def write_trials(records: list[TrialRecord], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record.to_json()) + "\n")


def read_trials(path: str | Path) -> list[TrialRecord]:
    records = []
    with Path(path).open("r", encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                records.append(TrialRecord.from_json(json.loads(line)))
    return records


# --- built-in holdout grader ---------------------------------------------------

HOLDOUT_LABEL_FILE = "holdout_labels.csv"


def build_holdout_workspace(source: Path, destination: Path, target: str,
                            id_column: str | None, seed: int,
                            holdout_fraction: float = 0.2) -> None:
    """Copy a workspace, holding a seeded slice of train.csv out as the test
    set.  The withheld labels land next to the workspace for grading."""
    destination.mkdir(parents=True, exist_ok=True)
    train = read_csv(source / "train.csv")
    n = train.n_rows
    holdout_size = max(1, int(round(n * holdout_fraction)))
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(
        entropy=seed, spawn_key=(0x801D,))))
    holdout = set(int(i) for i in rng.permutation(n)[:holdout_size])
    train_mask = [i not in holdout for i in range(n)]
    holdout_mask = [i in holdout for i in range(n)]

    reduced = train.filter_rows(train_mask)
    held = train.filter_rows(holdout_mask)
    write_csv(reduced, destination / "train.csv")
    write_csv(held.without_columns([target]), destination / "test.csv")

    label_columns = ([id_column] if id_column and held.has_column(id_column) else [])
    write_csv(held.select_columns(label_columns + [target]),
              destination.parent / f"{destination.name}_{HOLDOUT_LABEL_FILE}")

    sample_columns: list[tuple[str, DType, list]] = []
    if id_column and held.has_column(id_column):
        sample_columns.append((id_column, held.dtype(id_column), held.column(id_column)))
    labels = sorted(set(v for v in train.column(target) if v is not None),
                    key=lambda v: (str(type(v)), v))
    placeholder = [labels[i % len(labels)] for i in range(held.n_rows)]
    sample_columns.append((target, train.dtype(target), placeholder))
    write_csv(Table(sample_columns), destination / "sample_submission.csv")

    overview = source / "overview.txt"
    if overview.exists():
        (destination / "overview.txt").write_text(
            overview.read_text(encoding="utf-8"), encoding="utf-8")


def grade_submission(submission_path: Path, labels_path: Path, target: str,
                     id_column: str | None, metric: str) -> float:
    """Accuracy or RMSE of a submission against withheld labels."""
    submission = read_csv(submission_path)
    labels = read_csv(labels_path)
    if id_column and submission.has_column(id_column) and labels.has_column(id_column):
        predicted = dict(zip(submission.column(id_column), submission.column(target)))
        pairs = [(predicted.get(key), truth)
                 for key, truth in zip(labels.column(id_column), labels.column(target))]
        if any(p is None for p, _ in pairs):
            raise ValueError("submission is missing predictions for some holdout ids")
    else:
        if submission.n_rows != labels.n_rows:
            raise ValueError("submission and holdout labels differ in length")
        pairs = list(zip(submission.column(target), labels.column(target)))
    if metric == "accuracy":
        hits = sum(1 for predicted, truth in pairs
                   if _values_equal(predicted, truth))
        return hits / len(pairs)
    if metric == "rmse":
        return math.sqrt(sum((float(p) - float(t)) ** 2 for p, t in pairs) / len(pairs))
    raise ValueError(f"unknown grading metric {metric!r}")


def _values_equal(a, b) -> bool:
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        return float(a) == float(b)
    return str(a) == str(b)
