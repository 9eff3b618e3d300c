"""Deterministic decision rules shared by the offline planner and developer.

Both agents must agree on what the workspace calls for (which columns to
drop, fill, clip, encode, scale, and which features feed the model), so the
rules live here and each agent renders or compiles the same profile.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..tabular import DType, Table
from .base import CompetitionInfo

SPARSE_DROP_THRESHOLD = 0.5
CONTINUOUS_MIN_DISTINCT = 20     # below this a numeric column is treated as discrete
ONE_HOT_MAX_CATEGORIES = 10
HIGH_CARDINALITY_TEXT = 20


@dataclass
class CleaningProfile:
    drop_columns: list[str]
    fill_numeric: dict[str, list[str]] = field(default_factory=dict)   # table -> columns
    fill_categorical: dict[str, list[str]] = field(default_factory=dict)
    clip_columns: dict[str, list[str]] = field(default_factory=dict)
    dedupe_train: bool = True


@dataclass
class FeatureProfile:
    derivations: list[tuple[str, str]]          # (new name, expression)
    one_hot_columns: list[str]
    drop_text_columns: list[str]
    scale_columns: list[str]


@dataclass
class ModelProfile:
    target: str
    id_column: str | None
    feature_columns: list[str]
    task_type: str
    metric: str
    candidates: list[str]
    grids: dict[str, dict]
    cv_folds: int


def continuous_numeric_columns(table: Table, info: CompetitionInfo) -> list[str]:
    exclude = set(info.id_columns()) | {info.target_variable}
    out = []
    for name in table.names:
        if name in exclude or not table.is_numeric(name):
            continue
        distinct = len(set(v for v in table.column(name) if v is not None))
        if distinct >= CONTINUOUS_MIN_DISTINCT:
            out.append(name)
    return out


def cleaning_profile(train: Table, test: Table, info: CompetitionInfo) -> CleaningProfile:
    target = info.target_variable
    drop = []
    if train.n_rows:
        for name in train.names:
            if name == target:
                continue
            if train.missing_count(name) / train.n_rows > SPARSE_DROP_THRESHOLD:
                drop.append(name)

    profile = CleaningProfile(drop_columns=drop)
    for key, table in (("train", train), ("test", test)):
        numeric, categorical = [], []
        for name in table.names:
            if name in drop or name == target:
                continue
            if table.missing_count(name) == 0:
                continue
            (numeric if table.is_numeric(name) else categorical).append(name)
        profile.fill_numeric[key] = numeric
        profile.fill_categorical[key] = categorical
        kept = table.without_columns([c for c in drop if table.has_column(c)])
        profile.clip_columns[key] = continuous_numeric_columns(kept, info)
    return profile


FAMILY_DERIVATIONS = [
    # applied only when every referenced column is present and numeric
    ("FamilySize", "SibSp + Parch + 1"),
    ("IsAlone", "(FamilySize == 1)"),
    ("AgeBins", "(Age >= 12) + (Age >= 18) + (Age >= 35) + (Age >= 60)"),
    ("FarePerPerson", "Fare / FamilySize"),
]

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


def feature_profile(cleaned_train: Table, info: CompetitionInfo) -> FeatureProfile:
    target = info.target_variable
    ids = set(info.id_columns())

    derivations = []
    available = set(n for n in cleaned_train.names if cleaned_train.is_numeric(n))
    for new_name, expression in FAMILY_DERIVATIONS:
        refs = set(_IDENT_RE.findall(expression))
        if refs <= available and new_name not in cleaned_train.names:
            derivations.append((new_name, expression))
            available.add(new_name)

    one_hot, drop_text = [], []
    for name in cleaned_train.names:
        if name == target or name in ids:
            continue
        if cleaned_train.dtype(name) in (DType.Text, DType.Boolean):
            distinct = len(set(v for v in cleaned_train.column(name) if v is not None))
            if distinct <= ONE_HOT_MAX_CATEGORIES:
                one_hot.append(name)
            elif distinct > HIGH_CARDINALITY_TEXT:
                drop_text.append(name)
            else:
                one_hot.append(name)  # mid-cardinality still encodes tolerably

    scale = continuous_numeric_columns(cleaned_train, info)
    scale += [n for n, _ in derivations if n in ("FarePerPerson",)]
    return FeatureProfile(
        derivations=derivations,
        one_hot_columns=one_hot,
        drop_text_columns=drop_text,
        scale_columns=sorted(set(scale)),
    )


DEFAULT_GRIDS = {
    "logistic_or_linear": {"l2": [0.0, 1.0]},
    "decision_tree": {"max_depth": [5, 10]},
    "random_forest": {"n_estimators": [60], "max_depth": ["none", 12]},
}


def model_profile(processed_train: Table, info: CompetitionInfo,
                  cv_folds: int = 5) -> ModelProfile:
    target = info.target_variable
    ids = [c for c in info.id_columns() if processed_train.has_column(c)]
    id_column = ids[0] if ids else None
    features = [
        n for n in processed_train.names
        if n != target and n not in set(ids)
        and processed_train.is_numeric(n)
        and processed_train.missing_count(n) == 0
    ]
    target_cells = [v for v in processed_train.column(target) if v is not None]
    distinct_targets = len(set(target_cells))
    numeric_target = processed_train.is_numeric(target)
    classification = (not numeric_target) or distinct_targets <= 20
    task = "classification" if classification else "regression"
    return ModelProfile(
        target=target,
        id_column=id_column,
        feature_columns=features,
        task_type=task,
        metric="accuracy" if classification else "rmse",
        candidates=["logistic_or_linear", "decision_tree", "random_forest"],
        grids=DEFAULT_GRIDS,
        cv_folds=cv_folds,
    )
