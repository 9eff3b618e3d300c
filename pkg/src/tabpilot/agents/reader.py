"""Reader: digest the competition brief and data into structured info."""

from __future__ import annotations

import re

from ..tabular import DType, Table
from .base import CompetitionInfo, NoTargetIdentified

# metric keywords scanned in the brief; first hit wins
SMALLER_BETTER_METRICS = (
    "rmsle", "rmse", "mae", "mape", "log loss", "logloss", "mean squared",
    "mean absolute", "error", "deviance",
)
LARGER_BETTER_METRICS = (
    "accuracy", "auc", "f1", "precision", "recall", "r2", "r-squared",
    "map@", "ndcg",
)

_DATEISH_RE = re.compile(
    r"^(\d{4}[-/]\d{1,2}[-/]\d{1,2}|\d{1,2}[-/]\d{1,2}[-/]\d{4})$"
)


def looks_like_date(value: str) -> bool:
    """ISO order or day/month orderings, 4-digit years only."""
    return bool(_DATEISH_RE.match(value.strip()))


def classify_column(table: Table, name: str) -> str:
    dtype = table.dtype(name)
    cells = [v for v in table.column(name) if v is not None]
    if cells and len(set(cells)) == len(cells) and "id" in name.lower():
        return "id"
    if dtype in (DType.Integer, DType.Float):
        return "numerical"
    if dtype is DType.Datetime:
        return "datetime"
    if dtype is DType.Text and cells and all(looks_like_date(str(v)) for v in cells):
        return "datetime"
    if dtype is DType.Boolean:
        return "categorical"
    return "categorical"


def sniff_metric(overview_text: str) -> tuple[str, bool]:
    lowered = overview_text.lower()
    hits: list[tuple[int, str, bool]] = []
    for keyword in SMALLER_BETTER_METRICS:
        index = lowered.find(keyword)
        if index >= 0:
            hits.append((index, keyword, True))
    for keyword in LARGER_BETTER_METRICS:
        index = lowered.find(keyword)
        if index >= 0:
            hits.append((index, keyword, False))
    if not hits:
        return "score", False  # nothing recognized: assume larger-better
    index, keyword, smaller = min(hits)
    return keyword, smaller


def _column_summary(table: Table, classes: dict[str, str]) -> str:
    lines = []
    for name in table.names:
        cells = table.column(name)
        present = [v for v in cells if v is not None]
        distinct = len(set(present))
        missing = len(cells) - len(present)
        sample = ", ".join(repr(v) for v in present[:3])
        lines.append(
            f"- {name}: {classes[name]} ({table.dtype(name).value}); "
            f"{distinct} distinct, {missing} missing; e.g. {sample}"
        )
    return "\n".join(lines)


def reader_execute(overview_text: str, train: Table, test: Table) -> CompetitionInfo:
    """Deterministic reading: sniff feature classes, target and metric."""
    if not overview_text.strip():
        raise ValueError("overview text is empty")
    if not train.names or not test.names:
        raise ValueError("previews must carry headers")

    classes = {name: classify_column(train, name) for name in train.names}
    candidates = [
        name for name in train.names
        if name not in set(test.names) and classes[name] != "id"
    ]
    if not candidates:
        raise NoTargetIdentified(
            "train and test expose the same columns; cannot infer a target"
        )
    target = candidates[0]

    metric_name, smaller = sniff_metric(overview_text)
    paragraphs = [p.strip() for p in overview_text.split("\n\n") if p.strip()]
    overview_blurb = paragraphs[0] if paragraphs else overview_text.strip()

    type_groups: dict[str, list[str]] = {}
    for name, cls in classes.items():
        type_groups.setdefault(cls, []).append(name)
    class_listing = "\n".join(
        f"- {cls}: {', '.join(names)}" for cls, names in sorted(type_groups.items())
    )

    info = CompetitionInfo(
        overview=overview_blurb,
        files=(
            f"train.csv: {train.n_rows} rows x {train.n_columns} columns with the "
            f"target; test.csv: {test.n_rows} rows x {test.n_columns} columns to "
            "predict; sample_submission.csv: required output format."
        ),
        problem_definition=(
            f"Predict {target} for every row of test.csv using a model fitted "
            "on train.csv."
        ),
        data_information=(
            "Feature classification:\n" + class_listing + "\n\nColumn details:\n"
            + _column_summary(train, classes)
        ),
        target_variable=target,
        evaluation_metric=(
            f"The brief names {metric_name!r} as the evaluation metric."
        ),
        submission_format=(
            f"CSV with a header and {test.n_rows} data rows: the identifier "
            "column(s) plus the predicted target."
        ),
        other_aspects="No further constraints were recognized in the brief.",
        feature_classes=classes,
        metric_name=metric_name,
        smaller_better=smaller,
    )
    info.validate()
    return info


INFO_TARGET_RE = re.compile(r"^## 5\. Target Variable\n(.+?)$", re.MULTILINE)


def parse_target_from_info(markdown: str) -> str | None:
    match = INFO_TARGET_RE.search(markdown)
    if match:
        return match.group(1).strip().splitlines()[0].strip()
    return None


def _preview_text(table: Table, rows: int = 5) -> str:
    lines = [",".join(table.names)]
    for i in range(min(rows, table.n_rows)):
        lines.append(",".join("" if v is None else str(v) for v in table.row(i)))
    return "\n".join(lines)


_JSON_BLOCK_RE = re.compile(r"```(?:json)?\n(.*?)```", re.DOTALL)


def reader_with_model(overview_text: str, train: Table, test: Table,
                      complete) -> CompetitionInfo:
    """Model-backed reading; structure comes from a fenced JSON block and the
    deterministic sniffer backfills anything the reply leaves out."""
    import json

    from .base import fill_prompt, load_prompt

    fallback = reader_execute(overview_text, train, test)
    prompt = fill_prompt(
        load_prompt("reader_task"),
        overview=overview_text,
        train_preview=_preview_text(train),
        test_preview=_preview_text(test),
    )
    reply = complete(load_prompt("reader_system"), prompt)
    match = _JSON_BLOCK_RE.search(reply)
    if not match:
        return fallback
    try:
        payload = json.loads(match.group(1))
    except json.JSONDecodeError:
        return fallback
    classes = payload.get("feature_classes") or fallback.feature_classes
    classes = {n: classes.get(n, fallback.feature_classes[n]) for n in train.names}
    target = payload.get("target") or fallback.target_variable
    metric = payload.get("metric") or {}
    info = CompetitionInfo(
        overview=reply.split("```")[0].strip() or fallback.overview,
        files=fallback.files,
        problem_definition=fallback.problem_definition,
        data_information=fallback.data_information,
        target_variable=target,
        evaluation_metric=fallback.evaluation_metric,
        submission_format=fallback.submission_format,
        other_aspects=fallback.other_aspects,
        feature_classes=classes,
        metric_name=metric.get("name", fallback.metric_name),
        smaller_better=bool(metric.get("smaller_better", fallback.smaller_better)),
    )
    info.validate()
    return info
