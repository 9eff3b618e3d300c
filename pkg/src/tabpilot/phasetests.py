"""Per-phase unit-test suites evaluated against workspace files.

Three suites gate the cleaning, feature-engineering and modeling phases.
Every run returns one result per suite test in a fixed order, even when an
early check fails.  A test whose subject file is absent or unparseable
passes vacuously (with an explanatory message) except for the existence and
readability checks themselves, so a single defect fails exactly one test.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

from .tabular import MISSING_LITERALS

DC_FILES = ("cleaned_train.csv", "cleaned_test.csv")
FE_FILES = ("processed_train.csv", "processed_test.csv")


@dataclass
class SuiteConfig:
    fe_min_features: int = 2
    fe_max_features_floor: int = 500
    fe_max_features_per_cleaned: int = 10
    fe_min_file_bytes: int = 1024
    categorical_range_max_distinct: int = 20


@dataclass
class TestResult:
    name: str
    passed: bool
    message: str

    def to_json(self) -> dict:
        return {"name": self.name, "passed": self.passed, "message": self.message}


@dataclass
class SuiteResult:
    phase: str
    results: list[TestResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def failures(self) -> list[TestResult]:
        return [r for r in self.results if not r.passed]

    def summary_lines(self) -> list[str]:
        lines = []
        for result in self.results:
            status = "PASS" if result.passed else "FAIL"
            lines.append(f"[{status}] {result.name}: {result.message}")
        return lines


@dataclass
class LenientCsv:
    """Raw header and string cells; None when the file cannot be parsed."""

    header: list[str]
    rows: list[list[str]]

    @property
    def n_rows(self) -> int:
        return len(self.rows)


def read_lenient(path: Path) -> LenientCsv | None:
    try:
        with path.open("r", encoding="utf-8", newline="") as handle:
            rows = list(csv.reader(handle))
    except (OSError, UnicodeDecodeError, csv.Error):
        return None
    if not rows:
        return None
    header = rows[0]
    for row in rows[1:]:
        if len(row) != len(header):
            return None  # ragged rows: not a rectangular table
    return LenientCsv(header=header, rows=rows[1:])


def _missing(cell: str) -> bool:
    return cell in MISSING_LITERALS


def infer_target(workspace: Path, train_name: str, test_name: str,
                 explicit: str | None) -> str | None:
    if explicit:
        return explicit
    info_path = workspace / "competition_info.txt"
    if info_path.exists():
        from .agents.reader import parse_target_from_info
        target = parse_target_from_info(info_path.read_text(encoding="utf-8"))
        if target:
            return target
    train = read_lenient(workspace / train_name)
    test = read_lenient(workspace / test_name)
    if train and test:
        extra = [c for c in train.header if c not in set(test.header)]
        if len(extra) == 1:
            return extra[0]
    return None


# --- individual checks --------------------------------------------------------

def _exists_check(workspace: Path, files: tuple[str, ...]) -> TestResult:
    missing = [f for f in files if not (workspace / f).exists()]
    if missing:
        return TestResult("test_document_exist", False,
                          f"missing file(s): {', '.join(missing)}")
    return TestResult("test_document_exist", True, f"{', '.join(files)} exist")


def _vacuous(name: str, filename: str) -> TestResult:
    return TestResult(name, True, f"{filename} not evaluable; covered by the "
                                  "existence/readability checks")


def _readable_check(name: str, workspace: Path, filename: str) -> TestResult:
    path = workspace / filename
    if not path.exists():
        return _vacuous(name, filename)
    table = read_lenient(path)
    if table is None:
        return TestResult(name, False, f"{filename} is not parseable as a "
                                       "rectangular CSV table")
    return TestResult(name, True, f"{filename} parsed: {table.n_rows} rows")


def _loaded(workspace: Path, filename: str) -> LenientCsv | None:
    path = workspace / filename
    if not path.exists():
        return None
    return read_lenient(path)


def _no_duplicate_rows(name: str, workspace: Path, filename: str) -> TestResult:
    table = _loaded(workspace, filename)
    if table is None:
        return _vacuous(name, filename)
    seen = set()
    for row in table.rows:
        key = tuple(row)
        if key in seen:
            return TestResult(name, False, f"{filename} contains duplicate rows")
        seen.add(key)
    return TestResult(name, True, f"no duplicate rows in {filename}")


def _no_missing_values(name: str, workspace: Path, filename: str) -> TestResult:
    table = _loaded(workspace, filename)
    if table is None:
        return _vacuous(name, filename)
    for i, row in enumerate(table.rows):
        for j, cell in enumerate(row):
            if _missing(cell):
                return TestResult(
                    name, False,
                    f"{filename} has a missing cell at row {i + 1}, "
                    f"column {table.header[j]!r}")
    return TestResult(name, True, f"no missing cells in {filename}")


def _no_duplicate_features(name: str, workspace: Path, filename: str) -> TestResult:
    path = workspace / filename
    if not path.exists():
        return _vacuous(name, filename)
    try:
        with path.open("r", encoding="utf-8", newline="") as handle:
            header = next(csv.reader(handle), [])
    except (OSError, UnicodeDecodeError, csv.Error):
        return _vacuous(name, filename)
    dupes = sorted({c for c in header if header.count(c) > 1})
    if dupes:
        return TestResult(name, False,
                          f"{filename} has duplicate feature names: {dupes}")
    return TestResult(name, True, f"feature names unique in {filename}")


def _difference_check(name: str, workspace: Path, train_name: str,
                      test_name: str, target: str | None) -> TestResult:
    train = _loaded(workspace, train_name)
    test = _loaded(workspace, test_name)
    if train is None or test is None:
        return _vacuous(name, f"{train_name}/{test_name}")
    train_cols = set(train.header) - ({target} if target else set())
    test_cols = set(test.header)
    if train_cols != test_cols:
        only_train = sorted(train_cols - test_cols)
        only_test = sorted(test_cols - train_cols)
        return TestResult(
            name, False,
            f"columns differ beyond the target: train-only {only_train}, "
            f"test-only {only_test}")
    return TestResult(name, True, "train/test columns equal except the target")


def _no_missing_target(name: str, workspace: Path, filename: str,
                       target: str | None) -> TestResult:
    table = _loaded(workspace, filename)
    if table is None:
        return _vacuous(name, filename)
    if target is None:
        return TestResult(name, False, "no target variable could be determined")
    if target not in table.header:
        return TestResult(name, False,
                          f"target {target!r} is not a column of {filename}")
    index = table.header.index(target)
    holes = sum(1 for row in table.rows if _missing(row[index]))
    if holes:
        return TestResult(name, False,
                          f"target {target!r} has {holes} missing cells")
    return TestResult(name, True, f"target {target!r} present with no missing cells")


def _feature_number(name: str, workspace: Path, filename: str,
                    config: SuiteConfig) -> TestResult:
    table = _loaded(workspace, filename)
    if table is None:
        return _vacuous(name, filename)
    cleaned = _loaded(workspace, "cleaned_train.csv")
    upper = max(config.fe_max_features_floor,
                config.fe_max_features_per_cleaned * len(cleaned.header)
                if cleaned else config.fe_max_features_floor)
    count = len(table.header)
    if count < config.fe_min_features:
        return TestResult(name, False,
                          f"{filename} has {count} columns, fewer than "
                          f"{config.fe_min_features}")
    if count > upper:
        return TestResult(name, False,
                          f"{filename} has {count} columns, more than {upper}")
    return TestResult(name, True, f"{count} columns within [{config.fe_min_features}, {upper}]")


def _file_size(name: str, workspace: Path, files: tuple[str, ...],
               config: SuiteConfig) -> TestResult:
    small = []
    for filename in files:
        path = workspace / filename
        if not path.exists():
            return _vacuous(name, filename)
        if path.stat().st_size < config.fe_min_file_bytes:
            small.append(f"{filename} ({path.stat().st_size} bytes)")
    if small:
        return TestResult(name, False,
                          f"below the {config.fe_min_file_bytes}-byte threshold: "
                          f"{', '.join(small)}")
    return TestResult(name, True,
                      f"all processed files at or above {config.fe_min_file_bytes} bytes")


def _submission_row_count(name: str, workspace: Path) -> TestResult:
    submission = _loaded(workspace, "submission.csv")
    sample = _loaded(workspace, "sample_submission.csv")
    if submission is None:
        return _vacuous(name, "submission.csv")
    if sample is None:
        return TestResult(name, False, "sample_submission.csv is unavailable "
                                       "for the row-count comparison")
    if submission.n_rows != sample.n_rows:
        return TestResult(name, False,
                          f"submission has {submission.n_rows} data rows, "
                          f"sample has {sample.n_rows}")
    return TestResult(name, True, f"row count matches the sample ({sample.n_rows})")


def _submission_columns(name: str, workspace: Path) -> TestResult:
    submission = _loaded(workspace, "submission.csv")
    sample = _loaded(workspace, "sample_submission.csv")
    if submission is None:
        return _vacuous(name, "submission.csv")
    if sample is None:
        return TestResult(name, False, "sample_submission.csv is unavailable "
                                       "for the column comparison")
    if submission.header != sample.header:
        return TestResult(name, False,
                          f"column names differ: submission {submission.header}, "
                          f"sample {sample.header}")
    return TestResult(name, True, f"column names match the sample ({sample.header})")


def _is_finite_number(cell: str) -> bool:
    try:
        value = float(cell)
    except ValueError:
        return False
    return value == value and value not in (float("inf"), float("-inf"))


def _submission_validity(name: str, workspace: Path, config: SuiteConfig) -> TestResult:
    submission = _loaded(workspace, "submission.csv")
    sample = _loaded(workspace, "sample_submission.csv")
    if submission is None:
        return _vacuous(name, "submission.csv")
    if sample is None:
        return TestResult(name, False, "sample_submission.csv is unavailable "
                                       "for the validity comparison")
    if submission.header != sample.header or submission.n_rows != sample.n_rows:
        return TestResult(name, True,
                          "shape mismatch already reported by the row-count/"
                          "column-name checks; validity not evaluable")
    if not sample.header:
        return TestResult(name, True, "empty sample submission; nothing to validate")
    # the first sample column is the row identifier
    sub_ids = sorted(row[0] for row in submission.rows)
    sample_ids = sorted(row[0] for row in sample.rows)
    if sub_ids != sample_ids:
        return TestResult(name, False,
                          "identifier values do not match the sample submission")
    for j, column in enumerate(sample.header[1:], start=1):
        sample_values = {row[j] for row in sample.rows}
        sub_values = [row[j] for row in submission.rows]
        if len(sample_values) <= config.categorical_range_max_distinct:
            extras = sorted({v for v in sub_values if v not in sample_values})
            if extras:
                return TestResult(
                    name, False,
                    f"column {column!r} contains values outside the sample's "
                    f"range: {extras[:5]}")
        else:
            bad = [v for v in sub_values if not _is_finite_number(v)]
            if bad:
                return TestResult(name, False,
                                  f"column {column!r} contains non-finite "
                                  f"values: {bad[:5]}")
    return TestResult(name, True, "identifier multiset and value ranges match the sample")


# --- suites --------------------------------------------------------------------

def _dc_suite(workspace: Path, target: str | None, config: SuiteConfig) -> list[TestResult]:
    train, test = DC_FILES
    return [
        _exists_check(workspace, DC_FILES),
        _no_duplicate_rows("test_no_duplicate_cleaned_train", workspace, train),
        _no_duplicate_rows("test_no_duplicate_cleaned_test", workspace, test),
        _readable_check("test_readable_cleaned_train", workspace, train),
        _readable_check("test_readable_cleaned_test", workspace, test),
        _no_missing_values("test_cleaned_train_no_missing_values", workspace, train),
        _no_missing_values("test_cleaned_test_no_missing_values", workspace, test),
        _no_duplicate_features("test_cleaned_train_no_duplicated_features",
                               workspace, train),
        _no_duplicate_features("test_cleaned_test_no_duplicated_features",
                               workspace, test),
        _difference_check("test_cleaned_difference_train_test_columns",
                          workspace, train, test, target),
        _no_missing_target("test_cleaned_train_no_missing_target",
                           workspace, train, target),
    ]


def _fe_suite(workspace: Path, target: str | None, config: SuiteConfig) -> list[TestResult]:
    train, test = FE_FILES
    return [
        _exists_check(workspace, FE_FILES),
        _feature_number("test_processed_train_feature_number", workspace, train, config),
        _feature_number("test_processed_test_feature_number", workspace, test, config),
        _file_size("test_file_size", workspace, FE_FILES, config),
        _no_duplicate_features("test_processed_train_no_duplicated_features",
                               workspace, train),
        _no_duplicate_features("test_processed_test_no_duplicated_features",
                               workspace, test),
        _difference_check("test_processed_difference_train_test_columns",
                          workspace, train, test, target),
        _no_missing_target("test_processed_train_no_missing_target",
                           workspace, train, target),
    ]


def _mbvp_suite(workspace: Path, target: str | None, config: SuiteConfig) -> list[TestResult]:
    return [
        _exists_check(workspace, ("submission.csv",)),
        _no_duplicate_rows("test_no_duplicate_submission", workspace, "submission.csv"),
        _readable_check("test_readable_submission", workspace, "submission.csv"),
        _submission_row_count("test_file_num_submission", workspace),
        _submission_columns("test_column_names_submission", workspace),
        _submission_validity("test_submission_validity", workspace, config),
    ]


SUITES = {
    "dc": _dc_suite,
    "fe": _fe_suite,
    "mbvp": _mbvp_suite,
}

SUITE_TEST_NAMES = {
    "dc": [
        "test_document_exist",
        "test_no_duplicate_cleaned_train",
        "test_no_duplicate_cleaned_test",
        "test_readable_cleaned_train",
        "test_readable_cleaned_test",
        "test_cleaned_train_no_missing_values",
        "test_cleaned_test_no_missing_values",
        "test_cleaned_train_no_duplicated_features",
        "test_cleaned_test_no_duplicated_features",
        "test_cleaned_difference_train_test_columns",
        "test_cleaned_train_no_missing_target",
    ],
    "fe": [
        "test_document_exist",
        "test_processed_train_feature_number",
        "test_processed_test_feature_number",
        "test_file_size",
        "test_processed_train_no_duplicated_features",
        "test_processed_test_no_duplicated_features",
        "test_processed_difference_train_test_columns",
        "test_processed_train_no_missing_target",
    ],
    "mbvp": [
        "test_document_exist",
        "test_no_duplicate_submission",
        "test_readable_submission",
        "test_file_num_submission",
        "test_column_names_submission",
        "test_submission_validity",
    ],
}


def run_suite(phase: str, workspace: str | Path, target: str | None = None,
              config: SuiteConfig | None = None) -> SuiteResult:
    """Evaluate one suite; every test reports a result in fixed order."""
    if phase not in SUITES:
        raise ValueError(f"no unit-test suite for phase {phase!r}")
    workspace = Path(workspace)
    config = config or SuiteConfig()
    if phase == "dc":
        target = infer_target(workspace, *DC_FILES, explicit=target)
    elif phase == "fe":
        target = infer_target(workspace, *FE_FILES, explicit=target)
    results = SUITES[phase](workspace, target, config)
    expected = SUITE_TEST_NAMES[phase]
    got = [r.name for r in results]
    if got != expected:
        raise RuntimeError(f"suite {phase} produced unexpected tests: {got}")
    return SuiteResult(phase=phase, results=results)
