"""Suite checks: every gate test has a fixture that fails exactly it."""

from __future__ import annotations

from pathlib import Path

import pytest

from tabpilot.phasetests import SUITE_TEST_NAMES, SuiteConfig, run_suite

TARGET = "Survived"


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _csv(header: list[str], rows: list[list[str]]) -> str:
    lines = [",".join(header)] + [",".join(row) for row in rows]
    return "\n".join(lines) + "\n"


def base_dc_workspace(root: Path) -> Path:
    _write(root / "cleaned_train.csv", _csv(
        ["PassengerId", "Survived", "Age"],
        [["1", "0", "22"], ["2", "1", "38"], ["3", "1", "26"]]))
    _write(root / "cleaned_test.csv", _csv(
        ["PassengerId", "Age"],
        [["4", "30"], ["5", "41"]]))
    return root


def _pad_rows(n: int, columns: int, start: int = 0) -> list[list[str]]:
    return [[f"{start + i}.{j}25" for j in range(columns)] for i in range(n)]


def base_fe_workspace(root: Path) -> Path:
    # large enough to clear the file-size threshold
    header = ["PassengerId", "Survived", "A", "B"]
    rows = [[str(i), str(i % 2), f"{i}.5", f"{i}.25"] for i in range(120)]
    _write(root / "processed_train.csv", _csv(header, rows))
    _write(root / "processed_test.csv", _csv(
        ["PassengerId", "A", "B"],
        [[str(1000 + i), f"{i}.5", f"{i}.25"] for i in range(120)]))
    return root


def base_mbvp_workspace(root: Path) -> Path:
    ids = [str(i) for i in range(1, 6)]
    _write(root / "sample_submission.csv", _csv(
        ["PassengerId", "Survived"], [[i, str(int(i) % 2)] for i in ids]))
    _write(root / "submission.csv", _csv(
        ["PassengerId", "Survived"], [[i, "1"] for i in ids]))
    return root


class TestSuitesPassOnGoodFixtures:
    def test_dc_all_pass(self, tmp_path):
        result = run_suite("dc", base_dc_workspace(tmp_path), target=TARGET)
        assert result.passed, result.summary_lines()
        assert [r.name for r in result.results] == SUITE_TEST_NAMES["dc"]

    def test_fe_all_pass(self, tmp_path):
        result = run_suite("fe", base_fe_workspace(tmp_path), target=TARGET)
        assert result.passed, result.summary_lines()

    def test_mbvp_all_pass(self, tmp_path):
        result = run_suite("mbvp", base_mbvp_workspace(tmp_path), target=TARGET)
        assert result.passed, result.summary_lines()

    def test_totality_when_everything_is_missing(self, tmp_path):
        for phase in ("dc", "fe", "mbvp"):
            result = run_suite(phase, tmp_path, target=TARGET)
            assert len(result.results) == len(SUITE_TEST_NAMES[phase])


# --- exactly-one-failing fixture corpus -----------------------------------------
#
# each builder mutates its base workspace so precisely one suite test fails

def dc_missing_file(root):
    (root / "cleaned_test.csv").unlink()


def dc_duplicate_train_rows(root):
    _write(root / "cleaned_train.csv", _csv(
        ["PassengerId", "Survived", "Age"],
        [["1", "0", "22"], ["1", "0", "22"], ["3", "1", "26"]]))


def dc_duplicate_test_rows(root):
    _write(root / "cleaned_test.csv", _csv(
        ["PassengerId", "Age"], [["4", "30"], ["4", "30"]]))


def dc_unreadable_train(root):
    _write(root / "cleaned_train.csv",
           "PassengerId,Survived,Age\n1,0,22\n2,1\n")  # ragged row


def dc_unreadable_test(root):
    _write(root / "cleaned_test.csv", "PassengerId,Age\n4,30,99\n")


def dc_missing_values_train(root):
    _write(root / "cleaned_train.csv", _csv(
        ["PassengerId", "Survived", "Age"],
        [["1", "0", ""], ["2", "1", "38"], ["3", "1", "26"]]))


def dc_missing_values_test(root):
    _write(root / "cleaned_test.csv", _csv(
        ["PassengerId", "Age"], [["4", "NaN"], ["5", "41"]]))


def dc_duplicated_features_train(root):
    _write(root / "cleaned_train.csv",
           "PassengerId,Age,Age,Survived\n1,22,22,0\n2,38,38,1\n")


def dc_duplicated_features_test(root):
    _write(root / "cleaned_test.csv",
           "PassengerId,Age,Age\n4,30,30\n5,41,41\n")


def dc_column_difference(root):
    _write(root / "cleaned_train.csv", _csv(
        ["PassengerId", "Survived", "Age", "Extra"],
        [["1", "0", "22", "x"], ["2", "1", "38", "y"], ["3", "1", "26", "z"]]))


def dc_missing_target(root):
    _write(root / "cleaned_train.csv", _csv(
        ["PassengerId", "Age"],
        [["1", "22"], ["2", "38"], ["3", "26"]]))


DC_CASES = [
    ("test_document_exist", dc_missing_file),
    ("test_no_duplicate_cleaned_train", dc_duplicate_train_rows),
    ("test_no_duplicate_cleaned_test", dc_duplicate_test_rows),
    ("test_readable_cleaned_train", dc_unreadable_train),
    ("test_readable_cleaned_test", dc_unreadable_test),
    ("test_cleaned_train_no_missing_values", dc_missing_values_train),
    ("test_cleaned_test_no_missing_values", dc_missing_values_test),
    ("test_cleaned_train_no_duplicated_features", dc_duplicated_features_train),
    ("test_cleaned_test_no_duplicated_features", dc_duplicated_features_test),
    ("test_cleaned_difference_train_test_columns", dc_column_difference),
    ("test_cleaned_train_no_missing_target", dc_missing_target),
]


def fe_missing_file(root):
    (root / "processed_train.csv").unlink()


def fe_train_feature_count(root):
    # 501 columns in train, 500 in test: only the train bound trips
    train_header = ["Survived"] + [f"f{i}" for i in range(500)]
    test_header = [f"f{i}" for i in range(500)]
    rows = [[f"{r}.{i % 7}" for i in range(500)] for r in range(3)]
    _write(root / "processed_train.csv",
           _csv(train_header, [["1"] + row for row in rows]))
    _write(root / "processed_test.csv", _csv(test_header, rows))


def fe_test_feature_count(root):
    # train has exactly the minimum; test falls one short
    rows = [[str(i), f"{i}.125"] for i in range(200)]
    _write(root / "processed_train.csv", _csv(["Survived", "A"], rows))
    _write(root / "processed_test.csv",
           _csv(["A"], [[f"{i}.125"] for i in range(200)]))


def fe_file_size(root):
    _write(root / "processed_train.csv", _csv(
        ["Survived", "A", "B"], [["1", "2.0", "4.0"], ["0", "3.0", "5.0"]]))
    _write(root / "processed_test.csv", _csv(
        ["A", "B"], [["2.0", "4.0"], ["3.0", "5.0"]]))


def fe_duplicated_features_train(root):
    # duplicate names collapse in the set comparison, so the column
    # difference check still passes
    rows = [[str(i % 2), f"{i}.5", f"{i}.5", f"{i}.25"] for i in range(120)]
    _write(root / "processed_train.csv", _csv(["Survived", "A", "A", "B"], rows))
    _write(root / "processed_test.csv",
           _csv(["A", "B"], [[f"{i}.5", f"{i}.25"] for i in range(120)]))


def fe_duplicated_features_test(root):
    rows = [[str(i % 2), f"{i}.5", f"{i}.25"] for i in range(120)]
    _write(root / "processed_train.csv", _csv(["Survived", "A", "B"], rows))
    _write(root / "processed_test.csv",
           _csv(["A", "A", "B"],
                [[f"{i}.5", f"{i}.5", f"{i}.25"] for i in range(120)]))


def fe_column_difference(root):
    rows = [[str(i % 2), f"{i}.5", f"{i}.25"] for i in range(120)]
    _write(root / "processed_train.csv", _csv(["Survived", "A", "C"], rows))
    _write(root / "processed_test.csv",
           _csv(["A", "B"], [[f"{i}.5", f"{i}.25"] for i in range(120)]))


def fe_missing_target(root):
    rows = [[f"{i}.5", f"{i}.25"] for i in range(120)]
    _write(root / "processed_train.csv", _csv(["A", "B"], rows))
    _write(root / "processed_test.csv", _csv(["A", "B"], rows))


FE_CASES = [
    ("test_document_exist", fe_missing_file),
    ("test_processed_train_feature_number", fe_train_feature_count),
    ("test_processed_test_feature_number", fe_test_feature_count),
    ("test_file_size", fe_file_size),
    ("test_processed_train_no_duplicated_features", fe_duplicated_features_train),
    ("test_processed_test_no_duplicated_features", fe_duplicated_features_test),
    ("test_processed_difference_train_test_columns", fe_column_difference),
    ("test_processed_train_no_missing_target", fe_missing_target),
]


def mbvp_missing_file(root):
    (root / "submission.csv").unlink()


def mbvp_duplicate_rows(root):
    # the sample itself carries the duplicate so only the duplicate check trips
    rows = [["1", "1"], ["1", "1"], ["2", "0"], ["3", "1"], ["4", "0"]]
    _write(root / "sample_submission.csv", _csv(["PassengerId", "Survived"], rows))
    _write(root / "submission.csv", _csv(["PassengerId", "Survived"], rows))


def mbvp_unreadable(root):
    _write(root / "submission.csv", "PassengerId,Survived\n1,1,9\n")


def mbvp_row_count(root):
    _write(root / "submission.csv", _csv(
        ["PassengerId", "Survived"],
        [[str(i), "1"] for i in range(1, 5)]))  # sample has five


def mbvp_column_names(root):
    _write(root / "submission.csv", _csv(
        ["PassengerId", "Prediction"],
        [[str(i), "1"] for i in range(1, 6)]))


def mbvp_validity(root):
    _write(root / "submission.csv", _csv(
        ["PassengerId", "Survived"],
        [[str(i), "7"] for i in range(1, 6)]))  # 7 outside the sample's {0,1}


MBVP_CASES = [
    ("test_document_exist", mbvp_missing_file),
    ("test_no_duplicate_submission", mbvp_duplicate_rows),
    ("test_readable_submission", mbvp_unreadable),
    ("test_file_num_submission", mbvp_row_count),
    ("test_column_names_submission", mbvp_column_names),
    ("test_submission_validity", mbvp_validity),
]


BUILDERS = {
    "dc": (base_dc_workspace, DC_CASES),
    "fe": (base_fe_workspace, FE_CASES),
    "mbvp": (base_mbvp_workspace, MBVP_CASES),
}

ALL_CASES = [(phase, name) for phase, (_, cases) in BUILDERS.items()
             for name, _ in cases]


@pytest.mark.parametrize("phase,test_name", ALL_CASES)
def test_fixture_fails_exactly_one_test(phase, test_name, tmp_path):
    base_builder, cases = BUILDERS[phase]
    mutate = dict(cases)[test_name]
    workspace = base_builder(tmp_path)
    mutate(workspace)
    result = run_suite(phase, workspace, target=TARGET)
    failed = [r.name for r in result.failures()]
    assert failed == [test_name], result.summary_lines()


def test_corpus_covers_all_twenty_five_tests():
    covered = {(phase, name) for phase, name in ALL_CASES}
    expected = {(phase, name) for phase, names in SUITE_TEST_NAMES.items()
                for name in names}
    assert covered == expected
    assert len(expected) == 25


class TestSuiteOnRealRun:
    def test_dc_suite_passes_after_cleaning(self, completed_run):
        assert run_suite("dc", completed_run, target=TARGET).passed

    def test_fe_suite_passes_after_feature_engineering(self, completed_run):
        assert run_suite("fe", completed_run, target=TARGET).passed

    def test_mbvp_suite_passes_after_modeling(self, completed_run):
        assert run_suite("mbvp", completed_run, target=TARGET).passed

    def test_target_inference_from_competition_info(self, completed_run):
        result = run_suite("dc", completed_run)  # no explicit target
        assert result.passed


class TestFeBoundsConfig:
    def test_upper_bound_scales_with_cleaned_width(self, tmp_path):
        base_fe_workspace(tmp_path)
        _write(tmp_path / "cleaned_train.csv", _csv(
            ["Survived"] + [f"c{i}" for i in range(59)],
            [["1"] + ["0"] * 59]))
        config = SuiteConfig()
        result = run_suite("fe", tmp_path, target=TARGET, config=config)
        assert result.passed  # bound is max(500, 10*60) = 600
