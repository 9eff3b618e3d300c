from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tabpilot.tabular import (
    DType,
    EmptyFileError,
    ParseError,
    Table,
    TableError,
    infer_dtype,
    read_csv,
    read_csv_text,
    schema_diff,
    write_csv,
    write_csv_text,
)


class TestReadCsv:
    def test_titanic_shape(self, titanic_train):
        assert titanic_train.n_rows == 891
        assert titanic_train.n_columns == 12

    def test_header_only_file_defaults_to_text(self):
        table = read_csv_text("a,b,c\n")
        assert table.n_rows == 0
        assert [table.dtype(n) for n in table.names] == [DType.Text] * 3

    def test_single_bad_cell_forces_text(self):
        table = read_csv_text("x\n1\n2\nx\n")
        assert table.dtype("x") is DType.Text

    def test_missing_literals_parse_as_missing(self):
        table = read_csv_text("a,b,c\n1,NaN,NA\n2,3.5,x\n")
        assert table.column("b") == [None, 3.5]
        assert table.column("c") == [None, "x"]

    def test_integer_with_missing_promotes_to_float(self):
        table = read_csv_text("a\n1\nNaN\n3\n")
        assert table.dtype("a") is DType.Float
        assert table.column("a") == [1.0, None, 3.0]

    def test_blank_lines_skipped(self):
        table = read_csv_text("a,b\n1,2\n\n3,4\n")
        assert table.n_rows == 2

    def test_boolean_requires_word_literal(self):
        assert infer_dtype(["0", "1", "0"]) is DType.Integer
        assert infer_dtype(["true", "0", "1"]) is DType.Boolean

    def test_datetime_inference(self):
        table = read_csv_text("d\n2024-03-07\n2024-03-08 10:30:00\n")
        assert table.dtype("d") is DType.Datetime

    def test_quoted_fields_with_commas_and_newlines(self):
        table = read_csv_text('name,x\n"Smith, John",1\n"a\nb",2\n')
        assert table.column("name") == ["Smith, John", "a\nb"]

    def test_empty_file_raises(self):
        with pytest.raises(EmptyFileError):
            read_csv_text("")

    def test_ragged_row_raises_with_line_number(self):
        with pytest.raises(ParseError) as exc:
            read_csv_text("a,b\n1,2\n3\n")
        assert "line 3" in str(exc.value)

    def test_missing_file_raises(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            read_csv(tmp_path / "absent.csv")


class TestWriteCsv:
    def test_zero_row_round_trip(self):
        table = Table([("a", DType.Text, []), ("b", DType.Integer, [])])
        text = write_csv_text(table)
        back = read_csv_text(text)
        assert back.names == table.names
        assert back.n_rows == 0

    def test_comma_cell_is_quoted(self):
        table = Table([("a", DType.Text, ["x,y"])])
        assert '"x,y"' in write_csv_text(table)

    def test_missing_written_as_empty_field(self):
        table = Table([("a", DType.Float, [1.5, None]), ("b", DType.Integer, [2, 3])])
        assert write_csv_text(table) == "a,b\n1.5,2\n,3\n"

    def test_lone_missing_field_quoted_for_round_trip(self):
        table = Table([("a", DType.Float, [1.5, None])])
        text = write_csv_text(table)
        assert text == 'a\n1.5\n""\n'
        assert read_csv_text(text).column("a") == [1.5, None]

    def test_file_round_trip(self, tmp_path, titanic_train):
        path = tmp_path / "out.csv"
        write_csv(titanic_train, path)
        assert read_csv(path) == titanic_train


# text cells that would re-read as a different dtype are excluded: CSV has
# no type channel, so numeric-looking text cannot survive a round trip
def _plain_text():
    return st.text(
        alphabet=st.characters(blacklist_categories=("Cs",),
                               blacklist_characters="\r\x00"),
        min_size=1, max_size=12,
    ).filter(lambda s: infer_dtype([s]) is DType.Text and s not in ("NaN", "NA", "nan"))


_floats = st.floats(allow_nan=False, allow_infinity=False, width=64)


@st.composite
def tables(draw):
    n_rows = draw(st.integers(min_value=0, max_value=8))
    n_cols = draw(st.integers(min_value=1, max_value=4))
    columns = []
    for i in range(n_cols):
        dtype = draw(st.sampled_from([DType.Integer, DType.Float, DType.Text,
                                      DType.Boolean]))
        strategy = {
            DType.Integer: st.integers(min_value=-10**9, max_value=10**9),
            DType.Float: _floats,
            DType.Text: _plain_text(),
            DType.Boolean: st.booleans(),
        }[dtype]
        cells = draw(st.lists(st.one_of(st.none(), strategy),
                              min_size=n_rows, max_size=n_rows))
        if all(c is None for c in cells) and n_rows:
            # all-missing columns re-read as Text; give them one value
            cells[0] = draw(strategy)
        if dtype is DType.Integer and any(c is None for c in cells):
            dtype = DType.Float
            cells = [None if c is None else float(c) for c in cells]
        columns.append((f"col_{i}", dtype, cells))
    return Table(columns)


class TestRoundTripProperty:
    @settings(max_examples=120, deadline=None)
    @given(tables())
    def test_round_trip_preserves_values_and_dtypes(self, table):
        back = read_csv_text(write_csv_text(table))
        assert back.names == table.names
        if table.n_rows == 0:
            return  # no cells, no dtype evidence: re-reads as Text by contract
        for name in table.names:
            assert back.dtype(name) is table.dtype(name), name
            assert back.column(name) == table.column(name), name

    @settings(max_examples=120, deadline=None)
    @given(st.lists(_floats, min_size=1, max_size=20))
    def test_float_cells_round_trip_bitwise(self, values):
        table = Table([("x", DType.Float, values)])
        back = read_csv_text(write_csv_text(table))
        for original, reread in zip(values, back.column("x")):
            assert math.copysign(1, original) == math.copysign(1, reread)
            assert original == reread


class TestTableInvariants:
    def test_unequal_column_lengths_rejected(self):
        with pytest.raises(TableError):
            Table([("a", DType.Integer, [1]), ("b", DType.Integer, [1, 2])])

    def test_duplicate_names_rejected(self):
        with pytest.raises(TableError):
            Table([("a", DType.Integer, [1]), ("a", DType.Integer, [2])])

    def test_cell_conformance_checked(self):
        with pytest.raises(TableError):
            Table([("a", DType.Integer, ["x"])])

    def test_nan_cells_rejected(self):
        with pytest.raises(TableError):
            Table([("a", DType.Float, [float("nan")])])


class TestSchemaDiff:
    def test_identical_tables_diff_empty(self, titanic_train):
        diff = schema_diff(titanic_train, titanic_train)
        assert diff == {"created": [], "deleted": [], "retyped": []}

    def test_cleaned_vs_raw_deletes_sparse_column(self, titanic_train):
        from tabpilot.mltools import remove_columns_with_missing_data
        cleaned = remove_columns_with_missing_data(titanic_train, thresh=0.5).table
        diff = schema_diff(titanic_train, cleaned)
        assert diff["deleted"] == ["Cabin"]
        assert diff["created"] == []

    def test_retype_detected(self, titanic_train):
        from tabpilot.mltools import convert_data_types
        converted = convert_data_types(titanic_train, ["Survived"], "str").table
        diff = schema_diff(titanic_train, converted)
        assert diff["retyped"] == ["Survived"]
