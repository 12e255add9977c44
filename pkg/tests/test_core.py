from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from meterpipe.core import (
    ABSOLUTE,
    DataError,
    DecimalValue,
    END_RELATIVE,
    FieldSpec,
    UsageError,
    decimal_add,
    decimal_mul,
    format_decimal,
    parse_decimal,
    parse_fieldspec,
    read_rows,
    resolve_field,
    split_fields,
    split_record,
)


class TestSplitRecord:
    def test_sample_reading_row_has_four_fields(self):
        line = (
            "SM000000689VG 0.0.0.4.1.1.12.0.0.0.0.0.0.0.0.3.72.0 "
            "2021-01-01T12:40:06Z 14.8361"
        )
        rec = split_record(line)
        assert rec.raw_line == line
        assert len(rec.fields) == 4
        assert rec.fields[0] == "SM000000689VG"
        assert rec.fields[3] == "14.8361"

    def test_empty_line_has_zero_fields(self):
        assert split_record("").fields == ()

    def test_whitespace_runs_collapse(self):
        assert split_record("a\t b  c").fields == ("a", "b", "c")

    def test_only_space_and_tab_separate(self):
        # Other control characters are field content, not separators.
        assert split_fields("a\x0bb c") == ["a\x0bb", "c"]

    @given(st.text(alphabet=st.characters(blacklist_characters="\n")))
    def test_normalize_then_split_is_idempotent(self, line):
        fields = split_fields(line)
        assert split_fields(" ".join(fields)) == fields


class TestFieldSpec:
    def test_parse_absolute(self):
        assert parse_fieldspec("3") == FieldSpec(ABSOLUTE, 3)

    def test_parse_nf_forms(self):
        assert parse_fieldspec("NF") == FieldSpec(END_RELATIVE, 0)
        assert parse_fieldspec("NF-2") == FieldSpec(END_RELATIVE, 2)

    @pytest.mark.parametrize("bad", ["0", "-1", "NF+1", "nf", "NF-", "x", ""])
    def test_rejects_bad_syntax(self, bad):
        with pytest.raises(UsageError):
            parse_fieldspec(bad)

    def test_nf_is_last_field(self):
        assert resolve_field(FieldSpec(END_RELATIVE, 0), 6) == 6

    def test_nf_minus_one_on_flat_name_row(self):
        row = split_record("MeterReadings MeterReading Meter Names name SM000000001VG")
        pos = resolve_field(FieldSpec(END_RELATIVE, 1), len(row.fields))
        assert pos == 5
        assert row.fields[pos - 1] == "name"

    def test_out_of_range_is_data_error(self):
        with pytest.raises(DataError):
            resolve_field(FieldSpec(ABSOLUTE, 7), 4)

    def test_error_names_the_line(self):
        with pytest.raises(DataError, match="line 12"):
            resolve_field(FieldSpec(ABSOLUTE, 7), 4, lineno=12)

    @given(st.lists(st.text(alphabet="xy", min_size=1), min_size=1, max_size=8))
    def test_nf_resolves_to_field_count(self, fields):
        assert resolve_field(FieldSpec(END_RELATIVE, 0), len(fields)) == len(fields)

    def test_str_round_trips(self):
        for text in ("1", "17", "NF", "NF-3"):
            assert str(parse_fieldspec(text)) == text


class TestDecimal:
    def test_parse_reading_value(self):
        assert parse_decimal("14.8361") == DecimalValue(False, 148361, 4)

    def test_parse_zero(self):
        assert parse_decimal("0") == DecimalValue(False, 0, 0)

    def test_trailing_zero_survives_round_trip(self):
        value = parse_decimal("17.8280")
        assert value == DecimalValue(False, 178280, 4)
        assert format_decimal(value) == "17.8280"

    def test_negative_and_small(self):
        assert format_decimal(parse_decimal("-0.0361")) == "-0.0361"

    @pytest.mark.parametrize("bad", ["", ".", "1.", ".5", "1..2", "a", "1e3", "+-1"])
    def test_malformed_tokens_rejected(self, bad):
        with pytest.raises(DataError):
            parse_decimal(bad)

    def test_error_names_the_line(self):
        with pytest.raises(DataError, match="line 3"):
            parse_decimal("bogus", lineno=3)

    def test_sum_scale_is_max_of_addends(self):
        total = decimal_add(parse_decimal("1.5"), parse_decimal("2.25"))
        assert format_decimal(total) == "3.75"
        total = decimal_add(parse_decimal("1.50"), parse_decimal("2.50"))
        assert format_decimal(total) == "4.00"

    def test_signed_addition(self):
        total = decimal_add(parse_decimal("-0.5"), parse_decimal("0.25"))
        assert format_decimal(total) == "-0.25"

    def test_multiplication_is_exact(self):
        product = decimal_mul(parse_decimal("810"), parse_decimal("0.01"))
        assert format_decimal(product) == "8.10"

    @given(
        st.booleans(),
        st.integers(min_value=0, max_value=10**30),
        st.integers(min_value=0, max_value=12),
    )
    def test_format_parse_round_trip(self, negative, digits, scale):
        value = DecimalValue(negative=negative, digits=digits, scale=scale)
        assert parse_decimal(format_decimal(value)) == value

    @given(st.lists(_tokens := st.builds(
        lambda neg, d, s: format_decimal(DecimalValue(neg, d, s)),
        st.booleans(),
        st.integers(min_value=0, max_value=10**24),
        st.integers(min_value=0, max_value=9),
    ), min_size=1, max_size=20))
    def test_sum_matches_fraction_oracle(self, tokens):
        total = parse_decimal(tokens[0])
        for tok in tokens[1:]:
            total = decimal_add(total, parse_decimal(tok))
        assert Fraction(format_decimal(total)) == sum(Fraction(t) for t in tokens)
        assert total.scale == max(parse_decimal(t).scale for t in tokens)

    @given(st.lists(_tokens, min_size=2, max_size=12))
    def test_addition_is_order_independent(self, tokens):
        values = [parse_decimal(t) for t in tokens]
        forward = values[0]
        for v in values[1:]:
            forward = decimal_add(forward, v)
        backward = values[-1]
        for v in reversed(values[:-1]):
            backward = decimal_add(backward, v)
        assert forward == backward


class TestReadRows:
    def test_strips_newline_and_one_carriage_return(self, tmp_path):
        p = tmp_path / "rows.txt"
        p.write_bytes(b"plain\ncrlf\r\ndouble\r\r\nlast")
        with open(p, "r", encoding="utf-8", newline="\n") as f:
            assert list(read_rows(f)) == ["plain", "crlf", "double\r", "last"]
