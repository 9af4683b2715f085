from datetime import datetime

import pytest

from stikit.formatting import (
    clean_filename,
    format_bar,
    format_frequency,
    format_number,
    format_timestamp,
    parse_levels,
    wrap_text,
    wrap_text_in_box,
)


@pytest.mark.parametrize(
    argnames=["value", "digits", "expected"],
    argvalues=[
        (0.12345, 3, "0.123"),
        (-0.0001, 3, "0.000"),
        (-0.5, 2, "-0.50"),
        (float("inf"), 3, "inf"),
        (float("-inf"), 3, "-inf"),
        (float("nan"), 3, "nan"),
    ],
)
def test__format_number(value, digits, expected):
    assert format_number(value, digits) == expected


@pytest.mark.parametrize(
    argnames=["frequency", "expected"],
    argvalues=[(125.0, "125"), (1000.0, "1k"), (8000.0, "8k"), (0.63, "0.63"), (12.5, "12.5"), (6.25, "6.25")],
)
def test__format_frequency(frequency, expected):
    assert format_frequency(frequency) == expected


def test__parse_levels():
    assert parse_levels("60,58.5,55,50,45,40,35.25") == [60.0, 58.5, 55.0, 50.0, 45.0, 40.0, 35.25]


def test__parse_levels_accepts_spaces():
    assert parse_levels("60, 60,60 ,60,60,60,60") == [60.0] * 7


@pytest.mark.parametrize(argnames=["text"], argvalues=[("60,60,60",), ("60,60,60,60,60,60,loud",), ("",)])
def test__parse_levels_rejects_malformed_input(text):
    with pytest.raises(ValueError):
        parse_levels(text)


@pytest.mark.parametrize(argnames=["value", "filled"], argvalues=[(0.0, 0), (0.5, 20), (1.0, 40), (1.3, 40), (-1, 0)])
def test__format_bar(value, filled):
    bar = format_bar(value)
    assert len(bar) == 40
    assert bar.count("█") == filled


def test__clean_filename():
    assert clean_filename("room 1/seat:3.wav") == "room_1_seat_3.wav"


def test__wrap_text_splits_long_lines():
    lines = wrap_text("aaaa bbbb cccc dddd", width=9)
    assert lines == ["aaaa bbbb", "cccc dddd"]


def test__boxed_text_has_equal_line_widths():
    box = wrap_text_in_box("STI 0.62  GOOD\nsecond line", width=30, title="STI")
    assert len({len(line) for line in box.splitlines()}) == 1
    assert " STI " in box.splitlines()[0]


def test__format_timestamp():
    assert format_timestamp(datetime(2024, 3, 1, 9, 5, 7)) == "2024-03-01 09:05:07"
