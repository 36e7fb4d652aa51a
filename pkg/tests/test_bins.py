import pytest
from hypothesis import given
from hypothesis import strategies as st

from lexcomp.bins import BIN_ORDER, ComplexityBin, bin_complexity

EPS = 1e-12


@pytest.mark.parametrize(
    "score,expected",
    [
        (0.0, ComplexityBin.FEW),
        (0.2 - 1e-9, ComplexityBin.FEW),
        (0.2, ComplexityBin.SOME),
        (0.4, ComplexityBin.HALF),
        (0.6, ComplexityBin.MOST),
        (0.8, ComplexityBin.ALL),
        (1.0, ComplexityBin.ALL),
    ],
)
def test_boundaries(score, expected):
    assert bin_complexity(score) is expected


def test_midpoints_round_trip():
    for b in BIN_ORDER:
        assert bin_complexity(b.midpoint) is b


@pytest.mark.parametrize("bad", [-0.001, 1.001, 2.0, -5])
def test_out_of_range_rejected(bad):
    with pytest.raises(ValueError):
        bin_complexity(bad)


def test_ordinals_are_contiguous():
    assert [b.ordinal for b in BIN_ORDER] == [0, 1, 2, 3, 4]


@given(st.floats(min_value=0.0, max_value=1.0, allow_nan=False))
def test_total_function_on_unit_interval(c):
    assert bin_complexity(c) in BIN_ORDER
