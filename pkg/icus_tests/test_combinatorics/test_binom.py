import pytest

from icus.combinatorics.binom import BINOM_LIMIT, BinomialOverflowError, BinomialTable, binom


def test_binom():
    assert binom(5, 2) == 10
    assert binom(7, 0) == 1
    assert binom(7, 7) == 1
    assert binom(100, 50) == 100891344545564193334812497256


def test_binom_range():
    with pytest.raises(ValueError):
        binom(3, 5)
    with pytest.raises(ValueError):
        binom(3, -1)


def test_binom_overflow():
    with pytest.raises(BinomialOverflowError) as e:
        binom(200, 100)
    assert (e.value.n, e.value.k) == (200, 100)
    assert isinstance(e.value, OverflowError)
    assert binom(130, 40) < BINOM_LIMIT


def test_table():
    table = BinomialTable(10, 3)
    assert table.total == 120
    assert table.fits_int64
    assert table.columns[2][:6] == [0, 0, 1, 3, 6, 10]
    assert table.largest_below(2, 9) == 4
    assert table.largest_below(2, 10) == 5
    assert table.largest_below(1, 0) == 0


def test_table_big():
    table = BinomialTable(200, 20)
    assert table.total > 2 ** 63
    assert not table.fits_int64
