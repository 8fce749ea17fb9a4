import numpy as np
import pytest

from icus.core.dataset import Dataset
from icus.core.laws import get_law


def test_from_law_reproducible():
    a = Dataset.from_law(get_law('stdnormal'), 20, seed=3)
    b = Dataset.from_law(get_law('stdnormal'), 20, seed=3)
    c = Dataset.from_law(get_law('stdnormal'), 20, seed=4)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)
    assert a.n == 20 and a.arity == 1


def test_paired():
    data = Dataset.from_law(get_law('uniform01'), 7, seed=0, arity=2)
    assert data.values.shape == (7, 2)
    assert data.n == 7 and data.arity == 2
    assert data.tuples(np.array([[0, 1], [2, 3]])).shape == (2, 2, 2)


def test_tuples():
    data = Dataset([10.0, 11.0, 12.0, 13.0])
    assert np.array_equal(data.tuples([[0, 3], [1, 2]]), [[10.0, 13.0], [11.0, 12.0]])


def test_validation():
    with pytest.raises(ValueError):
        Dataset(np.zeros((3, 3)))
    with pytest.raises(ValueError):
        Dataset([0.0, np.nan])
    with pytest.raises(ValueError):
        Dataset(np.zeros((2, 2, 2)))


def test_csv(tmp_path):
    path = tmp_path / 'data.csv'
    data = Dataset.from_law(get_law('stdnormal'), 15, seed=1)
    data.to_csv(path)
    loaded = Dataset.from_csv(path)
    assert np.array_equal(loaded.values, data.values)
    assert loaded.law is None

    paired = Dataset.from_law(get_law('stdnormal'), 5, seed=1, arity=2)
    paired.to_csv(path)
    assert np.array_equal(Dataset.from_csv(path).values, paired.values)


def test_csv_comments(tmp_path):
    path = tmp_path / 'data.csv'
    path.write_text('# sample\n1.5\n2.5\n')
    assert np.array_equal(Dataset.from_csv(path).values, [1.5, 2.5])


def test_csv_too_many_columns(tmp_path):
    path = tmp_path / 'data.csv'
    path.write_text('1,2,3\n4,5,6\n')
    with pytest.raises(ValueError):
        Dataset.from_csv(path)
