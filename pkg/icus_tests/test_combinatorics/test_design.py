import math

import numpy as np
import pytest

from icus import rng as icus_rng
from icus.combinatorics.binom import binom
from icus.combinatorics.colex import unrank
from icus.combinatorics.design import (BernoulliDesign, SampledDesign, _truncated_binomial, distinct_ranks,
                                       sample_binomial, sample_design)


def test_design_validation():
    with pytest.raises(ValueError):
        BernoulliDesign(10, 1, 5)
    with pytest.raises(ValueError):
        BernoulliDesign(10, 5, 5)
    with pytest.raises(ValueError):
        BernoulliDesign(10, 2, 45)
    with pytest.raises(ValueError):
        BernoulliDesign(10, 2, 0)


def test_design_properties():
    d = BernoulliDesign(10, 2, 9)
    assert d.total == 45
    assert d.p == 0.2
    assert d.alpha == 10 / 9


def test_sample_design_reproducible():
    d = BernoulliDesign(30, 2, 100, seed=5)
    a, b = sample_design(d), sample_design(d)
    assert np.array_equal(a.ranks, b.ranks)
    assert np.array_equal(sample_design(d, 5).ranks, a.ranks)
    assert not np.array_equal(sample_design(d, 6).ranks, a.ranks)


def test_sample_design_ranks():
    d = BernoulliDesign(30, 2, 100)
    for seed in range(20):
        sd = sample_design(d, seed)
        assert np.all(np.diff(sd.ranks) > 0)
        assert sd.ranks.min() >= 0 and sd.ranks.max() < d.total
        assert sd.n_hat == len(sd.ranks)


def test_sample_design_complement():
    d = BernoulliDesign(10, 2, 44)
    sd = sample_design(d, 0)
    assert sd.n_hat > d.total // 2
    assert len(np.unique(sd.ranks)) == sd.n_hat


def test_n_hat_mean():
    d = BernoulliDesign(30, 2, 100)
    rng = icus_rng.stream(0, icus_rng.DESIGN)
    reps = 10 ** 4
    n_hats = np.array([sample_design(d, rng).n_hat for _ in range(reps)])
    assert abs(n_hats.mean() - 100) <= 3 * math.sqrt(100 * (1 - d.p) / reps)


def test_inclusion_frequencies():
    d = BernoulliDesign(5, 2, 5)
    rng = icus_rng.stream(1, icus_rng.DESIGN)
    reps = 2 * 10 ** 4
    counts = np.zeros(d.total)
    for _ in range(reps):
        counts[sample_design(d, rng).ranks] += 1
    assert np.all(np.abs(counts / reps - 0.5) <= 4 * math.sqrt(0.25 / reps))


def test_tuples():
    d = BernoulliDesign(8, 2, 10)
    sd = SampledDesign(d, [0, 5, 27])
    assert np.array_equal(sd.tuples(), [unrank(0, 8, 2), unrank(5, 8, 2), unrank(27, 8, 2)])
    blocks = list(sd.iter_tuples(block_size=2))
    assert [len(b) for b in blocks] == [2, 1]


def test_sampled_design_validation():
    d = BernoulliDesign(8, 2, 10)
    with pytest.raises(ValueError):
        SampledDesign(d, [3, 2])
    with pytest.raises(ValueError):
        SampledDesign(d, [0, 28])
    assert SampledDesign(d, []).n_hat == 0


def test_full():
    d = BernoulliDesign(8, 2, 10)
    assert SampledDesign.full(d).n_hat == 28


def test_csv_line():
    d = BernoulliDesign(12, 3, 20, seed=3)
    sd = sample_design(d)
    line = sd.to_csv_line()
    assert line.startswith(f'12,3,20,{sd.n_hat}')
    restored = SampledDesign.from_csv_line(line, seed=3)
    assert restored.design == d
    assert np.array_equal(restored.ranks, sd.ranks)
    with pytest.raises(ValueError):
        SampledDesign.from_csv_line('12,3,20,2,5')


def test_sample_binomial_small():
    rng = icus_rng.stream(0)
    values = [sample_binomial(rng, 45, 0.2) for _ in range(2000)]
    assert abs(np.mean(values) - 9) < 4 * math.sqrt(45 * 0.2 * 0.8 / 2000)


def test_sample_binomial_size():
    values = sample_binomial(icus_rng.stream(0), 45, 0.2, size=2000)
    assert values.shape == (2000,) and values.dtype == np.int64
    assert abs(np.mean(values) - 9) < 4 * math.sqrt(45 * 0.2 * 0.8 / 2000)
    total = binom(100, 50)
    huge = sample_binomial(icus_rng.stream(1), total, 100 / total, size=50)
    assert huge.shape == (50,)
    assert all(isinstance(v, int) and v >= 0 for v in huge)


def test_truncated_binomial_positive():
    rng = icus_rng.stream(0)
    values = [_truncated_binomial(rng, 2 ** 62, 1e-19) for _ in range(500)]
    assert min(values) >= 1
    # mean of a zero-truncated Poisson(lambda) with lambda = 2^62 * 1e-19 ~ 0.46
    lam = 2 ** 62 * 1e-19
    assert abs(np.mean(values) - lam / (1 - math.exp(-lam))) < 0.15


def test_sample_binomial_huge():
    total = binom(100, 50)
    p = 100 / total
    rng = icus_rng.stream(1)
    values = [sample_binomial(rng, total, p) for _ in range(200)]
    assert abs(np.mean(values) - 100) <= 5 * math.sqrt(100 / 200)


def test_distinct_ranks_huge():
    total = 2 ** 70
    ranks = distinct_ranks(icus_rng.stream(0), total, 6)
    assert len(ranks) == 6
    assert all(0 <= r < total for r in ranks)
    assert list(ranks) == sorted(set(ranks))


def test_sample_design_huge():
    d = BernoulliDesign(101, 50, 20, seed=0)
    sd = sample_design(d)
    assert sd.ranks.dtype == object
    tuples = sd.tuples()
    assert tuples.shape == (sd.n_hat, 50)
    assert np.all(np.diff(tuples, axis=1) > 0)
