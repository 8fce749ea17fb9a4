import math

import pytest

from icus import rng as icus_rng
from icus.combinatorics.design import BernoulliDesign, sample_design
from icus.core.dataset import Dataset
from icus.core.kernels import get_kernel
from icus.core.laws import get_law
import icus.montecarlo.checks as checks
from icus.montecarlo.checks import CHECKS, DEFAULT_SIZES, _direct_decomposition, check_appendix, \
    check_combinatorics, check_complete_bound, check_conditional_bound, check_conditional_moments, \
    check_decomposition, check_hoeffding, check_rate, check_tails, run_check


def test_registry():
    assert set(CHECKS) == set(DEFAULT_SIZES)


def test_unknown_check():
    with pytest.raises(AttributeError):
        run_check('everything')


def test_decomposition():
    result = check_decomposition(pairs=40)
    assert result.name == 'decomposition'
    assert result.passed, result.details
    assert result.details['worst_rel_error'] <= 1e-12
    assert result.details['worst_bundle_error'] <= 1e-12


def test_direct_decomposition_independent_of_bundle():
    kernel = get_kernel('sample_variance')
    data = Dataset.from_law(get_law('uniform3'), 12, seed=3)
    sd = sample_design(BernoulliDesign(12, 2, 20), icus_rng.stream(3, icus_rng.DESIGN))
    direct = _direct_decomposition(data, kernel, sd, mu=0.5)
    values = kernel(data.tuples(sd.tuples())) - 0.5
    assert direct.u_incomplete == pytest.approx(math.fsum(values.tolist()) / max(sd.n_hat, 1), rel=1e-12, abs=1e-14)
    # mean over all pairs of (x_i - x_j)^2 / 2 is the unbiased sample variance
    assert direct.u_complete == pytest.approx(data.values.var(ddof=1), rel=1e-12)


def test_conditional_bound():
    result = check_conditional_bound(reps=2000)
    assert result.name == 'conditional_bound'
    assert result.passed, result.details
    assert result.details['bound'] > 0


def test_complete_bound():
    result = check_complete_bound(reps=5000)
    assert result.passed, result.details
    assert 0 <= result.details['ks'] <= result.details['bound']


def test_rate():
    result = check_rate(ns=(20, 40, 80, 160), reps=4000, slope_range=(-1.5, 0.0))
    assert result.passed, result.details
    assert result.details['slope'] < 0
    assert len(result.details['ks']) == 4


def test_tails_draws_through_sample_binomial(monkeypatch):
    calls = []

    def counting(rng, total, p, size=None):
        calls.append((total, size))
        return rng.binomial(total, p, size=size)

    monkeypatch.setattr(checks, 'sample_binomial', counting)
    result = check_tails(reps=2000, block_size=1000)
    assert [c[1] for c in calls] == [2000, 2000, 2000]
    assert all(c[0] == 1000 * 999 // 2 for c in calls)
    assert set(result.details) == {'N10', 'N28', 'N50', 'lower_tail'}


def test_hoeffding():
    result = check_hoeffding(instances=8)
    assert result.passed, result.details


def test_conditional_moments():
    result = check_conditional_moments(instances=2, draws=2 * 10 ** 4)
    assert result.passed, result.details


def test_tails():
    result = check_tails(reps=2 * 10 ** 4, block_size=5000)
    assert result.passed, result.details


def test_combinatorics():
    result = check_combinatorics(max_total=200, reps=3000)
    assert result.passed, result.details
    assert result.details['bijection']


def test_appendix():
    result = check_appendix(step=0.25, random_pairs=1000, bennett_reps=5000, fuzz=10 ** 4)
    assert result.passed, result.details
    row = result.to_row()
    assert row['name'] == 'appendix' and 'bennett=' in row['details']


def test_run_check_scaled():
    result = run_check('regime_contrast', size=0.1)
    assert result.passed, result.details
