import dataclasses
import math

import numpy as np
import pytest

from icus.bounds import report as R
from icus.bounds.report import Regime
from icus.bounds.theorems import (b_frak1, b_frak1_terms, b_frak2_terms, explicit_complete_bound,
                                  explicit_conditional_bound, explicit_conditional_report, k_nm1, k_nm2_bound,
                                  k_nmd, thm_bound)
from icus.combinatorics.binom import binom
from icus.combinatorics.design import BernoulliDesign, sample_design
from icus.core.dataset import Dataset
from icus.core.kernels import Kernel, get_kernel
from icus.core.laws import get_law
from icus.core.moments import DegenerateProfileError, MissingMomentError, exact_moments
from icus.estimators import ApproximateInputError, conditional_bn_moments, incomplete_u
from icus.hoeffding import r_norm32_bound, r_norm_bound
from icus_tests.utils.data_generation import gen_dataset


def get_profile():
    return exact_moments(get_kernel('sample_variance'), get_law('uniform3'))


def _sum2(x):
    return x[:, 0] + x[:, 1]


def test_k_nmd_examples():
    assert k_nmd(10, 2, 1) == pytest.approx(0.2)
    assert k_nmd(6, 3, 2) == pytest.approx(0.35)
    assert k_nmd(5, 2, 2) == pytest.approx(0.1)
    assert k_nmd(5, 2, 2) <= k_nm2_bound(5, 2) + 1e-15
    assert k_nm1(10, 2) == 0.2


def test_k_nmd_properties():
    for n, m in [(10, 2), (12, 3), (30, 4)]:
        values = [k_nmd(n, m, d) for d in range(1, m + 1)]
        assert all(a > b for a, b in zip(values, values[1:]))
        assert k_nmd(n, m, 1) == pytest.approx(k_nm1(n, m))
        assert k_nmd(n, m, m) == pytest.approx(1 / binom(n, m))
        assert k_nmd(n + 5, m, 2) < k_nmd(n, m, 2)
        assert k_nmd(n, m, 2) <= k_nm2_bound(n, m) + 1e-15
    with pytest.raises(ValueError):
        k_nmd(5, 2, 3)
    with pytest.raises(ValueError):
        k_nmd(5, 2, 0)


def test_b_frak1():
    profile = get_profile()
    n = 400
    total = binom(n, 2)
    assert b_frak1(profile, n, 2, 400, 400 / total) < b_frak1(profile, n, 2, 100, 100 / total)
    (_, lyapunov), (_, lower_tail) = b_frak1_terms(profile, n, 2, 100, 0.0)
    assert lyapunov == pytest.approx(profile.abs3_h / (10 * profile.var_h ** 1.5))
    assert lower_tail == pytest.approx(math.exp(-n * profile.var_h ** 3 / (48 * profile.abs3_h ** 2)))


def test_thm31():
    profile = get_profile()
    report = thm_bound('thm31', profile, 400, 2, 40000)
    assert report.regime == Regime.NggN
    assert not report.constant_known
    assert report.labels == [R.B2_LYAPUNOV, R.B2_VARIANCE_GAP, R.SAMPLING_RATIO, R.INV_SQRT_N]
    assert report.term(R.INV_SQRT_N) == pytest.approx(1 / 200)
    assert math.isfinite(report.total)


def test_thm31_variance_gap_vanishes():
    k = Kernel('sum', 2, _sum2)
    profile = exact_moments(k, get_law('uniform3'))
    assert profile.var_h == pytest.approx(2 * profile.var_g)
    report = thm_bound(Regime.NggN, profile, 100, 2, 1000)
    assert report.term(R.B2_VARIANCE_GAP) == pytest.approx(0.0, abs=1e-7)


def test_thm32_degenerate():
    profile = exact_moments(get_kernel('product'), get_law('rademacher'))
    n = budget_N = 300
    p = budget_N / binom(n, 2)
    report = thm_bound('thm32', profile, n, 2, budget_N)
    assert report.term(R.K_TERM) == pytest.approx(math.sqrt(budget_N * k_nmd(n, 2, 2)) / math.sqrt(1 - p))
    assert report.surrogate
    assert R.R_TERM in report.labels and R.PSI_TERM in report.labels
    fourth = thm_bound('thm32', profile, n, 2, budget_N, use_4th_moment=True)
    assert not fourth.surrogate
    assert R.VAR_H2_TERM in fourth.labels and R.R_TERM not in fourth.labels


def test_r_term_is_norm_bound():
    profile = exact_moments(get_kernel('sample_variance'), get_law('uniform3'))
    n = 100
    for regime, budget_N in [('thm32', 100), ('thm33', 100)]:
        report = thm_bound(regime, profile, n, 2, budget_N)
        assert report.term(R.R_TERM) == pytest.approx(r_norm_bound(profile, n))
        assert report.term(R.R_TERM) == pytest.approx(r_norm32_bound(profile, n) ** (2 / 3))
        assert report.term(R.R_TERM) > r_norm32_bound(profile, n)


def test_thm32_k_simplified():
    profile = get_profile()
    n, budget_N = 50, 20
    p = budget_N / binom(n, 2)
    report = thm_bound('thm32', profile, n, 2, budget_N, k_simplified=True)
    assert report.term(R.K_TERM) == pytest.approx(math.sqrt(budget_N * 2 / n) / math.sqrt(1 - p))


def test_thm33():
    profile = get_profile()
    report = thm_bound('thm33', profile, 200, 2, 200)
    assert R.SQRT_M_TERM in report.labels
    assert R.B1_LYAPUNOV in report.labels and R.B2_LYAPUNOV in report.labels
    fourth = thm_bound('thm33', profile, 200, 2, 200, use_4th_moment=True)
    assert fourth.term(R.N_OVER_N2) == pytest.approx(200 / (200 ** 2 * (1 - 200 / binom(200, 2))))


def test_thm_bound_errors():
    zero = exact_moments(get_kernel('constant', c=0.0), get_law('uniform3'))
    with pytest.raises(DegenerateProfileError):
        thm_bound('thm31', zero, 100, 2, 100)
    with pytest.raises(ValueError):
        thm_bound('thm31', get_profile(), 100, 3, 100)
    with pytest.raises(ValueError):
        thm_bound('thm31', get_profile(), 10, 2, 45)
    with pytest.raises(AttributeError):
        thm_bound('complete', get_profile(), 100, 2, 100)
    degenerate = exact_moments(get_kernel('product'), get_law('rademacher'))
    with pytest.raises(DegenerateProfileError):
        thm_bound('thm31', degenerate, 100, 2, 100)
    with pytest.raises(MissingMomentError):
        thm_bound('thm32', dataclasses.replace(get_profile(), pi_r_abs32=None), 100, 2, 100)


def test_explicit_complete_bound():
    profile = get_profile()
    report = explicit_complete_bound(profile, 400, 2)
    assert report.constant_known
    assert report.terms[0][1] == pytest.approx(0.35945, abs=1e-4)
    assert report.terms[1][1] == pytest.approx(0.341421, abs=1e-5)
    assert report.total == pytest.approx(0.7009, abs=1e-3)

    stripped = [value for _, value in b_frak2_terms(profile, 400, 2)]
    assert report.terms[0][1] == pytest.approx(6.1 * stripped[0])
    assert report.terms[1][1] == pytest.approx((1 + math.sqrt(2)) * stripped[1])

    quad = explicit_complete_bound(profile, 1600, 2)
    assert np.allclose([v for _, v in quad.terms], [v / 2 for _, v in report.terms])

    with pytest.raises(DegenerateProfileError):
        explicit_complete_bound(exact_moments(get_kernel('product'), get_law('rademacher')), 100, 2)


def test_explicit_conditional_bound():
    data = gen_dataset('stdnormal', n=30, seed=1)
    k = get_kernel('product')
    design = BernoulliDesign(30, 2, 100, seed=0)
    bundle = incomplete_u(data, k, sample_design(design), mu=0.0)
    value = explicit_conditional_bound(bundle, 100, design.p)
    assert value > 0
    assert value == pytest.approx(0.56 * conditional_bn_moments(data, k, design).abs3_sum, rel=1e-12)
    report = explicit_conditional_report(bundle, 100, design.p)
    assert report.constant_known and report.total == pytest.approx(value)

    with pytest.raises(ValueError):
        explicit_conditional_bound(bundle, 100, 0.995)
    with pytest.raises(ApproximateInputError):
        explicit_conditional_bound(dataclasses.replace(bundle, approximate=True), 100, design.p)


def test_explicit_conditional_degenerate():
    data = Dataset([0.0] * 8)
    design = BernoulliDesign(8, 2, 10, seed=0)
    bundle = incomplete_u(data, get_kernel('product'), sample_design(design))
    with pytest.raises(DegenerateProfileError):
        explicit_conditional_bound(bundle, 10, design.p)
