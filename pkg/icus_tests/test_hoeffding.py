import numpy as np
import pytest

from icus.core.dataset import Dataset
from icus.core.kernels import get_kernel
from icus.core.laws import get_law
from icus.core.moments import DegenerateProfileError, exact_moments, mc_moments
from icus.estimators import ApproximateInputError
from icus.hoeffding import decompose_uh2, mc_r_norm32, pi_r_h2, psi_tilde_r, r_norm32_bound, r_norm_bound
from icus_tests.utils.data_generation import gen_dataset


def get_setup():
    k, law = get_kernel('sample_variance'), get_law('uniform3')
    return k, law, exact_moments(k, law)


def test_psi_tilde_r():
    k, law, profile = get_setup()
    assert psi_tilde_r(k, law, 1, [0.0], profile) == pytest.approx(7 / 36, abs=1e-15)
    # x = 1: h~ values -1/6, -2/3, -1/6
    assert psi_tilde_r(k, law, 1, [1.0], profile) == pytest.approx((1 / 36 + 4 / 9 + 1 / 36) / 3 - 5 / 9, abs=1e-15)
    assert psi_tilde_r(k, law, 2, [0.0, 2.0], profile) == pytest.approx((4 / 3) ** 2 - 5 / 9, abs=1e-15)
    product = get_kernel('product')
    for x in [-1.0, 1.0]:
        assert psi_tilde_r(product, get_law('rademacher'), 1, [x]) == 0.0


def test_pi_r_h2_degenerate():
    k, law, profile = get_setup()
    support, probs = law.support, law.probs
    assert pi_r_h2(k, law, 1, [0.0], profile) == psi_tilde_r(k, law, 1, [0.0], profile)
    assert abs(sum(p * pi_r_h2(k, law, 1, [x], profile) for x, p in zip(support, probs))) < 1e-14
    for x in support:
        cond = sum(p * pi_r_h2(k, law, 2, [x, y], profile) for y, p in zip(support, probs))
        assert abs(cond) < 1e-14


def test_pi_r_h2_degree3():
    k, law = get_kernel('product', m=3), get_law('uniform3')
    profile = exact_moments(k, law)
    support, probs = law.support, law.probs
    for x in support:
        for y in support:
            cond = sum(p * pi_r_h2(k, law, 3, [x, y, z], profile) for z, p in zip(support, probs))
            assert abs(cond) < 1e-10


def test_decompose_identity():
    k, law, profile = get_setup()
    for seed in range(10):
        data = gen_dataset('uniform3', n=8, seed=seed)
        d = decompose_uh2(data, k, profile)
        assert d.eta.shape == (8,)
        assert abs(d.residual) <= 1e-10


def test_decompose_degree3():
    k, law = get_kernel('product', m=3), get_law('uniform3')
    profile = exact_moments(k, law)
    d = decompose_uh2(gen_dataset('uniform3', n=9, seed=4), k, profile)
    assert abs(d.residual) <= 1e-10


def test_decompose_rademacher_product():
    k, law = get_kernel('product'), get_law('rademacher')
    profile = exact_moments(k, law)
    d = decompose_uh2(gen_dataset('rademacher', n=10, seed=0), k, profile)
    assert np.allclose(d.eta, 2 / 10)
    assert d.remainder_R == pytest.approx(d.lhs, abs=1e-15)
    assert d.lhs == 0.0


def test_decompose_paired():
    k, law = get_kernel('kendall_sign'), get_law('rademacher')
    profile = exact_moments(k, law)
    d = decompose_uh2(gen_dataset('rademacher', n=7, seed=1, arity=2), k, profile)
    assert abs(d.residual) <= 1e-10


def test_decompose_errors():
    k, law, profile = get_setup()
    data = gen_dataset('uniform3', n=8)
    mc = mc_moments(k, law, reps=10 ** 4, seed=0)
    with pytest.raises(ApproximateInputError):
        decompose_uh2(data, k, mc)
    with pytest.raises(ValueError):
        decompose_uh2(Dataset([0.0, 0.5, 1.0, 2.0, 1.0]), k, profile, law=law)
    with pytest.raises(ValueError):
        decompose_uh2(Dataset([0.0, 1.0, 2.0, 1.0, 2.0]), k, profile)
    zero = exact_moments(get_kernel('constant', c=0.0), law)
    with pytest.raises(DegenerateProfileError):
        decompose_uh2(data, get_kernel('constant', c=0.0), zero)
    k4 = get_kernel('product', m=4)
    with pytest.raises(ValueError):
        decompose_uh2(gen_dataset('rademacher', n=9), k4, exact_moments(k4, get_law('rademacher')))


def test_r_norm32_bound():
    _, _, profile = get_setup()
    value = r_norm32_bound(profile, 100)
    assert 0 < value < np.inf
    assert r_norm32_bound(profile, 400) / value <= 0.5 + 1e-9
    assert r_norm_bound(profile, 100) == pytest.approx(value ** (2 / 3))
    assert r_norm32_bound(exact_moments(get_kernel('product'), get_law('rademacher')), 50) == 0.0
    with pytest.raises(ValueError):
        r_norm32_bound(profile, 1)


def test_mc_r_norm32():
    k, law, profile = get_setup()
    estimate = mc_r_norm32(k, law, 10, reps=200, seed=0, profile=profile)
    assert estimate.reps == 200
    assert estimate.abs32_mean > 0
    assert estimate.norm == pytest.approx(estimate.abs32_mean ** (2 / 3))
