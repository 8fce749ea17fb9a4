import numpy as np
import pytest

from icus import rng as icus_rng
from icus.core.kernels import Kernel, center_kernel, get_kernel


def test_product():
    k = get_kernel('product')
    assert np.array_equal(k(np.array([[2.0, 3.0], [-1.0, 4.0]])), [6.0, -4.0])
    k3 = get_kernel('product', m=3)
    assert k3.degree == 3
    assert k3(np.array([[1.0, 2.0, 3.0]]))[0] == 6.0


def test_sample_variance():
    k = get_kernel('sample_variance')
    assert np.array_equal(k(np.array([[0.0, 2.0], [1.0, 1.0]])), [2.0, 0.0])


def test_mean_pow3():
    k = get_kernel('mean_pow3')
    assert k(np.array([[1.0, 2.0]]))[0] == 27.0


def test_kendall_sign():
    k = get_kernel('kendall_sign')
    assert k.arity == 2
    x = np.array([
        [[1.0, 1.0], [2.0, 2.0]],
        [[1.0, 2.0], [2.0, 1.0]],
        [[1.0, 2.0], [1.0, 3.0]],
    ])
    assert np.array_equal(k(x), [1.0, -1.0, 0.0])


def test_constant():
    k = get_kernel('constant', m=3, c=2.5)
    assert np.array_equal(k(np.zeros((4, 3))), np.full(4, 2.5))
    assert k.complete(np.arange(5.0)) == 2.5


def test_symmetry_fuzz():
    rng = icus_rng.stream(0)
    for name, m in [('product', 2), ('product', 3), ('sample_variance', 2), ('mean_pow3', 2)]:
        k = get_kernel(name, m)
        x = rng.standard_normal((10 ** 5, m))
        for perm in [np.roll(np.arange(m), 1), np.arange(m)[::-1]]:
            assert np.array_equal(k(x), k(x[:, perm]))
        rows = rng.permuted(np.tile(np.arange(m), (len(x), 1)), axis=1)
        assert np.array_equal(k(x), k(np.take_along_axis(x, rows, axis=1)))


def test_shape_validation():
    k = get_kernel('product')
    with pytest.raises(ValueError):
        k(np.zeros((3, 3)))
    with pytest.raises(ValueError):
        k(np.zeros(3))
    with pytest.raises(ValueError):
        get_kernel('kendall_sign')(np.zeros((3, 2)))


def test_kernel_validation():
    with pytest.raises(ValueError):
        Kernel('bad', 1, lambda x: x[:, 0])
    with pytest.raises(ValueError):
        Kernel('bad', 2, lambda x: x[:, 0], arity=3)
    with pytest.raises(ValueError):
        get_kernel('sample_variance', m=3)
    with pytest.raises(AttributeError):
        get_kernel('gini')


def test_center_kernel():
    x = icus_rng.stream(1).standard_normal((50, 2))
    k = get_kernel('product')
    assert np.array_equal(center_kernel(k, 0.0)(x), k(x))

    kc = center_kernel(get_kernel('sample_variance'), 2 / 3)
    assert kc.name == 'sample_variance_centered'
    assert np.allclose(kc(x), get_kernel('sample_variance')(x) - 2 / 3, rtol=0, atol=1e-15)

    zero = center_kernel(get_kernel('constant', c=1.5), 1.5)
    assert np.array_equal(zero(x), np.zeros(50))
    assert zero.complete(x[:, 0]) == 0.0


def test_complete_closed_forms():
    k = get_kernel('product')
    assert k.complete(np.array([1.0, 2.0, 3.0])) == pytest.approx(11 / 3, rel=1e-15)
    assert get_kernel('sample_variance').complete(np.array([1.0, 2.0, 3.0, 4.0])) == pytest.approx(5 / 3)
    assert get_kernel('kendall_sign').complete(np.zeros((4, 2))) is None
