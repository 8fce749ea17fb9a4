"""Symmetric kernels h: M^m -> R evaluated on blocks of index tuples.

A kernel consumes an array of shape (T, m) (or (T, m, 2) for paired observations) and
returns the T kernel values. Scalar arguments are sorted along the tuple axis before the
kernel function sees them, so every registry kernel is permutation invariant bit for bit.
"""
import functools
import logging
from math import comb

import numpy as np

from icus.util import fsum

logger = logging.getLogger(__name__)


class Kernel:
    """Symmetric kernel of degree `degree`

    Parameters
    ----------
    name:
        identifier, `_centered` is appended by `center_kernel`
    degree:
        number of observations the kernel consumes, m >= 2
    func:
        module level function (T, m[, 2]) -> (T,). Must be picklable for worker pools.
    arity:
        values per observation. 2 for paired observations, 1 otherwise.
    offset:
        subtracted from every value of `func`
    complete_func:
        optional closed form of the complete U-statistic of `func` on a data vector
    """
    def __init__(self, name, degree, func, arity=1, offset=0.0, complete_func=None):
        if degree < 2:
            raise ValueError(f'Kernel degree must be >= 2, got {degree}')
        if arity not in (1, 2):
            raise ValueError(f'Kernel arity must be 1 or 2, got {arity}')
        self.name = name
        self.degree = degree
        self.func = func
        self.arity = arity
        self.offset = float(offset)
        self.complete_func = complete_func

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        expected_ndim = 2 if self.arity == 1 else 3
        if x.ndim != expected_ndim or x.shape[1] != self.degree:
            raise ValueError(f'Kernel "{self.name}" expects shape (T, {self.degree}' +
                             (', 2)' if self.arity == 2 else ')') + f', got {x.shape}')
        if self.arity == 1:
            x = np.sort(x, axis=1)
        values = self.func(x)
        if self.offset != 0.0:
            values = values - self.offset
        return values

    def complete(self, values):
        """Closed form complete U-statistic on `values`, None when no closed form exists"""
        if self.complete_func is None:
            return None
        return self.complete_func(np.asarray(values, dtype=np.float64)) - self.offset

    def __repr__(self):
        return f'Kernel(name="{self.name}", degree={self.degree}, arity={self.arity})'


def center_kernel(k: Kernel, mu) -> Kernel:
    """Kernel evaluating k(...) - mu"""
    return Kernel(
        name=f'{k.name}_centered',
        degree=k.degree,
        func=k.func,
        arity=k.arity,
        offset=k.offset + float(mu),
        complete_func=k.complete_func,
    )


def _elementary_symmetric(values, m):
    e = np.zeros(m + 1)
    e[0] = 1.0
    for x in values:
        e[1:] = e[1:] + x * e[:-1]
    return e[m]


def _product(x):
    return np.prod(x, axis=1)


def _product_complete(values, m):
    return _elementary_symmetric(values, m) / comb(len(values), m)


def _sample_variance(x):
    return (x[:, 0] - x[:, 1]) ** 2 / 2.0


def _sample_variance_complete(values):
    return float(np.var(values, ddof=1))


def _kendall_sign(x):
    return np.sign((x[:, 0, 0] - x[:, 1, 0]) * (x[:, 0, 1] - x[:, 1, 1]))


def _mean_pow3(x):
    return (x[:, 0] + x[:, 1]) ** 3


def _mean_pow3_complete(values):
    # sum_{i<j} (x_i + x_j)^3 = (n - 1) S3 + 3 (S2 S1 - S3)
    n = len(values)
    s1, s2, s3 = fsum(values), fsum(values ** 2), fsum(values ** 3)
    return ((n - 1) * s3 + 3.0 * (s2 * s1 - s3)) / comb(n, 2)


def _constant(c, x):
    return np.full(x.shape[0], c, dtype=np.float64)


def _constant_complete(c, values):
    return c


def product(m=2):
    return Kernel('product', m, _product,
                  complete_func=functools.partial(_product_complete, m=m))


def sample_variance(m=2):
    _check_degree('sample_variance', m, 2)
    return Kernel('sample_variance', 2, _sample_variance, complete_func=_sample_variance_complete)


def kendall_sign(m=2):
    _check_degree('kendall_sign', m, 2)
    return Kernel('kendall_sign', 2, _kendall_sign, arity=2)


def mean_pow3(m=2):
    _check_degree('mean_pow3', m, 2)
    return Kernel('mean_pow3', 2, _mean_pow3, complete_func=_mean_pow3_complete)


def constant(m=2, c=0.0):
    return Kernel('constant', m, functools.partial(_constant, float(c)),
                  complete_func=functools.partial(_constant_complete, float(c)))


def _check_degree(name, m, expected):
    if m != expected:
        raise ValueError(f'Kernel "{name}" has fixed degree {expected}, got m={m}')


KERNELS = {
    'product': product,
    'sample_variance': sample_variance,
    'kendall_sign': kendall_sign,
    'mean_pow3': mean_pow3,
    'constant': constant,
}


def get_kernel(name, m=2, **params) -> Kernel:
    kernel_f = KERNELS.get(name)
    if kernel_f is None:
        raise AttributeError(f'Can not find kernel "{name}", available: {sorted(KERNELS)}')
    return kernel_f(m=m, **params)
