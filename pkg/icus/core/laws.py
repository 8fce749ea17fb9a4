from fractions import Fraction
from typing import Sequence

import numpy as np

PROB_SUM_TOL = 1e-12


class SourceLaw:
    """Law of the i.i.d. observations X_1, ..., X_n.

    Laws are stateless: all randomness comes from the generator passed to `sample`.
    """
    name = None

    @property
    def is_finite(self):
        return False

    def sample(self, rng, size):
        raise NotImplementedError()

    def __repr__(self):
        return f'{self.__class__.__name__}(name="{self.name}")'


class FiniteDiscrete(SourceLaw):
    """Law on a finite support with exact expectations by enumeration

    Parameters
    ----------
    support:
        strictly increasing support points, at least two
    probs:
        strictly positive probabilities summing to one. When every entry is a
        `fractions.Fraction` (or int) the exact rationals are kept in `probs_exact`.
    name:
        registry name, optional
    """
    def __init__(self, support: Sequence[float], probs: Sequence, name=None):
        if len(support) < 2:
            raise ValueError(f'Support size must be >= 2, got {len(support)}')
        if len(support) != len(probs):
            raise ValueError(f'Support and probs lengths differ: {len(support)} != {len(probs)}')

        support = np.asarray(support, dtype=np.float64)
        if np.any(np.diff(support) <= 0):
            raise ValueError(f'Support points must be strictly increasing: {support.tolist()}')

        if all(isinstance(p, (Fraction, int)) for p in probs):
            self.probs_exact = tuple(Fraction(p) for p in probs)
            if sum(self.probs_exact) != 1:
                raise ValueError(f'Probabilities sum to {sum(self.probs_exact)}, expected 1')
        else:
            self.probs_exact = None
        probs = np.asarray([float(p) for p in probs], dtype=np.float64)
        if np.any(probs <= 0):
            raise ValueError(f'Probabilities must be strictly positive: {probs.tolist()}')
        if abs(sum(Fraction(p) for p in probs.tolist()) - 1) > PROB_SUM_TOL:
            raise ValueError(f'Probabilities sum to {probs.sum()!r}, expected 1')

        self.support = support
        self.probs = probs
        self.name = name

    @property
    def is_finite(self):
        return True

    @property
    def size(self):
        return len(self.support)

    def sample(self, rng, size):
        ix = rng.choice(self.size, size=size, p=self.probs)
        return self.support[ix]

    def mean(self):
        return float(np.dot(self.probs, self.support))


class Samplable(SourceLaw):
    """Continuous (or otherwise non-enumerated) law with Monte Carlo expectations"""
    names = ('stdnormal', 'uniform01', 'rademacher', 'exp1')

    def __init__(self, name, **params):
        if name not in self.names:
            raise AttributeError(f'Unknown samplable law "{name}", expected one of {self.names}')
        self.name = name
        self.params = params

    def sample(self, rng, size):
        if self.name == 'stdnormal':
            return rng.standard_normal(size)
        if self.name == 'uniform01':
            return rng.random(size)
        if self.name == 'rademacher':
            return rng.integers(0, 2, size=size).astype(np.float64) * 2.0 - 1.0
        if self.name == 'exp1':
            return rng.standard_exponential(size)
        raise AssertionError('Never happens')


def rademacher():
    return FiniteDiscrete([-1.0, 1.0], [Fraction(1, 2), Fraction(1, 2)], name='rademacher')


def uniform3():
    return FiniteDiscrete([0.0, 1.0, 2.0], [Fraction(1, 3)] * 3, name='uniform3')


LAWS = {
    'rademacher': rademacher,
    'uniform3': uniform3,
    'stdnormal': lambda: Samplable('stdnormal'),
    'uniform01': lambda: Samplable('uniform01'),
    'exp1': lambda: Samplable('exp1'),
}


def get_law(name) -> SourceLaw:
    law_f = LAWS.get(name)
    if law_f is None:
        raise AttributeError(f'Can not find law "{name}", available: {sorted(LAWS)}')
    return law_f()


def finite_law_names():
    return [name for name in sorted(LAWS) if get_law(name).is_finite]
