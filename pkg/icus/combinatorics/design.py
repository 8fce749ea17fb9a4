import logging
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from icus import rng as icus_rng
from icus.combinatorics.binom import INT64_LIMIT, binom
from icus.combinatorics.colex import unrank_many

logger = logging.getLogger(__name__)

BINOMIAL_CHUNK = 2 ** 62


@dataclass(frozen=True)
class BernoulliDesign:
    """Every index tuple is kept independently with probability p = N / C(n, m)"""
    n: int
    m: int
    budget_N: int
    seed: int = None

    def __post_init__(self):
        if not 2 <= self.m or not 2 * self.m < self.n:
            raise ValueError(f'Design requires 2 <= m < n/2, got n={self.n}, m={self.m}')
        if not 0 < self.budget_N < self.total:
            raise ValueError(f'Budget must satisfy 0 < N < C(n,m)={self.total}, got N={self.budget_N}')

    @cached_property
    def total(self):
        return binom(self.n, self.m)

    @property
    def p(self):
        return self.budget_N / self.total

    @property
    def alpha(self):
        return self.n / self.budget_N


class SampledDesign:
    """Realised design: N^ = len(ranks) distinct sorted colex ranks in [0, C(n, m))

    `ranks` is an int64 array when C(n, m) < 2^63, else an object array of Python ints.
    """
    def __init__(self, design: BernoulliDesign, ranks):
        if design.total < INT64_LIMIT:
            ranks = np.asarray(ranks, dtype=np.int64)
        else:
            ranks = np.array([int(r) for r in ranks], dtype=object)
        if len(ranks) > 1 and not all(ranks[1:] > ranks[:-1]):
            raise ValueError('Design ranks must be strictly increasing')
        if len(ranks) and (ranks[0] < 0 or ranks[-1] >= design.total):
            raise ValueError(f'Design ranks out of range [0, {design.total})')
        self.design = design
        self.ranks = ranks

    @property
    def n_hat(self):
        return len(self.ranks)

    def tuples(self, start=0, stop=None):
        """Index tuples (T, m) of the selected ranks[start:stop]"""
        return unrank_many(self.ranks[start:stop], self.design.n, self.design.m)

    def iter_tuples(self, block_size=2 ** 16):
        for start in range(0, self.n_hat, block_size):
            yield self.tuples(start, start + block_size)

    @classmethod
    def full(cls, design: BernoulliDesign):
        """Every index tuple selected, N^ = C(n, m)"""
        return cls(design, np.arange(design.total, dtype=np.int64))

    def to_csv_line(self):
        d = self.design
        return ','.join(str(int(v)) for v in [d.n, d.m, d.budget_N, self.n_hat, *self.ranks])

    @classmethod
    def from_csv_line(cls, line, seed=None):
        fields = [int(v) for v in line.strip().split(',')]
        n, m, budget_N, n_hat, ranks = fields[0], fields[1], fields[2], fields[3], fields[4:]
        if len(ranks) != n_hat:
            raise ValueError(f'Design line declares n_hat={n_hat} but lists {len(ranks)} ranks')
        return cls(BernoulliDesign(n, m, budget_N, seed=seed), ranks)

    def __repr__(self):
        d = self.design
        return f'SampledDesign(n={d.n}, m={d.m}, N={d.budget_N}, n_hat={self.n_hat})'


def _truncated_binomial(rng, size, p):
    """Binomial(size, p) conditioned on being positive: first success position, then the rest"""
    log_q = math.log1p(-p)
    hit = -math.expm1(size * log_q)
    u = rng.random()
    first = min(int(math.log1p(-u * hit) / log_q), size - 1)
    return 1 + int(rng.binomial(size - 1 - first, p))


def sample_binomial(rng, total, p, size=None):
    """Exact Binomial(total, p) for any Python int `total`

    Below 2^62 numpy's sampler is used directly. Larger totals are split into chunks of 2^62:
    the count of non-empty chunks is itself binomial, and each non-empty chunk contributes a
    zero-truncated binomial. With `size`, an array of that many independent draws.
    """
    if size is not None:
        if total < BINOMIAL_CHUNK:
            return rng.binomial(total, p, size=size).astype(np.int64)
        return np.array([sample_binomial(rng, total, p) for _ in range(size)], dtype=object)
    if total < BINOMIAL_CHUNK:
        return int(rng.binomial(total, p))
    chunks, rest = divmod(total, BINOMIAL_CHUNK)
    hit = -math.expm1(BINOMIAL_CHUNK * math.log1p(-p))
    nonempty = sample_binomial(rng, chunks, hit)
    return sum(_truncated_binomial(rng, BINOMIAL_CHUNK, p) for _ in range(nonempty)) + \
        sample_binomial(rng, rest, p)


def _distinct_int64(rng, total, count):
    ranks = np.unique(rng.integers(0, total, size=count, dtype=np.int64))
    while len(ranks) < count:
        extra = rng.integers(0, total, size=count - len(ranks), dtype=np.int64)
        ranks = np.union1d(ranks, extra)
    return ranks


def _uniform_big(rng, total):
    bits = (total - 1).bit_length()
    words = (bits + 63) // 64
    while True:
        value = 0
        for w in rng.integers(0, 2 ** 64, size=words, dtype=np.uint64):
            value = (value << 64) | int(w)
        value >>= words * 64 - bits
        if value < total:
            return value


def _distinct_big(rng, total, count):
    seen = set()
    while len(seen) < count:
        seen.add(_uniform_big(rng, total))
    return sorted(seen)


def distinct_ranks(rng, total, count):
    """`count` distinct uniform ranks in [0, total), sorted"""
    if total >= INT64_LIMIT:
        return _distinct_big(rng, total, count)
    if 2 * count > total:
        dropped = _distinct_int64(rng, total, total - count)
        return np.setdiff1d(np.arange(total, dtype=np.int64), dropped)
    return _distinct_int64(rng, total, count)


def sample_design(d: BernoulliDesign, rng=None) -> SampledDesign:
    """Bernoulli(p) selection of every index tuple, realised as a binomial count plus distinct ranks

    `rng` is a numpy Generator, a seed, or None for the design's own (seed, DESIGN) stream.
    """
    rng = icus_rng.as_stream(d.seed if rng is None else rng, icus_rng.DESIGN)
    n_hat = sample_binomial(rng, d.total, d.p)
    ranks = distinct_ranks(rng, d.total, n_hat)
    logger.debug(f'Sampled design n={d.n}, m={d.m}, N={d.budget_N}: n_hat={n_hat}')
    return SampledDesign(d, ranks)
