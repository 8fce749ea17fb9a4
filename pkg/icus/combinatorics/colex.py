"""Combinatorial number system on the index set of size-m subsets of {0, ..., n-1}.

A subset c_1 < ... < c_m has colex rank sum_i C(c_i, i).
"""
import functools

import numpy as np

from icus.combinatorics.binom import BinomialTable, binom


@functools.lru_cache(maxsize=32)
def get_table(n, m):
    return BinomialTable(n, m)


def rank(subset):
    subset = sorted(int(c) for c in subset)
    if len(set(subset)) != len(subset) or (subset and subset[0] < 0):
        raise ValueError(f'Expected distinct non-negative indices, got {subset}')
    return sum(binom(c, i) if c >= i else 0 for i, c in enumerate(subset, start=1))


def unrank(r, n, m):
    table = get_table(n, m)
    r = int(r)
    if not 0 <= r < table.total:
        raise ValueError(f'Rank {r} out of range [0, {table.total}) for n={n}, m={m}')
    out = [0] * m
    for i in range(m, 0, -1):
        c = table.largest_below(i, r)
        out[i - 1] = c
        r -= table.columns[i][c]
    return tuple(out)


def unrank_many(ranks, n, m):
    """Index tuples (T, m) for an array of ranks, rows strictly increasing"""
    table = get_table(n, m)
    if not table.fits_int64:
        return np.array([unrank(r, n, m) for r in ranks], dtype=np.int64).reshape(-1, m)

    r = np.array(ranks, dtype=np.int64)
    if len(r) and (r.min() < 0 or r.max() >= table.total):
        raise ValueError(f'Ranks out of range [0, {table.total}) for n={n}, m={m}')
    out = np.empty((len(r), m), dtype=np.int64)
    for i in range(m, 0, -1):
        col = table.np_columns[i]
        c = np.searchsorted(col, r, side='right') - 1
        out[:, i - 1] = c
        r = r - col[c]
    return out


def iter_tuples(n, m, block_size=2 ** 16):
    """All C(n, m) index tuples in colex order, in blocks"""
    total = binom(n, m)
    for start in range(0, total, block_size):
        stop = min(start + block_size, total)
        if total < 2 ** 63:
            yield unrank_many(np.arange(start, stop, dtype=np.int64), n, m)
        else:
            yield unrank_many(range(start, stop), n, m)


def rank_many(tuples, n, m):
    """Colex ranks of index tuples (T, m) with strictly increasing rows"""
    table = get_table(n, m)
    tuples = np.asarray(tuples, dtype=np.int64).reshape(-1, m)
    if not table.fits_int64:
        return [rank(row) for row in tuples]
    out = np.zeros(len(tuples), dtype=np.int64)
    for i in range(1, m + 1):
        out += table.np_columns[i][tuples[:, i - 1]]
    return out
