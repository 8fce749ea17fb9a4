from bisect import bisect_right
from math import comb

import numpy as np

BINOM_LIMIT = 2 ** 128
INT64_LIMIT = 2 ** 63


class BinomialOverflowError(OverflowError):
    def __init__(self, n, k):
        super().__init__(f'C({n}, {k}) does not fit in 128 bits')
        self.n = n
        self.k = k


def binom(n, k):
    """Exact C(n, k) as a Python int below 2^128"""
    if not 0 <= k <= n:
        raise ValueError(f'binom requires 0 <= k <= n, got n={n}, k={k}')
    value = comb(n, k)
    if value >= BINOM_LIMIT:
        raise BinomialOverflowError(n, k)
    return value


class BinomialTable:
    """Columns C(c, i) for c = 0..n-1 and i = 1..m

    Python int columns serve scalar colex search. When C(n, m) < 2^63 int64 columns are
    built as well for vectorised unranking. Read only after construction.
    """
    def __init__(self, n, m):
        self.n = n
        self.m = m
        self.total = binom(n, m)
        self.columns = {i: [comb(c, i) for c in range(n)] for i in range(1, m + 1)}
        if self.total < INT64_LIMIT:
            self.np_columns = {i: np.array(col, dtype=np.int64) for i, col in self.columns.items()}
        else:
            self.np_columns = None

    @property
    def fits_int64(self):
        return self.np_columns is not None

    def largest_below(self, i, value):
        """Largest c with C(c, i) <= value"""
        return bisect_right(self.columns[i], value) - 1
