import hashlib
import logging
import math
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)

FSUM_CHUNK = 2 ** 16


def block_iterator(iterator, size):
    bucket = list()
    for e in iterator:
        bucket.append(e)
        if len(bucket) >= size:
            yield bucket
            bucket = list()
    if bucket:
        yield bucket


def fsum(values):
    """Compensated sum of a 1-d array.

    Small arrays go straight to `math.fsum`. Longer ones are split into chunks, each chunk
    summed exactly with `math.fsum` and the chunk partials summed again with `math.fsum`.
    """
    values = np.asarray(values, dtype=np.float64).ravel()
    if len(values) <= FSUM_CHUNK:
        return math.fsum(values.tolist())
    return math.fsum(
        math.fsum(values[i:i + FSUM_CHUNK].tolist())
        for i in range(0, len(values), FSUM_CHUNK)
    )


class CompensatedSum:
    """Running compensated sum over blocks of values.

    Keeps exact partials per block so the order of block arrival changes nothing as long as
    the blocks themselves are the same.
    """
    def __init__(self):
        self._partials = []
        self._count = 0

    def update(self, values):
        values = np.asarray(values, dtype=np.float64).ravel()
        self._partials.append(fsum(values))
        self._count += len(values)

    @property
    def count(self):
        return self._count

    def compute(self):
        return math.fsum(self._partials)


def fmt17(x):
    """17 significant digits, round-trip exact for doubles"""
    if x is None:
        return ''
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f'{float(x):.17g}'


def build_digest():
    """Short sha256 over the package sources, stable for a given build"""
    root = Path(__file__).parent
    h = hashlib.sha256()
    for path in sorted(root.rglob('*.py')):
        h.update(str(path.relative_to(root)).encode())
        h.update(path.read_bytes())
    return h.hexdigest()[:12]
