import math

import numpy as np

from icus.util import CompensatedSum, block_iterator, build_digest, fmt17, fsum


def test_block_iterator():
    assert list(block_iterator(range(5), 2)) == [[0, 1], [2, 3], [4]]
    assert list(block_iterator(range(4), 2)) == [[0, 1], [2, 3]]
    assert list(block_iterator([], 3)) == []


def test_fsum_cancellation():
    assert fsum([1e16, 1.0, -1e16]) == 1.0
    assert np.sum(np.array([1e16, 1.0, -1e16])) != 1.0


def test_fsum_chunked():
    values = np.full(200000, 0.1)
    assert abs(fsum(values) - 20000.0) < 1e-9
    assert fsum(np.arange(100000, dtype=np.float64)) == 99999 * 100000 / 2


def test_compensated_sum_blocks():
    s = CompensatedSum()
    s.update([1.0, 2.0])
    s.update(np.array([3.5, 1e-20]))
    assert s.count == 4
    assert s.compute() == 6.5


def test_fmt17():
    assert fmt17(0.1) == '0.10000000000000001'
    assert float(fmt17(1 / 3)) == 1 / 3
    assert fmt17(None) == ''
    assert fmt17(7) == '7'
    assert fmt17(np.int64(7)) == '7'
    assert fmt17(True) == 'True'
    assert float(fmt17(math.pi)) == math.pi


def test_build_digest():
    digest = build_digest()
    assert len(digest) == 12
    assert digest == build_digest()
