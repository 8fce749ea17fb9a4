"""Counter-based random streams.

Every random draw in the package goes through a `numpy.random.Generator` backed by the
Philox counter-based bit generator. A stream is addressed by a base seed and a tuple of
non-negative integer counters (replicate index, purpose, ...), never by worker identity,
so results do not depend on how replicates are scheduled.
"""
import numpy as np

DATA = 0
DESIGN = 1
AUX = 2


def stream(seed, *counters):
    """Independent generator for `(seed, *counters)`"""
    if seed is None:
        raise AttributeError('Explicit seed required, got None')
    ss = np.random.SeedSequence(entropy=int(seed) % 2 ** 64, spawn_key=tuple(int(c) for c in counters))
    return np.random.Generator(np.random.Philox(ss))


def as_stream(rng_or_seed, *counters):
    if isinstance(rng_or_seed, np.random.Generator):
        return rng_or_seed
    return stream(rng_or_seed, *counters)
