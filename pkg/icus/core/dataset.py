import logging

import numpy as np
import pandas as pd

from icus import rng as icus_rng
from icus.core.laws import SourceLaw

logger = logging.getLogger(__name__)


class Dataset:
    """Observations X_1, ..., X_n

    `values` has shape (n,) for scalar observations or (n, 2) for paired ones.
    `law` and `seed` are None for data read from a file.
    """
    def __init__(self, values, law: SourceLaw = None, seed=None):
        values = np.asarray(values, dtype=np.float64)
        if values.ndim not in (1, 2) or (values.ndim == 2 and values.shape[1] != 2):
            raise ValueError(f'Dataset values must have shape (n,) or (n, 2), got {values.shape}')
        if not np.all(np.isfinite(values)):
            raise ValueError('Dataset values must be finite')
        self.values = values
        self.law = law
        self.seed = seed

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def arity(self):
        return 1 if self.values.ndim == 1 else 2

    def tuples(self, idx):
        """Observations at index tuples `idx` of shape (T, m)"""
        return self.values[np.asarray(idx, dtype=np.int64)]

    @classmethod
    def from_law(cls, law: SourceLaw, n, seed=None, arity=1, rng=None):
        """Draw n observations. Uses `rng` when given, else the (seed, DATA) stream."""
        if rng is None:
            rng = icus_rng.stream(seed, icus_rng.DATA)
        size = n if arity == 1 else (n, 2)
        return cls(law.sample(rng, size), law=law, seed=seed)

    @classmethod
    def from_csv(cls, path):
        """Plain numeric CSV without header: one column, or two columns for paired data"""
        df = pd.read_csv(path, header=None, comment='#', float_precision='round_trip')
        if df.shape[1] > 2:
            raise ValueError(f'Expected 1 or 2 numeric columns in "{path}", got {df.shape[1]}')
        values = df.to_numpy(dtype=np.float64)
        if values.shape[1] == 1:
            values = values[:, 0]
        logger.info(f'Loaded {len(values)} observations from "{path}"')
        return cls(values)

    def to_csv(self, path):
        pd.DataFrame(self.values.reshape(self.n, -1)).to_csv(
            path, header=False, index=False, float_format='%.17g')

    def __repr__(self):
        law_name = None if self.law is None else self.law.name
        return f'Dataset(n={self.n}, arity={self.arity}, law="{law_name}", seed={self.seed})'
