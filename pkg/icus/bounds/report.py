import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Tuple

import pandas as pd

from icus.util import fsum


class Regime(Enum):
    NggN = 'thm31'
    NllNd = 'thm32'
    NasympN = 'thm33'
    CompleteExplicit = 'complete'
    ConditionalExplicit = 'conditional'

    @classmethod
    def from_name(cls, name):
        for regime in cls:
            if name in (regime.value, regime.name):
                return regime
        raise AttributeError(f'Unknown regime "{name}", expected one of {[r.value for r in cls]}')


B1_LYAPUNOV = 'B1.lyapunov'
B1_LOWER_TAIL = 'B1.lower_tail'
B2_LYAPUNOV = 'B2.lyapunov'
B2_VARIANCE_GAP = 'B2.variance_gap'
SAMPLING_RATIO = 'sampling_ratio'
INV_SQRT_N = 'inv_sqrt_N'
K_TERM = 'K_term'
PSI_TERM = 'psi_term'
R_TERM = 'R_term'
VAR_H2_TERM = 'var_h2_term'
SQRT_M_TERM = 'sqrt_m_term'
N_OVER_N2 = 'N_over_n2'
CONDITIONAL = 'conditional_lyapunov'
TOTAL = 'total'


@dataclass(frozen=True)
class BoundReport:
    """Named bound terms; `total` is their sum

    `constant_known` is false for theorem bounds whose absolute constant is unspecified.
    `surrogate` marks totals where the remainder norm was replaced by its moment bound.
    """
    regime: Regime
    terms: Tuple[Tuple[str, float], ...]
    constant_known: bool
    surrogate: bool = False
    inputs: dict = field(default_factory=dict)

    def __post_init__(self):
        for label, value in self.terms:
            if not (value >= 0 and math.isfinite(value)):
                raise ValueError(f'Bound term "{label}" must be finite and non-negative, got {value!r}')

    @property
    def total(self):
        return fsum([value for _, value in self.terms])

    def term(self, label):
        for name, value in self.terms:
            if name == label:
                return value
        raise AttributeError(f'No term "{label}" in {[name for name, _ in self.terms]}')

    @property
    def labels(self):
        return [label for label, _ in self.terms]

    def to_frame(self):
        rows = [(self.regime.value, label, value) for label, value in self.terms]
        rows.append((self.regime.value, TOTAL, self.total))
        df = pd.DataFrame(rows, columns=['regime', 'term', 'value'])
        df['constant_known'] = self.constant_known
        df['surrogate'] = self.surrogate
        return df
