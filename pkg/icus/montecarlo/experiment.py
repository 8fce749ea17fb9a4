"""Replicated simulation of standardised incomplete U-statistics.

Replicate i draws its data from the (seed, i, DATA) stream and its design from the
(seed, i, DESIGN) stream, so the replicate sample does not depend on the worker count.
"""
import hashlib
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from enum import Enum
from multiprocessing import Pool
from typing import Optional, Union

import numpy as np

from icus import rng as icus_rng
from icus.combinatorics.binom import binom
from icus.combinatorics.design import BernoulliDesign, sample_design
from icus.core.dataset import Dataset
from icus.core.kernels import get_kernel
from icus.core.laws import get_law
from icus.core.moments import DegenerateProfileError, MomentProfile, get_profile
from icus.estimators import complete_sums, complete_u, selected_sum
from icus.montecarlo.ks import dkw_band, ks_to_normal
from icus.util import block_iterator

logger = logging.getLogger(__name__)

RESULT_COLUMNS = ['regime', 'kernel', 'law', 'n', 'm', 'N', 'R', 'ks', 'dkw_band', 'mean', 'var', 'seconds']


class SimRegime(Enum):
    Regime1 = 'regime1'
    Regime2 = 'regime2'
    Regime3 = 'regime3'
    CompleteOnly = 'complete'
    ConditionalOnly = 'conditional'

    @classmethod
    def from_name(cls, name):
        for regime in cls:
            if name in (regime.value, regime.name):
                return regime
        raise AttributeError(f'Unknown simulation regime "{name}", expected one of {[r.value for r in cls]}')


class AbsBudgetRule:
    def budget(self, n):
        raise NotImplementedError()


class LiteralBudget(AbsBudgetRule):
    def __init__(self, budget_N):
        self.budget_N = int(budget_N)

    def budget(self, n):
        return self.budget_N

    def __repr__(self):
        return str(self.budget_N)


class SquareBudget(AbsBudgetRule):
    def budget(self, n):
        return n * n

    def __repr__(self):
        return 'n^2'


class SqrtBudget(AbsBudgetRule):
    def budget(self, n):
        return int(round(math.sqrt(n)))

    def __repr__(self):
        return 'sqrt_n'


class LinearBudget(AbsBudgetRule):
    def __init__(self, c=1.0):
        self.c = float(c)

    def budget(self, n):
        return int(round(self.c * n))

    def __repr__(self):
        return f'{self.c:g}n'


def parse_budget_rule(rule) -> AbsBudgetRule:
    """'n^2', 'sqrt_n', 'cn' with a numeric c (e.g. '2.5n', 'n'), or a literal integer"""
    if isinstance(rule, AbsBudgetRule):
        return rule
    if isinstance(rule, (int, np.integer)):
        return LiteralBudget(rule)
    text = str(rule).strip().replace(' ', '')
    if text in ('n^2', 'n**2'):
        return SquareBudget()
    if text == 'sqrt_n':
        return SqrtBudget()
    if text.endswith('n'):
        coef = text[:-1].rstrip('*')
        try:
            return LinearBudget(float(coef) if coef else 1.0)
        except ValueError:
            pass
    try:
        return LiteralBudget(int(text))
    except ValueError:
        raise AttributeError(f'Can not parse budget rule "{rule}", expected n^2, sqrt_n, <c>n or an integer')


def resolve_budget(rule, n, m):
    """Budget for sample size n, kept inside [1, C(n, m) - 1]"""
    budget_N = parse_budget_rule(rule).budget(n)
    total = binom(n, m)
    if budget_N >= total:
        logger.warning(f'Budget N={budget_N} from rule "{rule}" is not below C({n},{m})={total}, '
                       f'clamped to {total - 1}')
        budget_N = total - 1
    if budget_N < 1:
        logger.warning(f'Budget N={budget_N} from rule "{rule}" raised to 1')
        budget_N = 1
    return budget_N


@dataclass(frozen=True)
class ExperimentSpec:
    """What to simulate

    Parameters
    ----------
    budget:
        budget rule, see `parse_budget_rule`
    normalizer:
        'random' divides by the realised N^, 'deterministic' by N and inflates the variance by E[h]^2
    complete_scale:
        CompleteOnly standardiser: 'exact' uses the finite-n variance of U_n,
        'projection' uses sqrt(n) / (m sigma_g)
    data_seed:
        seed of the fixed dataset for ConditionalOnly
    mu:
        centering constant, default the profile mean
    """
    law: str
    kernel: str
    regime: Union[SimRegime, str]
    n: int
    m: int = 2
    budget: Union[str, int] = 'n^2'
    reps: int = 10 ** 4
    seed: int = 0
    num_workers: int = 0
    normalizer: str = 'random'
    complete_scale: str = 'exact'
    data_seed: Optional[int] = None
    mu: Optional[float] = None
    block_size: int = 256

    def __post_init__(self):
        object.__setattr__(self, 'regime', self.regime if isinstance(self.regime, SimRegime)
                           else SimRegime.from_name(self.regime))
        object.__setattr__(self, 'budget', str(self.budget))
        if self.normalizer not in ('random', 'deterministic'):
            raise AttributeError(f'Unknown normalizer "{self.normalizer}", expected random or deterministic')
        if self.complete_scale not in ('exact', 'projection'):
            raise AttributeError(f'Unknown complete_scale "{self.complete_scale}", expected exact or projection')
        if self.reps < 1:
            raise ValueError(f'reps must be positive, got {self.reps}')
        if self.regime != SimRegime.CompleteOnly and not 2 <= self.m < self.n / 2:
            raise ValueError(f'Design requires 2 <= m < n/2, got n={self.n}, m={self.m}')
        if self.regime == SimRegime.ConditionalOnly and self.data_seed is None:
            raise ValueError('ConditionalOnly experiments need a data_seed')

    @property
    def budget_N(self):
        if self.regime == SimRegime.CompleteOnly:
            return None
        return resolve_budget(self.budget, self.n, self.m)

    @property
    def design(self):
        return BernoulliDesign(self.n, self.m, self.budget_N, seed=self.seed)

    def digest(self):
        fields = asdict(self)
        fields['regime'] = self.regime.value
        fields.pop('num_workers')
        fields.pop('block_size')
        text = ';'.join(f'{k}={fields[k]}' for k in sorted(fields))
        return hashlib.sha256(text.encode()).hexdigest()[:12]


@dataclass
class SimulationResult:
    spec: ExperimentSpec
    budget_N: Optional[int]
    ks: float
    dkw_band: float
    mean: float
    var: float
    seconds: float
    stats: np.ndarray = field(repr=False, default=None)

    @property
    def digest(self):
        return self.spec.digest()

    def to_row(self):
        s = self.spec
        return dict(regime=s.regime.value, kernel=s.kernel, law=s.law, n=s.n, m=s.m, N=self.budget_N,
                    R=s.reps, ks=self.ks, dkw_band=self.dkw_band, mean=self.mean, var=self.var,
                    seconds=self.seconds)


def standardizer(spec: ExperimentSpec, profile: MomentProfile, budget_N=None):
    """Scale that multiplies the centered statistic"""
    n, m = spec.n, spec.m
    det = spec.normalizer == 'deterministic'
    mu = profile.mean_h if spec.mu is None else spec.mu
    var_h = profile.var_h + (mu ** 2 if det else 0.0)
    if spec.regime == SimRegime.Regime1:
        profile.require_var_g()
        return math.sqrt(n) / (m * math.sqrt(profile.var_g))
    if spec.regime == SimRegime.Regime2:
        profile.require_var_h()
        return math.sqrt(budget_N) / math.sqrt(var_h)
    if spec.regime == SimRegime.Regime3:
        profile.require_var_g()
        alpha = n / budget_N
        return math.sqrt(n) / math.sqrt(m * m * profile.var_g + alpha * var_h)
    if spec.regime == SimRegime.CompleteOnly:
        if spec.complete_scale == 'projection':
            profile.require_var_g()
            return math.sqrt(n) / (m * math.sqrt(profile.var_g))
        var_u = profile.var_u_complete(n)
        if not var_u > 0:
            raise DegenerateProfileError(f'Complete U-statistic has zero variance at n={n}')
        return 1.0 / math.sqrt(var_u)
    return 1.0


def _replicate_data(spec, law, kernel, i):
    return Dataset.from_law(law, spec.n, arity=kernel.arity, rng=icus_rng.stream(spec.seed, i, icus_rng.DATA))


def _run_block(args):
    """Standardised statistics for the replicate indices of one block"""
    spec, profile, budget_N, indices = args
    kernel = get_kernel(spec.kernel, spec.m)
    law = get_law(spec.law)
    mu = profile.mean_h if spec.mu is None else spec.mu
    regime = spec.regime
    out = np.empty(len(indices))

    if regime == SimRegime.CompleteOnly:
        scale = standardizer(spec, profile)
        for j, i in enumerate(indices):
            out[j] = scale * (complete_u(_replicate_data(spec, law, kernel, i), kernel) - mu)
        return out

    design = BernoulliDesign(spec.n, spec.m, budget_N, seed=spec.seed)

    if regime == SimRegime.ConditionalOnly:
        data = Dataset.from_law(law, spec.n, seed=spec.data_seed, arity=kernel.arity)
        sums = complete_sums(data, kernel, mu)
        if not sums.mean_h2 > 0:
            raise DegenerateProfileError('Degenerate conditional law: all centered kernel values are zero')
        s_all = design.total * sums.mean
        p = design.p
        scale = 1.0 / (math.sqrt(budget_N * (1.0 - p)) * math.sqrt(sums.mean_h2))
        for j, i in enumerate(indices):
            sd = sample_design(design, icus_rng.stream(spec.seed, i, icus_rng.DESIGN))
            out[j] = scale * (selected_sum(data, kernel, sd, mu) - p * s_all)
        return out

    scale = standardizer(spec, profile, budget_N)
    det = spec.normalizer == 'deterministic'
    for j, i in enumerate(indices):
        data = _replicate_data(spec, law, kernel, i)
        sd = sample_design(design, icus_rng.stream(spec.seed, i, icus_rng.DESIGN))
        if det:
            stat = selected_sum(data, kernel, sd) / budget_N - mu
        else:
            stat = selected_sum(data, kernel, sd, mu) / sd.n_hat if sd.n_hat > 0 else 0.0
        out[j] = scale * stat
    return out


def _needs_profile(spec: ExperimentSpec):
    return not (spec.regime == SimRegime.ConditionalOnly and spec.mu is not None)


def run_experiment(spec: ExperimentSpec, profile: MomentProfile = None) -> SimulationResult:
    t0 = time.time()
    if profile is None and _needs_profile(spec):
        profile = get_profile(get_kernel(spec.kernel, spec.m), get_law(spec.law), seed=spec.seed)
    budget_N = spec.budget_N
    if profile is not None:
        # fail fast on regime / profile mismatch
        standardizer(spec, profile, budget_N)

    blocks = [(spec, profile, budget_N, indices)
              for indices in block_iterator(range(spec.reps), spec.block_size)]
    if spec.num_workers > 1:
        with Pool(spec.num_workers) as p:
            parts = p.map(_run_block, blocks)
    else:
        parts = list(map(_run_block, blocks))
    stats = np.concatenate(parts)

    result = SimulationResult(
        spec=spec,
        budget_N=budget_N,
        ks=ks_to_normal(stats),
        dkw_band=dkw_band(spec.reps),
        mean=float(stats.mean()),
        var=float(stats.var(ddof=1)) if spec.reps > 1 else 0.0,
        seconds=time.time() - t0,
        stats=stats,
    )
    logger.info(f'{spec.regime.value} "{spec.kernel}" under "{spec.law}" n={spec.n}, N={budget_N}, '
                f'R={spec.reps}: ks={result.ks:.4f} (band {result.dkw_band:.4f}) in {result.seconds:.1f} sec')
    return result
