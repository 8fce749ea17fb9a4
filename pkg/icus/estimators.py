"""Complete and Bernoulli-sampled incomplete U-statistics.

With the centered kernel h~ = h - mu, indicators Z of the selected tuples and p = N / C(n, m):

    U'  = sum Z h~ / N^          (0 when N^ = 0)
    U^  = sum Z h~ / N
    B_n = sum (Z - p) h~ / (N sqrt(1 - p))

so that U' = (N / N^) (sqrt(1 - p) B_n + U_n - mu).
"""
import logging
from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np

from icus import rng as icus_rng
from icus.bounds.inequalities import censor, lyapunov_factor
from icus.combinatorics.binom import binom
from icus.combinatorics.colex import iter_tuples, unrank_many
from icus.combinatorics.design import SampledDesign
from icus.core.dataset import Dataset
from icus.core.kernels import Kernel
from icus.core.moments import MAX_TUPLES, DegenerateProfileError, check_budget
from icus.util import CompensatedSum

logger = logging.getLogger(__name__)

AUX_TUPLES = 10 ** 6
BLOCK_SIZE = 2 ** 16


class ApproximateInputError(ValueError):
    pass


@dataclass(frozen=True)
class EstimateBundle:
    """Estimates for one (data, design) pair

    `approximate` marks `u_h2`, `u_abs_h3` (and `u_complete`, `b_n` for kernels without a closed
    form) as estimated on an auxiliary uniform subsample because C(n, m) exceeded the
    enumeration budget.
    """
    u_complete: float
    u_incomplete: float
    u_incomplete_det: float
    b_n: float
    u_h2: float
    u_abs_h3: float
    n_hat: int
    p: float
    approximate: bool = False

    def require_exact(self):
        if self.approximate:
            raise ApproximateInputError('Exact U_{h^2} and U_{|h|^3} required, got subsample estimates')
        return self

    def to_dict(self):
        return asdict(self)


class ConditionalMoments(NamedTuple):
    mean: float
    var: float
    abs3_sum: float


class CompleteSums(NamedTuple):
    """Averages over the index set of h~, h~^2 and |h~|^3"""
    mean: float
    mean_h2: float
    mean_abs_h3: float
    approximate: bool


def _check_degree(data: Dataset, k: Kernel):
    if data.n < k.degree:
        raise ValueError(f'Need n >= m, got n={data.n}, m={k.degree}')
    if data.arity != k.arity:
        raise ValueError(f'Kernel "{k.name}" expects arity {k.arity}, dataset has arity {data.arity}')


def complete_u(data: Dataset, k: Kernel, max_tuples=MAX_TUPLES, closed_form=True):
    """Average of k over all C(n, m) increasing index tuples"""
    _check_degree(data, k)
    if closed_form and k.complete_func is not None:
        return k.complete(data.values)
    total = binom(data.n, k.degree)
    check_budget(total, max_tuples)
    s = CompensatedSum()
    for idx in iter_tuples(data.n, k.degree, BLOCK_SIZE):
        s.update(k(data.tuples(idx)))
    return s.compute() / total


def complete_sums(data: Dataset, k: Kernel, mu=0.0, max_tuples=MAX_TUPLES, aux_tuples=AUX_TUPLES,
                  seed=None) -> CompleteSums:
    """Complete averages of h~, h~^2, |h~|^3 by enumeration, or on `aux_tuples` uniform tuples

    The subsample is drawn from the (seed, AUX) stream when C(n, m) exceeds `max_tuples`.
    """
    _check_degree(data, k)
    n, m = data.n, k.degree
    total = binom(n, m)
    sums = [CompensatedSum() for _ in range(3)]

    def update(idx):
        values = k(data.tuples(idx)) - mu
        sums[0].update(values)
        sums[1].update(values ** 2)
        sums[2].update(np.abs(values) ** 3)

    if total <= max_tuples:
        for idx in iter_tuples(n, m, BLOCK_SIZE):
            update(idx)
        approximate = False
    else:
        logger.warning(f'C({n},{m})={total} exceeds the enumeration budget {max_tuples}, '
                       f'complete averages estimated on {aux_tuples} uniform tuples')
        rng = icus_rng.stream(seed, icus_rng.AUX)
        for start in range(0, aux_tuples, BLOCK_SIZE):
            size = min(BLOCK_SIZE, aux_tuples - start)
            update(_uniform_tuples(rng, n, m, size))
        approximate = True
    count = sums[0].count
    return CompleteSums(*(s.compute() / count for s in sums), approximate=approximate)


def _uniform_tuples(rng, n, m, size):
    """Uniform index tuples with replacement across rows: m distinct sorted indices per row"""
    out = np.sort(rng.integers(0, n, size=(size, m)), axis=1)
    bad = np.any(out[:, 1:] == out[:, :-1], axis=1)
    while bad.any():
        out[bad] = np.sort(rng.integers(0, n, size=(int(bad.sum()), m)), axis=1)
        bad = np.any(out[:, 1:] == out[:, :-1], axis=1)
    return out


def selected_sum(data: Dataset, k: Kernel, sd: SampledDesign, mu=0.0):
    """sum over the selected tuples of k - mu"""
    s = CompensatedSum()
    for idx in sd.iter_tuples(BLOCK_SIZE):
        s.update(k(data.tuples(idx)) - mu)
    return s.compute()


def _check_design(data: Dataset, k: Kernel, sd: SampledDesign):
    d = sd.design
    if d.n != data.n or d.m != k.degree:
        raise ValueError(f'Design (n={d.n}, m={d.m}) does not match data n={data.n} and kernel m={k.degree}')


def incomplete_u(data: Dataset, k: Kernel, sd: SampledDesign, mu=0.0, max_tuples=MAX_TUPLES,
                 aux_tuples=AUX_TUPLES, seed=None) -> EstimateBundle:
    _check_design(data, k, sd)
    d = sd.design
    s_sel = selected_sum(data, k, sd, mu)
    seed = d.seed if seed is None else seed
    sums = complete_sums(data, k, mu, max_tuples=max_tuples, aux_tuples=aux_tuples, seed=seed)

    if k.complete_func is not None and k.arity == 1:
        u_complete = k.complete(data.values)
    else:
        u_complete = sums.mean + mu
    u_centered = u_complete - mu
    s_all = d.total * u_centered
    p = d.p
    b_n = (s_sel - p * s_all) / (d.budget_N * np.sqrt(1.0 - p))

    bundle = EstimateBundle(
        u_complete=u_complete,
        u_incomplete=s_sel / sd.n_hat if sd.n_hat > 0 else 0.0,
        u_incomplete_det=s_sel / d.budget_N,
        b_n=float(b_n),
        u_h2=sums.mean_h2,
        u_abs_h3=sums.mean_abs_h3,
        n_hat=sd.n_hat,
        p=p,
        approximate=sums.approximate,
    )
    if sums.approximate:
        logger.warning(f'U_n and B_n for n={d.n}, m={d.m} rest on {aux_tuples} auxiliary tuples: '
                       f'U\' = (N / N^) (sqrt(1 - p) B_n + U_n - mu) holds only approximately')
    logger.debug(f'Estimated {bundle}')
    return bundle


def conditional_bn_moments(data: Dataset, k: Kernel, design, mu=0.0, max_tuples=MAX_TUPLES) -> ConditionalMoments:
    """Conditional on the data, the law of sqrt(N) B_n / sqrt(U_{h^2}) over the Bernoulli selection

    Mean 0 and variance 1 hold by construction. The Lyapunov sum of the summands
    (Z - p) h~ / sqrt(C(n,m) p (1 - p) U_{h^2}) is
    U_{|h|^3} (1 - 2p + 2p^2) / (U_{h^2}^{3/2} sqrt(N (1 - p))).
    """
    sums = complete_sums(data, k, mu, max_tuples=max_tuples)
    if not sums.mean_h2 > 0:
        raise DegenerateProfileError('Degenerate conditional law: all centered kernel values are zero')
    p = design.p
    abs3_sum = sums.mean_abs_h3 * lyapunov_factor(p) / (sums.mean_h2 ** 1.5 * np.sqrt(design.budget_N))
    return ConditionalMoments(mean=0.0, var=1.0, abs3_sum=float(abs3_sum))


def conditional_bn_draws(data: Dataset, k: Kernel, design, reps, rng, mu=0.0, max_tuples=MAX_TUPLES):
    """Draws of sqrt(N) B_n / sqrt(U_{h^2}) and of the per-draw sum |zeta|^3 over fresh selections"""
    n, m = data.n, k.degree
    total = binom(n, m)
    check_budget(total, max_tuples)
    values = k(data.tuples(unrank_many(np.arange(total), n, m))) - mu
    u_h2 = float(np.mean(values ** 2))
    if not u_h2 > 0:
        raise DegenerateProfileError('Degenerate conditional law: all centered kernel values are zero')
    p = design.p
    scale = np.sqrt(total * p * (1.0 - p) * u_h2)
    stats = np.empty(reps)
    abs3 = np.empty(reps)
    block = max(1, 2 ** 22 // total)
    for start in range(0, reps, block):
        size = min(block, reps - start)
        z = (rng.random((size, total)) < p).astype(np.float64) - p
        zeta = z * values / scale
        stats[start:start + size] = zeta.sum(axis=1)
        abs3[start:start + size] = (np.abs(zeta) ** 3).sum(axis=1)
    return stats, abs3


def censored_u_h2(u_h2, var_h):
    """U_{h^2} censored from below at var_h / 2"""
    return censor(u_h2, var_h / 2.0, np.inf)
