"""Hoeffding decomposition of the non-negative U-statistic U_{h^2}.

With h~ = h - E[h], Psi~_r(x_1..x_r) = E[h~^2(x_1..x_r, X..)] - var_h and the completely
degenerate kernels pi_r(h^2) built from them,

    (U_{h^2} - var_h) / var_h = sum_i eta_i - m + R,

where eta_i = m Psi_1(X_i) / (n var_h) and R collects the projections of order r >= 2.
"""
import logging
from itertools import combinations
from typing import NamedTuple

import numpy as np

from icus import rng as icus_rng
from icus.combinatorics.binom import binom
from icus.combinatorics.colex import iter_tuples
from icus.core.dataset import Dataset
from icus.core.kernels import Kernel
from icus.core.laws import SourceLaw
from icus.core.moments import (MAX_TUPLES, MomentProfile, check_budget, conditional_mean, exact_moments,
                               get_profile, h2_projection_tensors)
from icus.estimators import ApproximateInputError, complete_sums
from icus.util import CompensatedSum

logger = logging.getLogger(__name__)

MAX_DIRECT_DEGREE = 3


class H2Decomposition(NamedTuple):
    eta: np.ndarray
    remainder_R: float
    lhs: float
    degree: int

    @property
    def residual(self):
        """lhs - (sum eta - m + R), zero up to rounding"""
        return self.lhs - (float(np.sum(self.eta)) - self.degree + self.remainder_R)


def _resolve_profile(k, law, profile, seed):
    if profile is not None:
        return profile
    if law.is_finite:
        return exact_moments(k, law)
    return get_profile(k, law, seed=0 if seed is None else seed)


def _check_order(k, r, args):
    if not 1 <= r <= k.degree:
        raise ValueError(f'Projection order must be in [1, {k.degree}], got {r}')
    if len(args) != r:
        raise ValueError(f'Expected {r} arguments, got {len(args)}')


def psi_tilde_r(k: Kernel, law: SourceLaw, r, args, profile: MomentProfile = None, reps=10 ** 5, seed=None,
                max_tuples=MAX_TUPLES):
    """E[h~^2(x_1, ..., x_r, X_{r+1}, ..., X_m)] - var_h"""
    args = np.asarray(args, dtype=np.float64)
    _check_order(k, r, args)
    profile = _resolve_profile(k, law, profile, seed)
    mu = profile.mean_h
    second = conditional_mean(k, law, args, fn=lambda v: (v - mu) ** 2, reps=reps, seed=seed,
                              max_tuples=max_tuples)
    return second - profile.var_h


def _key(args):
    return tuple(tuple(a) if np.ndim(a) else float(a) for a in args)


def pi_r_h2(k: Kernel, law: SourceLaw, r, args, profile: MomentProfile = None, reps=10 ** 5, seed=None,
            max_tuples=MAX_TUPLES):
    """Completely degenerate projection pi_r(h^2)

    pi_1 = Psi~_1 and pi_r = Psi~_r - sum over proper non-empty subsets S of pi_{|S|}(x_S),
    evaluated by recursion memoised per call.
    """
    args = np.asarray(args, dtype=np.float64)
    _check_order(k, r, args)
    profile = _resolve_profile(k, law, profile, seed)
    memo = {}

    def pi(sub):
        key = _key(sub)
        if key not in memo:
            value = psi_tilde_r(k, law, len(sub), sub, profile, reps=reps, seed=seed, max_tuples=max_tuples)
            for s in range(1, len(sub)):
                for subset in combinations(range(len(sub)), s):
                    value -= pi(sub[list(subset)])
            memo[key] = value
        return memo[key]

    return pi(args)


def _observation_index(data: Dataset, points):
    """Positions of the observations on the law's grid"""
    if data.arity == 1:
        ix = np.searchsorted(points, data.values)
        ok = (ix < len(points)) & (points[np.minimum(ix, len(points) - 1)] == data.values)
    else:
        support = np.unique(points[:, 0])
        i = np.searchsorted(support, data.values[:, 0])
        j = np.searchsorted(support, data.values[:, 1])
        top = len(support) - 1
        ok = (i <= top) & (j <= top) & (support[np.minimum(i, top)] == data.values[:, 0]) & \
            (support[np.minimum(j, top)] == data.values[:, 1])
        ix = i * len(support) + j
    if not np.all(ok):
        raise ValueError('Observations outside the support of the law')
    return ix


def decompose_uh2(data: Dataset, k: Kernel, profile: MomentProfile, law: SourceLaw = None,
                  max_tuples=MAX_TUPLES) -> H2Decomposition:
    """Leading terms eta_i, remainder R and (U_{h^2} - var_h) / var_h on observed data

    R is summed directly over the order-r projections, for m <= 3 only.
    """
    if not profile.is_exact:
        raise ApproximateInputError('Hoeffding decomposition requires an exact moment profile')
    profile.require_var_h()
    m, n = k.degree, data.n
    if m > MAX_DIRECT_DEGREE:
        raise ValueError(f'Remainder is computed directly for m <= {MAX_DIRECT_DEGREE}, got m={m}. '
                         f'Use r_norm32_bound instead')
    law = data.law if law is None else law
    if law is None or not law.is_finite:
        raise ValueError('Hoeffding decomposition requires data drawn from a finite law')

    points, psi_tilde, pis = h2_projection_tensors(k, law, profile, max_tuples=max_tuples)
    ix = _observation_index(data, points)
    var_h = profile.var_h

    eta = m * (psi_tilde[0][ix] + var_h) / (n * var_h)
    remainder = 0.0
    for r in range(2, m + 1):
        check_budget(binom(n, r), max_tuples)
        s = CompensatedSum()
        for idx in iter_tuples(n, r):
            s.update(pis[r - 1][tuple(ix[idx].T)])
        remainder += binom(m, r) / binom(n, r) * s.compute() / var_h

    u_h2 = complete_sums(data, k, mu=profile.mean_h, max_tuples=max_tuples).mean_h2
    return H2Decomposition(eta=eta, remainder_R=remainder, lhs=(u_h2 - var_h) / var_h, degree=m)


def r_norm32_bound(profile: MomentProfile, n):
    """Moment bound on E|R|^{3/2}

    sum_{r=2}^m C(m,r)^{3/2} C(n,r)^{-1/2} 2^{r/2} E|pi_r(h^2)|^{3/2} / var_h^{3/2},
    of order 1/n, so ||R||_{3/2} <= value^{2/3} is of order n^{-2/3}.
    """
    profile.require('pi_r_abs32')
    profile.require_var_h()
    m = profile.degree
    if n < m:
        raise ValueError(f'Need n >= m, got n={n}, m={m}')
    return sum(binom(m, r) ** 1.5 / binom(n, r) ** 0.5 * 2.0 ** (r / 2.0) * profile.pi_r(r)
               for r in range(2, m + 1)) / profile.var_h ** 1.5


def r_norm_bound(profile: MomentProfile, n):
    """Bound on ||R||_{3/2}"""
    return r_norm32_bound(profile, n) ** (2.0 / 3.0)


class RemainderEstimate(NamedTuple):
    abs32_mean: float
    abs32_se: float
    reps: int

    @property
    def norm(self):
        return self.abs32_mean ** (2.0 / 3.0)


def mc_r_norm32(k: Kernel, law: SourceLaw, n, reps, seed, profile: MomentProfile = None,
                max_tuples=MAX_TUPLES) -> RemainderEstimate:
    """E|R|^{3/2} over fresh datasets, replicate i drawn from the (seed, i, DATA) stream"""
    profile = exact_moments(k, law, max_tuples=max_tuples) if profile is None else profile
    values = np.empty(reps)
    for i in range(reps):
        data = Dataset.from_law(law, n, arity=k.arity, rng=icus_rng.stream(seed, i, icus_rng.DATA))
        values[i] = abs(decompose_uh2(data, k, profile, law, max_tuples=max_tuples).remainder_R) ** 1.5
    estimate = RemainderEstimate(float(values.mean()), float(values.std(ddof=1) / np.sqrt(reps)), reps)
    logger.info(f'E|R|^(3/2) over {reps} datasets of size {n}: {estimate.abs32_mean:.6g} '
                f'(se {estimate.abs32_se:.2g})')
    return estimate
