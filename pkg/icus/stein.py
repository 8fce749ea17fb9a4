"""Solution of the normal Stein equation f'(w) - w f(w) = I(w <= z) - Phi(z) and checks of its bounds."""
import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.special import erfcx, log_ndtr, ndtr

from icus import rng as icus_rng
from icus.bounds.inequalities import censor

logger = logging.getLogger(__name__)

LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
F_MAX = 0.63
BENNETT_BOUND = 8.15
BENNETT_EXACT_BOUND = math.exp((math.e ** 2 + 1.0) / 4.0)


class SteinEval(NamedTuple):
    """`f` underflows to 0 where log_f < -745; `log_f` stays finite on the whole plane"""
    z: float
    w: float
    f: float
    fprime: float
    log_f: float


def _log_scaled_cdf(w):
    """log(e^{w^2/2} Phi(w)); the scaled complementary error function covers w <= 0"""
    w = np.asarray(w, dtype=np.float64)
    neg = np.minimum(w, 0.0)
    pos = np.maximum(w, 0.0)
    return np.where(w <= 0, np.log(0.5 * erfcx(-neg / math.sqrt(2.0))), pos ** 2 / 2.0 + log_ndtr(pos))


def stein_f(z, w) -> SteinEval:
    """f_z(w) and its derivative, elementwise for arrays

    f_z(w) = sqrt(2 pi) e^{w^2/2} Phi(w) (1 - Phi(z)) for w <= z
    f_z(w) = sqrt(2 pi) e^{w^2/2} Phi(z) (1 - Phi(w)) for w > z
    The derivative at w = z is the left one.
    """
    z, w = np.broadcast_arrays(np.asarray(z, dtype=np.float64), np.asarray(w, dtype=np.float64))
    left = w <= z
    log_f = np.where(
        left,
        LOG_SQRT_2PI + _log_scaled_cdf(w) + log_ndtr(-z),
        LOG_SQRT_2PI + _log_scaled_cdf(-w) + log_ndtr(z),
    )
    f = np.exp(log_f)
    fprime = left.astype(np.float64) - ndtr(z) + w * f
    if f.ndim == 0:
        return SteinEval(float(z), float(w), float(f), float(fprime), float(log_f))
    return SteinEval(z, w, f, fprime, log_f)


@dataclass
class SuiteResult:
    """Worst slack per checked inequality; a negative slack is a violation at `violations[name]`"""
    slacks: dict = field(default_factory=dict)
    violations: dict = field(default_factory=dict)

    def update(self, name, slack, z, w):
        slack = np.asarray(slack, dtype=np.float64)
        if slack.size == 0:
            return
        ix = int(np.argmin(slack))
        worst = float(slack.ravel()[ix])
        if name not in self.slacks or worst < self.slacks[name]:
            self.slacks[name] = worst
            if worst <= 0 and name not in self.violations:
                self.violations[name] = (float(np.ravel(z)[ix]), float(np.ravel(w)[ix]))

    @property
    def passed(self):
        return not self.violations and all(v > 0 for v in self.slacks.values())


def _check_points(result: SuiteResult, z, w, fd_step=1e-5, fd_tol=1e-6, sym_tol=1e-12):
    s = stein_f(z, w)
    f, fp = s.f, np.abs(s.fprime)

    result.update('f_positive', f, z, w)
    result.update('f_max', F_MAX - f, z, w)
    result.update('fprime_max', 1.0 - fp, z, w)
    result.update('zf_max', 1.0 - np.abs(z * f), z, w)

    # regions for |z| >= 1, mirrored through f_z(w) = f_{-z}(-w)
    big = np.abs(z) >= 1
    zz = np.abs(z)
    ww = np.where(z >= 0, w, -w)
    far = big & (ww <= zz - 1)
    near = big & (ww > zz - 1) & (ww <= zz)
    above = big & (ww > zz)
    result.update('f_far', 1.7 * np.exp(-zz[far]) - f[far], z[far], w[far])
    result.update('fprime_far', np.exp(0.5 - zz[far]) - fp[far], z[far], w[far])
    result.update('f_near', 1.0 / zz[near] - f[near], z[near], w[near])
    result.update('fprime_near', 1.0 - fp[near], z[near], w[near])
    result.update('f_above', 1.0 / ww[above] - f[above], z[above], w[above])
    result.update('fprime_above', 1.0 / (1.0 + zz[above] ** 2) - fp[above], z[above], w[above])

    mirrored = stein_f(-z, -w).f
    result.update('symmetry', sym_tol * np.maximum(1.0, f) - np.abs(f - mirrored), z, w)

    smooth = np.abs(w - z) > 10 * fd_step
    zs, ws = z[smooth], w[smooth]
    fd = (stein_f(zs, ws + fd_step).f - stein_f(zs, ws - fd_step).f) / (2 * fd_step)
    result.update('fprime_fd', fd_tol - np.abs(fd - s.fprime[smooth]), zs, ws)


def lemma_a2_suite(lo=-10.0, hi=10.0, step=0.01, random_pairs=10 ** 5, seed=0) -> SuiteResult:
    """Bounds on f_z and its derivative on a (z, w) grid plus uniformly random pairs"""
    grid = np.round(np.arange(lo, hi + step / 2, step), 10)
    result = SuiteResult()
    for z in grid:
        _check_points(result, np.full_like(grid, z), grid)
    if random_pairs:
        rng = icus_rng.stream(seed, icus_rng.AUX)
        pairs = rng.uniform(lo, hi, size=(random_pairs, 2))
        _check_points(result, pairs[:, 0], pairs[:, 1])
    logger.info(f'Stein solution suite on {len(grid)}x{len(grid)} grid and {random_pairs} random pairs: '
                f'passed={result.passed}, worst slack {min(result.slacks.values()):.3g}')
    return result


class BennettEstimate(NamedTuple):
    estimate: float
    se: float
    bound: float = BENNETT_BOUND

    @property
    def margin_se(self):
        return (self.bound - self.estimate) / self.se if self.se > 0 else math.inf


def _bennett_family(name, rng, reps, n_vars):
    if name == 'rademacher':
        return (rng.integers(0, 2, size=(reps, n_vars)) * 2.0 - 1.0) / math.sqrt(n_vars)
    if name == 'exponential':
        return (rng.standard_exponential((reps, n_vars)) - 1.0) / math.sqrt(n_vars)
    if name == 'zero':
        return np.zeros((reps, n_vars))
    raise AttributeError(f'Unknown variable family "{name}", expected rademacher, exponential or zero')


def bennett_mc_check(n_vars, reps, seed, family='rademacher', block_size=10 ** 4) -> BennettEstimate:
    """Monte Carlo E[exp(sum of unit censored xi_i)] for mean zero xi_i with sum E[xi_i^2] = 1"""
    rng = icus_rng.stream(seed, icus_rng.AUX)
    values = np.empty(reps)
    for start in range(0, reps, block_size):
        size = min(block_size, reps - start)
        xi = _bennett_family(family, rng, size, n_vars)
        values[start:start + size] = np.exp(censor(xi, -1.0, 1.0).sum(axis=1))
    se = float(values.std(ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0
    estimate = BennettEstimate(float(values.mean()), se)
    logger.info(f'Bennett check "{family}" with {n_vars} variables: {estimate.estimate:.6g} (se {se:.2g})')
    return estimate
