"""Verification runners for the explicit inequalities, identities and rates.

Every runner returns a `CheckResult`. Default sizes are the full-size runs; `run_check`
scales replicate counts by `size` for quicker smoke runs.
"""
import logging
import math
from math import comb
import time
from typing import NamedTuple

import numpy as np
from scipy.stats import chisquare

from icus import rng as icus_rng
from icus.bounds.inequalities import (LYAPUNOV_FLOOR_QUOTED, LYAPUNOV_MIN_VALUE, bernstein_tail, censor,
                                      censored_n_hat, h2_lower_tail, lyapunov_factor, normal_difference,
                                      normal_difference_bound)
from icus.bounds.theorems import explicit_complete_bound, explicit_conditional_bound
from icus.combinatorics.binom import binom
from icus.combinatorics.colex import rank_many, unrank_many
from icus.combinatorics.design import BernoulliDesign, sample_binomial, sample_design
from icus.core.dataset import Dataset
from icus.core.kernels import get_kernel
from icus.core.laws import get_law
from icus.core.moments import exact_moments
from icus.estimators import conditional_bn_draws, conditional_bn_moments, incomplete_u
from icus.hoeffding import decompose_uh2
from icus.montecarlo.experiment import ExperimentSpec, run_experiment
from icus.montecarlo.rate import rate_fit_results
from icus.stein import BENNETT_BOUND, bennett_mc_check, lemma_a2_suite
from icus.util import fsum

logger = logging.getLogger(__name__)


class CheckResult(NamedTuple):
    name: str
    passed: bool
    details: dict

    def to_row(self):
        return dict(name=self.name, passed=self.passed,
                    details=';'.join(f'{k}={v}' for k, v in self.details.items()))


def _done(name, passed, details, t0):
    details['seconds'] = round(time.time() - t0, 2)
    logger.info(f'Check "{name}": {"passed" if passed else "FAILED"} {details}')
    return CheckResult(name, bool(passed), details)


def check_conditional_bound(reps=2 * 10 ** 5, n=30, budget_N=100, data_seed=1, seed=0, num_workers=0):
    """KS of sqrt(N) B_n / sqrt(U_{h^2}) over selections for one dataset against the 0.56 bound"""
    t0 = time.time()
    spec = ExperimentSpec(law='stdnormal', kernel='product', regime='conditional', n=n, budget=budget_N,
                          reps=reps, seed=seed, data_seed=data_seed, mu=0.0, num_workers=num_workers,
                          block_size=4096)
    result = run_experiment(spec)
    kernel, law = get_kernel('product'), get_law('stdnormal')
    data = Dataset.from_law(law, n, seed=data_seed)
    bundle = incomplete_u(data, kernel, sample_design(spec.design, seed), mu=0.0)
    bound = explicit_conditional_bound(bundle, budget_N, spec.design.p)
    return _done('conditional_bound', result.ks <= bound + result.dkw_band,
                 dict(ks=result.ks, band=result.dkw_band, bound=bound), t0)


def check_complete_bound(reps=10 ** 5, n=400, seed=0, num_workers=0):
    """KS of sqrt(n) U_n / (m sigma_g) against the explicit complete bound, uniform3 sample variance"""
    t0 = time.time()
    kernel, law = get_kernel('sample_variance'), get_law('uniform3')
    profile = exact_moments(kernel, law)
    spec = ExperimentSpec(law='uniform3', kernel='sample_variance', regime='complete', n=n, reps=reps,
                          seed=seed, complete_scale='projection', num_workers=num_workers, block_size=4096)
    result = run_experiment(spec, profile)
    bound = explicit_complete_bound(profile, n, 2).total
    return _done('complete_bound', result.ks <= bound and result.ks <= 0.1,
                 dict(ks=result.ks, bound=bound), t0)


class DirectDecomposition(NamedTuple):
    u_incomplete: float
    b_n: float
    u_complete: float
    scale_u: float
    scale_b: float
    scale_n: float


def _direct_decomposition(data, kernel, sd, mu) -> DirectDecomposition:
    """U' - mu, B_n and U_n from their definitions over the full colex enumeration

    The scales are the sums of absolute summands, the size rounding is relative to.
    """
    d = sd.design
    h = kernel(data.tuples(unrank_many(np.arange(d.total, dtype=np.int64), d.n, d.m))) - mu
    z = np.zeros(d.total)
    z[np.asarray(sd.ranks, dtype=np.int64)] = 1.0
    selected = h[z > 0]
    denom = d.budget_N * math.sqrt(1.0 - d.p)
    n_hat = max(sd.n_hat, 1)
    return DirectDecomposition(
        u_incomplete=fsum(selected) / n_hat if sd.n_hat > 0 else 0.0,
        b_n=fsum((z - d.p) * h) / denom,
        u_complete=fsum(h) / d.total + mu,
        scale_u=fsum(np.abs(selected)) / n_hat,
        scale_b=fsum(np.abs((z - d.p) * h)) / denom,
        scale_n=fsum(np.abs(h)) / d.total + abs(mu),
    )


def check_decomposition(pairs=10 ** 3, max_n=40, seed=0, rel_tol=1e-12):
    """U' = (N / N^) (sqrt(1 - p) B_n + U_n - mu) on seeded (data, design) pairs

    U', B_n and U_n are recomputed from the selection indicators over all tuples, and the
    bundle from `incomplete_u` must agree with them.
    """
    t0 = time.time()
    rng = icus_rng.stream(seed, icus_rng.AUX)
    worst, worst_bundle, empty = 0.0, 0.0, 0
    cases = [('uniform3', 'sample_variance'), ('stdnormal', 'product'), ('exp1', 'mean_pow3'),
             ('rademacher', 'product')]
    for i in range(pairs):
        law_name, kernel_name = cases[i % len(cases)]
        kernel, law = get_kernel(kernel_name), get_law(law_name)
        n = int(rng.integers(5, max_n + 1))
        budget_N = int(rng.integers(1, binom(n, 2)))
        data = Dataset.from_law(law, n, rng=icus_rng.stream(seed, i, icus_rng.DATA))
        mu = float(rng.normal())
        sd = sample_design(BernoulliDesign(n, 2, budget_N), icus_rng.stream(seed, i, icus_rng.DESIGN))
        b = incomplete_u(data, kernel, sd, mu=mu)
        direct = _direct_decomposition(data, kernel, sd, mu)
        worst_bundle = max(worst_bundle,
                           abs(b.u_incomplete - direct.u_incomplete) / max(direct.scale_u, 1e-300),
                           abs(b.b_n - direct.b_n) / max(direct.scale_b, 1e-300),
                           abs(b.u_complete - direct.u_complete) / max(direct.scale_n, 1e-300))
        if sd.n_hat == 0:
            empty += 1
            if b.u_incomplete != 0.0 or direct.u_incomplete != 0.0:
                worst = math.inf
            continue
        ratio = budget_N / sd.n_hat
        sqrt_q = math.sqrt(1.0 - sd.design.p)
        rhs = ratio * (sqrt_q * direct.b_n + (direct.u_complete - mu))
        # relative to |U' - mu| unless the two terms cancel below their own size
        scale = max(abs(direct.u_incomplete), ratio * (sqrt_q * abs(direct.b_n) + abs(direct.u_complete - mu)))
        worst = max(worst, abs(direct.u_incomplete - rhs) / scale)
    return _done('decomposition', worst <= rel_tol and worst_bundle <= rel_tol,
                 dict(pairs=pairs, empty=empty, worst_rel_error=worst, worst_bundle_error=worst_bundle), t0)


def check_hoeffding(instances=200, seed=0, tol=1e-10):
    """(U_{h^2} - var_h) / var_h = sum eta - m + R on seeded finite-law datasets"""
    t0 = time.time()
    rng = icus_rng.stream(seed, icus_rng.AUX)
    cases = [(law, kernel) for law in ('rademacher', 'uniform3') for kernel in ('product', 'sample_variance')]
    profiles = {}
    worst = 0.0
    for i in range(instances):
        law_name, kernel_name = cases[i % len(cases)]
        kernel, law = get_kernel(kernel_name), get_law(law_name)
        key = (law_name, kernel_name)
        if key not in profiles:
            profiles[key] = exact_moments(kernel, law)
        n = int(rng.integers(6, 13))
        data = Dataset.from_law(law, n, rng=icus_rng.stream(seed, i, icus_rng.DATA))
        worst = max(worst, abs(decompose_uh2(data, kernel, profiles[key]).residual))
    return _done('hoeffding', worst <= tol, dict(instances=instances, worst_abs_error=worst), t0)


def check_conditional_moments(instances=20, draws=10 ** 6, n=6, budget_N=5, seed=0, z=4.0):
    """Analytic conditional mean, variance and Lyapunov sum of sqrt(N) B_n / sqrt(U_{h^2}) against draws"""
    t0 = time.time()
    kernel, law = get_kernel('product'), get_law('stdnormal')
    design = BernoulliDesign(n, 2, budget_N)
    worst = 0.0
    for i in range(instances):
        data = Dataset.from_law(law, n, rng=icus_rng.stream(seed, i, icus_rng.DATA))
        analytic = conditional_bn_moments(data, kernel, design)
        stats, abs3 = conditional_bn_draws(data, kernel, design, draws, icus_rng.stream(seed, i, icus_rng.DESIGN))
        mean_se = stats.std(ddof=1) / math.sqrt(draws)
        var_se = np.std((stats - stats.mean()) ** 2, ddof=1) / math.sqrt(draws)
        abs3_se = abs3.std(ddof=1) / math.sqrt(draws)
        worst = max(worst,
                    abs(stats.mean() - analytic.mean) / mean_se,
                    abs(stats.var(ddof=1) - analytic.var) / var_se,
                    abs(abs3.mean() - analytic.abs3_sum) / abs3_se)
    return _done('conditional_moments', worst <= z, dict(instances=instances, worst_z=float(worst)), t0)


def check_regime_contrast(reps=2 * 10 ** 4, n=300, seed=0, num_workers=0, ks_normal=0.08, ks_complete=0.15):
    """Degenerate product kernel: sqrt(N) U' / sigma_h is close to normal, the complete statistic is not"""
    t0 = time.time()
    common = dict(law='rademacher', kernel='product', n=n, reps=reps, seed=seed, num_workers=num_workers)
    sampled = run_experiment(ExperimentSpec(regime='regime2', budget=n, **common))
    complete = run_experiment(ExperimentSpec(regime='complete', **common))
    return _done('regime_contrast', sampled.ks <= ks_normal and complete.ks >= ks_complete,
                 dict(ks_sampled=sampled.ks, ks_complete=complete.ks), t0)


def check_rate(ns=(50, 100, 200, 400), reps=2 * 10 ** 4, seed=0, num_workers=0, slope_range=(-0.75, -0.30)):
    """Slope of log ks against log n for Regime1, uniform3 sample variance, N = n^2"""
    t0 = time.time()
    profile = exact_moments(get_kernel('sample_variance'), get_law('uniform3'))
    results = [run_experiment(ExperimentSpec(law='uniform3', kernel='sample_variance', regime='regime1', n=n,
                                             budget='n^2', reps=reps, seed=seed, num_workers=num_workers),
                              profile)
               for n in ns]
    fit = rate_fit_results(results)
    return _done('rate', slope_range[0] <= fit.slope <= slope_range[1],
                 dict(slope=fit.slope, r2=fit.r2, ks=[r.ks for r in results]), t0)


def _complete_h2_batch(values, kernel, mu):
    """U_{h^2} for a batch of datasets (B, n)"""
    n, m = values.shape[1], kernel.degree
    idx = unrank_many(np.arange(binom(n, m)), n, m)
    x = values[:, idx]
    h = kernel(x.reshape(-1, m)).reshape(values.shape[0], -1) - mu
    return (h ** 2).mean(axis=1)


def check_tails(reps=10 ** 6, budgets=(10, 28, 50), n=10, seed=0, block_size=10 ** 5):
    """Bernstein bound on N^, censored N^ facts and the lower tail of U_{h^2}"""
    t0 = time.time()
    rng = icus_rng.stream(seed, icus_rng.AUX)
    details = {}
    passed = True
    for budget_N in budgets:
        design = BernoulliDesign(1000, 2, budget_N)
        n_hat = sample_binomial(rng, design.total, design.p, size=reps)
        freq = float(np.mean(np.abs(n_hat / budget_N - 1.0) > 0.5))
        abs_dev = float(np.mean(np.abs(n_hat - budget_N)))
        censored_ok = bool(np.all(np.abs(censored_n_hat(n_hat, budget_N) - budget_N) <= np.abs(n_hat - budget_N)))
        # E|N^ - N| <= sqrt(N (1 - p)) up to Monte Carlo error
        abs_dev_se = float(np.std(np.abs(n_hat - budget_N)) / math.sqrt(reps))
        ok = freq <= bernstein_tail(budget_N) and censored_ok and \
            abs_dev <= math.sqrt(budget_N * (1.0 - design.p)) + 3 * abs_dev_se
        details[f'N{budget_N}'] = f'{freq:.5g}<={bernstein_tail(budget_N):.5g}'
        passed = passed and ok

    kernel, law = get_kernel('sample_variance'), get_law('uniform3')
    profile = exact_moments(kernel, law)
    hits = 0
    for start in range(0, reps, block_size):
        size = min(block_size, reps - start)
        values = law.sample(icus_rng.stream(seed, start, icus_rng.DATA), (size, n))
        hits += int(np.sum(_complete_h2_batch(values, kernel, profile.mean_h) <= profile.var_h / 2.0))
    freq = hits / reps
    _, bound = h2_lower_tail(profile.var_h, profile.abs3_h, n, 2)
    details['lower_tail'] = f'{freq:.5g}<={bound:.5g}'
    passed = passed and freq <= bound
    return _done('tails', passed, details, t0)


def check_appendix(step=0.01, random_pairs=10 ** 5, bennett_reps=10 ** 5, fuzz=10 ** 6, seed=0):
    """Stein solution bounds, Bennett-type bound, censoring and auxiliary facts"""
    t0 = time.time()
    suite = lemma_a2_suite(step=step, random_pairs=random_pairs, seed=seed)
    bennett = bennett_mc_check(100, bennett_reps, seed)
    single = bennett_mc_check(1, bennett_reps, seed)

    rng = icus_rng.stream(seed, icus_rng.AUX, 1)
    y, z = rng.normal(scale=3.0, size=(2, fuzz))
    ab = np.sort(rng.normal(scale=2.0, size=(2, fuzz)), axis=0)
    contraction = bool(np.all(np.abs(censor(y, ab[0], ab[1]) - censor(z, ab[0], ab[1])) <= np.abs(y - z)))
    # a <= 0 <= b keeps |censor(y)| <= |y|
    lo, hi = -np.abs(ab[0]), np.abs(ab[1])
    upper_ok = bool(np.all(np.abs(censor(y, lo, hi)) <= np.abs(y)))

    grid = np.arange(0.0, 1.0, 1e-3)
    factors = np.array([lyapunov_factor(p) for p in grid])
    factor_ok = bool(factors.min() >= LYAPUNOV_MIN_VALUE - 1e-12)

    a, w = np.meshgrid(np.linspace(1.0, 5.0, 201), np.linspace(-8.0, 8.0, 801))
    normal_ok = bool(np.all(normal_difference(a, w) <= normal_difference_bound(a) + 1e-15))

    details = dict(stein_passed=suite.passed, stein_worst=min(suite.slacks.values()),
                   bennett=bennett.estimate, bennett_margin_se=bennett.margin_se, bennett_single=single.estimate,
                   contraction=contraction, upper_censoring=upper_ok, factor_min=float(factors.min()),
                   factor_quoted=LYAPUNOV_FLOOR_QUOTED, normal_difference=normal_ok)
    passed = suite.passed and bennett.margin_se >= 5 and single.estimate <= BENNETT_BOUND and contraction \
        and upper_ok and factor_ok and normal_ok
    return _done('appendix', passed, details, t0)


def _bijection_ok(n, m):
    total = binom(n, m)
    tuples = unrank_many(np.arange(total, dtype=np.int64), n, m)
    if not np.array_equal(rank_many(tuples, n, m), np.arange(total)):
        return False
    if m > 1 and not np.all(np.diff(tuples, axis=1) > 0):
        return False
    # colex order: consecutive subsets compare by their largest differing element
    rev = tuples[:, ::-1]
    diff = rev[1:] != rev[:-1]
    first = np.argmax(diff, axis=1)
    rows = np.arange(len(first))
    return bool(np.all(rev[1:][rows, first] > rev[:-1][rows, first]))


def check_combinatorics(max_total=10 ** 4, reps=10 ** 6, seed=0, level=1e-3):
    """Exhaustive rank / unrank bijection and inclusion law of the sampled design"""
    t0 = time.time()
    pairs = [(n, m) for n in range(1, 201) for m in range(1, n + 1) if comb(n, m) <= max_total]
    bijection = all(_bijection_ok(n, m) for n, m in pairs)

    design = BernoulliDesign(4, 2, 3)
    rng = icus_rng.stream(seed, icus_rng.DESIGN)
    patterns = np.zeros(2 ** design.total, dtype=np.int64)
    inclusion = np.zeros((design.total, design.total))
    for _ in range(reps):
        sd = sample_design(design, rng)
        mask = np.zeros(design.total)
        mask[sd.ranks] = 1.0
        patterns[int(np.dot(mask, 2 ** np.arange(design.total)))] += 1
        inclusion += np.outer(mask, mask)
    inclusion /= reps
    p_value = float(chisquare(patterns).pvalue)
    single_dev = float(np.max(np.abs(np.diag(inclusion) - 0.5)))
    pair_dev = float(np.max(np.abs(inclusion[~np.eye(design.total, dtype=bool)] - 0.25)))

    big = BernoulliDesign(30, 2, 100)
    n_hats = np.array([sample_binomial(rng, big.total, big.p) for _ in range(max(reps // 10, 1))])
    mean_tol = 3 * math.sqrt(big.budget_N * (1 - big.p) / len(n_hats))
    mean_ok = abs(n_hats.mean() - big.budget_N) <= mean_tol

    passed = bijection and p_value >= level and mean_ok
    return _done('combinatorics', passed,
                 dict(pairs=len(pairs), bijection=bijection, chi2_pvalue=p_value, single_dev=single_dev,
                      pair_dev=pair_dev, n_hat_mean=float(n_hats.mean())), t0)


CHECKS = {
    'conditional_bound': (check_conditional_bound, 'reps'),
    'complete_bound': (check_complete_bound, 'reps'),
    'decomposition': (check_decomposition, 'pairs'),
    'hoeffding': (check_hoeffding, 'instances'),
    'conditional_moments': (check_conditional_moments, 'draws'),
    'regime_contrast': (check_regime_contrast, 'reps'),
    'rate': (check_rate, 'reps'),
    'tails': (check_tails, 'reps'),
    'appendix': (check_appendix, 'bennett_reps'),
    'combinatorics': (check_combinatorics, 'reps'),
}
PARALLEL_CHECKS = ('conditional_bound', 'complete_bound', 'regime_contrast', 'rate')
DEFAULT_SIZES = {
    'conditional_bound': 2 * 10 ** 5, 'complete_bound': 10 ** 5, 'decomposition': 10 ** 3, 'hoeffding': 200,
    'conditional_moments': 10 ** 6, 'regime_contrast': 2 * 10 ** 4, 'rate': 2 * 10 ** 4, 'tails': 10 ** 6,
    'appendix': 10 ** 5, 'combinatorics': 10 ** 6,
}


def run_check(name, size=1.0, seed=0, num_workers=0):
    """Run one check with its replicate count scaled by `size`"""
    if name not in CHECKS:
        raise AttributeError(f'Can not find check "{name}", available: {sorted(CHECKS)}')
    check_f, size_arg = CHECKS[name]
    params = {size_arg: max(int(DEFAULT_SIZES[name] * size), 2), 'seed': seed}
    if name in PARALLEL_CHECKS:
        params['num_workers'] = num_workers
    return check_f(**params)


def run_checks(names=None, size=1.0, seed=0, num_workers=0):
    names = sorted(CHECKS) if names is None else names
    return [run_check(name, size, seed, num_workers) for name in names]
