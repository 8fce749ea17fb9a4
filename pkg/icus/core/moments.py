"""Population quantities of a kernel under a law.

All moments refer to the centered kernel h - E[h]. The exact path enumerates the whole
observation grid of a finite law, the Monte Carlo path estimates every field from i.i.d.
kernel evaluations and records standard errors.
"""
import functools
import logging
import math
import time
from dataclasses import dataclass, field
from itertools import combinations
from typing import NamedTuple, Optional, Tuple

import numpy as np

from icus import rng as icus_rng
from icus.combinatorics.binom import binom
from icus.core.kernels import Kernel
from icus.core.laws import SourceLaw
from icus.util import fsum

logger = logging.getLogger(__name__)

MAX_TUPLES = 10 ** 7
INNER_REPS = 512
RANK_TOL = 1e-12
RANK_Z = 5.0
MIN_MC_REPS = 10 ** 4
ENUM_BLOCK = 2 ** 20
INNER_GRID_MAX = 4096


class EnumerationBudgetError(ValueError):
    def __init__(self, count, budget):
        super().__init__(f'Enumeration too large: {count} tuples exceed the budget of {budget}')
        self.count = count
        self.budget = budget


class DegenerateProfileError(ValueError):
    pass


class MissingMomentError(AttributeError):
    pass


def check_budget(count, budget):
    if count > budget:
        raise EnumerationBudgetError(count, budget)


@dataclass(frozen=True)
class Provenance:
    kind: str
    reps: Optional[int] = None
    inner_reps: Optional[int] = None
    se: dict = field(default_factory=dict)

    @property
    def is_exact(self):
        return self.kind == 'exact'


@dataclass(frozen=True)
class MomentProfile:
    """Moments feeding the bound evaluators

    `pi_r_abs32[i]` is E|pi_r(h^2)|^{3/2} for r = i + 2.
    `proj_vars[i]` is Var[h_r] for r = i + 1, so `proj_vars[-1]` equals `var_h`.
    """
    degree: int
    mean_h: float
    var_h: float
    var_g: float
    abs3_g: float
    abs3_h: float
    psi1_pow32: float
    var_h2: Optional[float]
    pi_r_abs32: Optional[Tuple[float, ...]]
    rank_d: int
    proj_vars: Tuple[float, ...]
    provenance: Provenance
    kernel_name: Optional[str] = None
    law_name: Optional[str] = None

    @property
    def is_exact(self):
        return self.provenance.is_exact

    def require(self, *names):
        for name in names:
            if getattr(self, name) is None:
                raise MissingMomentError(f'Moment profile has no "{name}"')
        return self

    def require_var_h(self):
        if not self.var_h > 0:
            raise DegenerateProfileError(f'Kernel variance must be positive, got var_h={self.var_h!r}')
        return self

    def require_var_g(self):
        self.require('var_g', 'abs3_g')
        if not self.var_g > 0:
            raise DegenerateProfileError(f'Degenerate first projection: var_g={self.var_g!r}')
        return self

    def pi_r(self, r):
        self.require('pi_r_abs32')
        return self.pi_r_abs32[r - 2]

    def var_u_complete(self, n):
        """Exact Var U_n = C(n,m)^{-1} sum_c C(m,c) C(n-m,m-c) Var[h_c]"""
        m = self.degree
        total = binom(n, m)
        s = fsum([binom(m, c) * binom(n - m, m - c) / total * self.proj_vars[c - 1]
                  for c in range(1, m + 1) if m - c <= n - m])
        return s


def observation_grid(law: SourceLaw, arity=1):
    """Points (K,) or (K, 2) with their probabilities (K,)"""
    if not law.is_finite:
        raise ValueError(f'Exact enumeration requires a finite law, got {law}')
    if arity == 1:
        return law.support, law.probs
    ix, iy = np.meshgrid(np.arange(law.size), np.arange(law.size), indexing='ij')
    points = np.stack([law.support[ix.ravel()], law.support[iy.ravel()]], axis=1)
    return points, np.outer(law.probs, law.probs).ravel()


def _weights(probs, r):
    if r == 0:
        return np.float64(1.0)
    return functools.reduce(np.multiply.outer, [probs] * r)


def _expect(t, probs):
    return fsum(np.ravel(t * _weights(probs, np.ndim(t))))


def _contract(t, probs, keep):
    while t.ndim > keep:
        t = t @ probs
    return t


def kernel_tensor(k: Kernel, points, m=None):
    """Kernel values on the full grid, shape (K,) * m"""
    m = k.degree if m is None else m
    size = len(points)
    shape = (size,) * m
    out = np.empty(size ** m, dtype=np.float64)
    for start in range(0, size ** m, ENUM_BLOCK):
        flat = np.arange(start, min(start + ENUM_BLOCK, size ** m))
        idx = np.stack(np.unravel_index(flat, shape), axis=1)
        out[start:start + len(flat)] = k(points[idx])
    return out.reshape(shape)


def _embed(t, axes, r):
    missing = tuple(a for a in range(r) if a not in axes)
    return np.expand_dims(t, missing) if missing else t


def degenerate_projections(psi_tilde):
    """pi_r tensors from the centered projections Psi~_1, ..., Psi~_m of h^2"""
    pis = []
    for r, t in enumerate(psi_tilde, start=1):
        t = t.copy()
        for s in range(1, r):
            for axes in combinations(range(r), s):
                t = t - _embed(pis[s - 1], axes, r)
        pis.append(t)
    return pis


def exact_moments(k: Kernel, law: SourceLaw, max_tuples=MAX_TUPLES, rank_tol=RANK_TOL) -> MomentProfile:
    m = k.degree
    points, probs = observation_grid(law, k.arity)
    check_budget(len(points) ** m, max_tuples)
    t0 = time.time()

    h = kernel_tensor(k, points)
    mean_h = _expect(h, probs)
    ht = h - mean_h

    proj = [_contract(ht, probs, r) for r in range(1, m + 1)]
    proj_vars = tuple(_expect(t ** 2, probs) for t in proj)
    var_g, var_h = proj_vars[0], proj_vars[-1]

    h2 = ht ** 2
    psi_tilde = [_contract(h2, probs, r) - var_h for r in range(1, m + 1)]
    pis = degenerate_projections(psi_tilde)

    profile = MomentProfile(
        degree=m,
        mean_h=mean_h,
        var_h=var_h,
        var_g=var_g,
        abs3_g=_expect(np.abs(proj[0]) ** 3, probs),
        abs3_h=_expect(np.abs(ht) ** 3, probs),
        psi1_pow32=_expect(np.maximum(psi_tilde[0] + var_h, 0.0) ** 1.5, probs),
        var_h2=_expect((h2 - var_h) ** 2, probs),
        pi_r_abs32=tuple(_expect(np.abs(t) ** 1.5, probs) for t in pis[1:]),
        rank_d=next((r for r, v in enumerate(proj_vars, start=1) if v > rank_tol), m),
        proj_vars=proj_vars,
        provenance=Provenance('exact'),
        kernel_name=k.name,
        law_name=law.name,
    )
    logger.info(f'Exact profile for "{k.name}" under "{law.name}": var_h={var_h:.6g}, var_g={var_g:.6g}, '
                f'rank_d={profile.rank_d} in {time.time() - t0:.2f} sec')
    return profile


def _obs_shape(k: Kernel, *shape):
    return shape + ((2,) if k.arity == 2 else ())


def _with_fixed(head, tail):
    """Concatenate fixed leading arguments `head` (B, r[, 2]) with tails (B, T, m - r[, 2])"""
    b, t = tail.shape[:2]
    head = np.broadcast_to(head[:, None], (b, t) + head.shape[1:])
    x = np.concatenate([head, tail], axis=2)
    return x.reshape((b * t,) + x.shape[2:])


def conditional_mean(k: Kernel, law: SourceLaw, args, fn=None, reps=10 ** 5, seed=None,
                     max_tuples=MAX_TUPLES):
    """E[fn(k(args, X_{r+1}, ..., X_m))] over the last m - r observations

    Exact on finite laws, Monte Carlo with `reps` draws from the (seed, AUX) stream otherwise.
    """
    m = k.degree
    args = np.asarray(args, dtype=np.float64)
    r = args.shape[0]
    if not 1 <= r <= m:
        raise ValueError(f'Projection order must be in [1, {m}], got {r}')
    fn = (lambda v: v) if fn is None else fn
    if r == m:
        return float(fn(k(args[None]))[0])

    if law.is_finite:
        points, probs = observation_grid(law, k.arity)
        check_budget(len(points) ** (m - r), max_tuples)
        idx = np.indices((len(points),) * (m - r)).reshape(m - r, -1).T
        values = fn(k(_with_fixed(args[None], points[idx][None])))
        return fsum(values * np.prod(probs[idx], axis=1))

    rng = icus_rng.stream(seed, icus_rng.AUX)
    tail = law.sample(rng, _obs_shape(k, 1, reps, m - r))
    return float(np.mean(fn(k(_with_fixed(args[None], tail)))))


def projection_h_r(k: Kernel, law: SourceLaw, r, args, reps=10 ** 5, seed=None, max_tuples=MAX_TUPLES):
    """h_r(x_1, ..., x_r) = E[h(x_1, ..., x_r, X_{r+1}, ..., X_m)]"""
    args = np.asarray(args, dtype=np.float64)
    if not 1 <= r <= k.degree:
        raise ValueError(f'Projection order must be in [1, {k.degree}], got {r}')
    if args.shape[0] != r:
        raise ValueError(f'Expected {r} arguments, got {args.shape[0]}')
    return conditional_mean(k, law, args, reps=reps, seed=seed, max_tuples=max_tuples)


class InnerStats(NamedTuple):
    """Per outer point: E[h - c | head], E[(h - c)^2 | head] and the variances of their estimates

    The variances are zero when the tail expectation is exact.
    """
    hr: np.ndarray
    hr_var: np.ndarray
    second: np.ndarray
    second_var: np.ndarray

    @property
    def is_exact(self):
        return not (np.any(self.hr_var) or np.any(self.second_var))

    def second_at(self, t):
        """E[(h - c - t)^2 | head]"""
        return self.second - 2.0 * t * self.hr + t * t


def _inner_stats(k, law, rng, head, inner_reps, mean_h, max_grid=INNER_GRID_MAX) -> InnerStats:
    """Tail expectations by enumeration on small finite grids, by `inner_reps` draws otherwise"""
    m, r = k.degree, head.shape[1]
    if law.is_finite:
        points, probs = observation_grid(law, k.arity)
        if len(points) ** (m - r) <= max_grid:
            idx = np.indices((len(points),) * (m - r)).reshape(m - r, -1).T
            tail_grid, w = points[idx], np.prod(probs[idx], axis=1)
            block = max(1, ENUM_BLOCK // len(w))
            hr, second = [], []
            for start in range(0, head.shape[0], block):
                y = head[start:start + block]
                tail = np.broadcast_to(tail_grid[None], (y.shape[0],) + tail_grid.shape)
                values = k(_with_fixed(y, tail)).reshape(y.shape[0], len(w)) - mean_h
                hr.append(values @ w)
                second.append((values ** 2) @ w)
            hr, second = np.concatenate(hr), np.concatenate(second)
            return InnerStats(hr, np.zeros_like(hr), second, np.zeros_like(second))

    block = max(1, ENUM_BLOCK // inner_reps)
    hr, hr_var, second, second_var = [], [], [], []
    for start in range(0, head.shape[0], block):
        y = head[start:start + block]
        tail = law.sample(rng, _obs_shape(k, y.shape[0], inner_reps, m - r))
        values = k(_with_fixed(y, tail)).reshape(y.shape[0], inner_reps) - mean_h
        hr.append(values.mean(axis=1))
        hr_var.append(values.var(axis=1, ddof=1) / inner_reps)
        second.append((values ** 2).mean(axis=1))
        second_var.append((values ** 2).var(axis=1, ddof=1) / inner_reps)
    return InnerStats(*(np.concatenate(v) for v in (hr, hr_var, second, second_var)))


def _mean_se(values):
    values = np.asarray(values)
    return fsum(values) / len(values), float(values.std(ddof=1) / np.sqrt(len(values)))


def _non_negative(v):
    return None if v is None else max(v, 0.0)


def _noisy(q, noise_var, eps):
    return q if eps is None else q + np.sqrt(noise_var) * eps


def _field(terms, shifts, rng=None):
    """Mean of `terms(t, dv, eps)` and its standard error

    The error also covers the largest move of the mean over `shifts` of the centering (t)
    and of var_h (dv). With `rng`, one more layer of inner noise (eps ~ N(0, 1) per point)
    measures the bias of the plug-in; the mean is moved back by it.
    """
    base = terms(0.0, 0.0, None)
    est, se = _mean_se(base)
    spread = max(abs(fsum(terms(t, dv, None)) / len(base) - est) for t, dv in shifts)
    bias = 0.0
    if rng is not None:
        bias = fsum(terms(0.0, 0.0, rng.standard_normal(len(base)))) / len(base) - est
        est -= bias
    return est, math.sqrt(se ** 2 + spread ** 2 + bias ** 2)


def mc_moments(k: Kernel, law: SourceLaw, reps, seed, inner_reps=INNER_REPS, g_reps=None,
               rank_z=RANK_Z) -> MomentProfile:
    """Monte Carlo moment profile

    Parameters
    ----------
    reps:
        i.i.d. kernel evaluations for the moments of h, at least 10^4
    inner_reps:
        draws per inner expectation for the projections h_r and Psi_1 under continuous laws;
        finite laws with a small tail grid use exact tail expectations
    g_reps:
        outer points for projection based moments, default min(reps, 2 * 10^4)
    rank_z:
        Var[h_r] counts as positive when its estimate exceeds `rank_z` standard errors

    Every standard error in `provenance.se` includes the effect of centering at the
    estimated mean_h (and of the estimated var_h inside pi_2). Under inner sampling,
    `abs3_g`, `psi1_pow32` and `pi_r_abs32` are corrected for the inner noise and the size
    of the correction is added to their error. `pi_r_abs32` is estimated for m = 2 only.
    """
    if reps < MIN_MC_REPS:
        raise ValueError(f'Monte Carlo moments need reps >= {MIN_MC_REPS}, got {reps}')
    m = k.degree
    g_reps = min(reps, 2 * 10 ** 4) if g_reps is None else g_reps
    rng = icus_rng.stream(seed, icus_rng.AUX)
    noise_rng = icus_rng.stream(seed, icus_rng.AUX, 1)
    t0 = time.time()
    se = {}

    x = law.sample(rng, _obs_shape(k, reps, m))
    h = k(x)
    mean_h, se['mean_h'] = _mean_se(h)
    d = h - mean_h
    ddof = reps / (reps - 1)
    dt = 2.0 * se['mean_h']
    var_h, se['var_h'] = _field(lambda t, dv, eps: (d - t) ** 2 * ddof, [(-dt, 0.0), (dt, 0.0)])
    shifts = [(t, dv) for t in (-dt, dt) for dv in (-2.0 * se['var_h'], 2.0 * se['var_h'])]
    abs3_h, se['abs3_h'] = _field(lambda t, dv, eps: np.abs(d - t) ** 3, shifts)

    def h2_terms(t, dv, eps):
        h2 = (d - t) ** 2
        return (h2 - fsum(h2) / reps * ddof) ** 2

    var_h2, se['var_h2'] = _field(h2_terms, shifts)

    pairs = law.sample(rng, _obs_shape(k, g_reps, m))
    proj_vars, proj_se = [], []
    abs3_g = psi1_pow32 = None
    pi_r_abs32 = None
    inner_exact = True
    for r in range(1, m):
        inner = _inner_stats(k, law, rng, pairs[:, :r], inner_reps, mean_h)
        inner_exact = inner_exact and inner.is_exact
        v, v_se = _field(lambda t, dv, eps: (inner.hr - t) ** 2 - inner.hr_var, shifts)
        proj_vars.append(v)
        proj_se.append(v_se)
        if r > 1:
            continue
        inner_rng = None if inner.is_exact else noise_rng
        abs3_g, se['abs3_g'] = _field(
            lambda t, dv, eps: np.abs(_noisy(inner.hr - t, inner.hr_var, eps)) ** 3, shifts, inner_rng)
        psi1_pow32, se['psi1_pow32'] = _field(
            lambda t, dv, eps: np.maximum(_noisy(inner.second_at(t), inner.second_var, eps), 0.0) ** 1.5,
            shifts, inner_rng)
        if m == 2:
            other = _inner_stats(k, law, rng, pairs[:, 1:], inner_reps, mean_h)
            h_pairs = k(pairs) - mean_h

            def pi2_terms(t, dv, eps):
                pi2 = (h_pairs - t) ** 2 - inner.second_at(t) - other.second_at(t) + var_h + dv
                return np.abs(_noisy(pi2, inner.second_var + other.second_var, eps)) ** 1.5

            pi2_abs32, se['pi_2_abs32'] = _field(pi2_terms, shifts, inner_rng)
            pi_r_abs32 = (max(pi2_abs32, 0.0),)
    proj_vars.append(var_h)
    proj_se.append(se['var_h'])
    se['var_g'] = proj_se[0]

    rank_d = next((r for r, (v, s) in enumerate(zip(proj_vars, proj_se), start=1)
                   if s > 0 and v / s > rank_z), m)

    profile = MomentProfile(
        degree=m,
        mean_h=mean_h,
        var_h=var_h,
        var_g=max(proj_vars[0], 0.0),
        abs3_g=_non_negative(abs3_g),
        abs3_h=abs3_h,
        psi1_pow32=_non_negative(psi1_pow32),
        var_h2=max(var_h2, 0.0),
        pi_r_abs32=pi_r_abs32,
        rank_d=rank_d,
        proj_vars=tuple(proj_vars),
        provenance=Provenance('mc', reps=reps, inner_reps=None if inner_exact else inner_reps, se=se),
        kernel_name=k.name,
        law_name=law.name,
    )
    logger.info(f'MC profile for "{k.name}" under "{law.name}" with {reps} reps: var_h={var_h:.6g} '
                f'(se {se["var_h"]:.2g}), var_g={profile.var_g:.6g} (se {se["var_g"]:.2g}), '
                f'rank_d={rank_d} in {time.time() - t0:.2f} sec')
    return profile


def get_profile(k: Kernel, law: SourceLaw, seed=0, reps=10 ** 6, max_tuples=MAX_TUPLES, **mc_params):
    """Exact profile when the law is finite and the grid fits the budget, Monte Carlo otherwise"""
    if law.is_finite:
        try:
            return exact_moments(k, law, max_tuples=max_tuples)
        except EnumerationBudgetError as e:
            logger.warning(f'{e}. Falling back to Monte Carlo moments')
    return mc_moments(k, law, reps=reps, seed=seed, **mc_params)


def h2_projection_tensors(k: Kernel, law: SourceLaw, profile: MomentProfile, max_tuples=MAX_TUPLES):
    """Observation grid with the Psi~_r and pi_r(h^2) tensors of the kernel centered at profile.mean_h"""
    points, probs = observation_grid(law, k.arity)
    check_budget(len(points) ** k.degree, max_tuples)
    h2 = (kernel_tensor(k, points) - profile.mean_h) ** 2
    psi_tilde = [_contract(h2, probs, r) - profile.var_h for r in range(1, k.degree + 1)]
    return points, psi_tilde, degenerate_projections(psi_tilde)
