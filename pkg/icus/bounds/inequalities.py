"""Auxiliary inequalities with explicit constants."""
import math

import numpy as np
from scipy.special import ndtr

# cited floor of (1 - 2p + 2p^2) / sqrt(1 - p); lies above the true minimum LYAPUNOV_MIN_VALUE
LYAPUNOV_FLOOR_QUOTED = 25.0 / (14.0 * math.sqrt(7.0))
LYAPUNOV_ARGMIN = (5.0 - math.sqrt(7.0)) / 6.0
LYAPUNOV_MIN_VALUE = 4.0 * LYAPUNOV_ARGMIN / (3.0 * math.sqrt(1.0 - LYAPUNOV_ARGMIN))
NORMAL_DIFF_CONST = math.exp(-0.5) / math.sqrt(2.0 * math.pi)
LOWER_TAIL_CONST = 1.05


def censor(y, a=-np.inf, b=np.inf):
    """y clamped into [a, b]; works elementwise on arrays"""
    if np.any(np.asarray(a) > np.asarray(b)):
        raise ValueError(f'Censoring interval is empty: a={a} > b={b}')
    if np.ndim(y) == 0:
        return float(min(max(y, a), b))
    return np.clip(y, a, b)


def censored_n_hat(n_hat, budget_N):
    """N^ censored into [N/2, 3N/2]"""
    return censor(n_hat, budget_N / 2.0, 1.5 * budget_N)


def bernstein_tail(budget_N):
    """Bound on P(|N^/N - 1| > 1/2)"""
    return 2.0 * math.exp(-3.0 * budget_N / 28.0)


def bernoulli_abs3(p):
    """E|Z - p|^3 = p (1 - p) (1 - 2p + 2p^2) for Z ~ Bernoulli(p). Exact for Fraction input."""
    return p * (1 - p) * (1 - 2 * p + 2 * p * p)


def bernoulli_abs3_direct(p):
    """E|Z - p|^3 summed over the two outcomes"""
    return p * (1 - p) ** 3 + (1 - p) * p ** 3


def lyapunov_factor(p):
    """(1 - 2p + 2p^2) / sqrt(1 - p)"""
    if not 0 <= p < 1:
        raise ValueError(f'Sampling probability must be in [0, 1), got {p}')
    return (1.0 - 2.0 * p + 2.0 * p * p) / math.sqrt(1.0 - p)


def lyapunov_factor_min():
    """(argmin, min) of `lyapunov_factor` over [0, 1): 6p^2 - 10p + 3 = 0 at the minimum"""
    return LYAPUNOV_ARGMIN, LYAPUNOV_MIN_VALUE


def normal_difference_bound(a):
    """Bound on sup_z |Phi(az) - Phi(z)| valid for a >= 1"""
    return NORMAL_DIFF_CONST * abs(a - 1.0)


def normal_difference(a, z):
    return np.abs(ndtr(a * z) - ndtr(z))


def lower_tail_bound(mean_kappa, mom_l, l, t, n, m):
    """Bound on P(U <= E[kappa] - t) for a U-statistic U with non-negative kernel kappa of degree m

    exp(-floor(n/m) (l - 1) (E[kappa] - t)^{l/(l-1)} / (l E[kappa^l]^{1/(l-1)}))
    with `mom_l` = E[kappa^l], 1 < l <= 2 and 0 < t <= E[kappa].
    """
    if not 1 < l <= 2:
        raise ValueError(f'Moment order must be in (1, 2], got l={l}')
    if not mom_l > 0:
        raise ValueError(f'Moment E[kappa^l] must be positive, got {mom_l}')
    if not 0 < t:
        raise ValueError(f'Deviation must be positive, got t={t}')
    if t > mean_kappa:
        raise ValueError(f'Deviation t={t} exceeds the mean {mean_kappa}')
    exponent = (n // m) * (l - 1.0) * (mean_kappa - t) ** (l / (l - 1.0)) / (l * mom_l ** (1.0 / (l - 1.0)))
    return math.exp(-exponent)


def h2_lower_tail(var_h, abs3_h, n, m):
    """Bounds on P(U_{h^2} <= var_h / 2) as (floor form, 1.05 form)

    The floor form is `lower_tail_bound` with kappa = h^2, l = 3/2, t = var_h / 2. The
    simplified form 1.05 exp(-n var_h^3 / (24 m E|h|^3^2)) dominates it.
    """
    floor_form = lower_tail_bound(var_h, abs3_h, 1.5, var_h / 2.0, n, m)
    simplified = LOWER_TAIL_CONST * math.exp(-n * var_h ** 3 / (24.0 * m * abs3_h ** 2))
    return floor_form, simplified