import math

import numpy as np
from scipy.special import ndtr

DKW_ALPHA = 0.05


def ks_to_normal(sample):
    """Kolmogorov distance between the empirical CDF of `sample` and the standard normal CDF"""
    x = np.sort(np.asarray(sample, dtype=np.float64).ravel())
    size = len(x)
    if size == 0:
        raise ValueError('Kolmogorov distance of an empty sample')
    cdf = ndtr(x)
    upper = np.arange(1, size + 1) / size - cdf
    lower = cdf - np.arange(0, size) / size
    return float(max(np.abs(upper).max(), np.abs(lower).max()))


def dkw_band(reps, alpha=DKW_ALPHA):
    """Dvoretzky-Kiefer-Wolfowitz half-width: sup |F_R - F| exceeds it with probability <= alpha"""
    if reps < 1:
        raise ValueError(f'DKW band needs reps >= 1, got {reps}')
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * reps))
