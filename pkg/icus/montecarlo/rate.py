import logging
from typing import NamedTuple

import numpy as np
from sklearn.linear_model import LinearRegression
from sklearn.metrics import r2_score

logger = logging.getLogger(__name__)


class RateFit(NamedTuple):
    slope: float
    intercept: float
    r2: float


def rate_fit(ns, ks) -> RateFit:
    """Least squares line through (log n, log ks)"""
    ns = np.asarray(ns, dtype=np.float64)
    ks = np.asarray(ks, dtype=np.float64)
    if len(ns) != len(ks):
        raise ValueError(f'Grid and distances differ in length: {len(ns)} != {len(ks)}')
    if len(ns) < 3:
        raise ValueError(f'Rate fit needs at least 3 grid points, got {len(ns)}')
    if np.any(ks <= 0) or np.any(ns <= 0):
        raise ValueError('Rate fit needs positive n and ks values')

    x = np.log(ns).reshape(-1, 1)
    y = np.log(ks)
    model = LinearRegression().fit(x, y)
    fit = RateFit(float(model.coef_[0]), float(model.intercept_), float(r2_score(y, model.predict(x))))
    logger.info(f'Rate fit over n={ns.astype(int).tolist()}: slope={fit.slope:.4f}, r2={fit.r2:.4f}')
    return fit


def rate_fit_results(results) -> RateFit:
    """`rate_fit` over SimulationResults of one experiment at several n"""
    return rate_fit([r.spec.n for r in results], [r.ks for r in results])
