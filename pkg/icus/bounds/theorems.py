"""Term-by-term evaluation of the Berry-Esseen bounds for incomplete U-statistics.

Theorem bounds hold up to an unspecified absolute constant, so their reports carry
`constant_known=False`. The explicit bounds for the complete U-statistic and for the
conditional law of B_n carry their constants.
"""
import logging
import math
from fractions import Fraction

from icus.bounds import report as R
from icus.bounds.inequalities import lyapunov_factor
from icus.bounds.report import BoundReport, Regime
from icus.combinatorics.binom import binom
from icus.combinatorics.design import BernoulliDesign
from icus.core.moments import DegenerateProfileError, MomentProfile
from icus.hoeffding import r_norm_bound

logger = logging.getLogger(__name__)

P_MAX = 0.99
COMPLETE_LYAPUNOV_CONST = 6.1
COMPLETE_GAP_CONST = 1.0 + math.sqrt(2.0)
CONDITIONAL_CONST = 0.56


def k_nmd(n, m, d):
    """K_{n,m,d} = C(n,m)^{-1} sum_{r=d}^m C(m-1,r-1) C(n-m,m-r), exact until the final division"""
    if not 1 <= d <= m <= n:
        raise ValueError(f'k_nmd requires 1 <= d <= m <= n, got n={n}, m={m}, d={d}')
    numerator = sum(binom(m - 1, r - 1) * binom(n - m, m - r) for r in range(d, m + 1) if m - r <= n - m)
    return float(Fraction(numerator, binom(n, m)))


def k_nm1(n, m):
    """K_{n,m,1} = m / n"""
    return m / n


def k_nm2_bound(n, m):
    """Upper bound m (m - 1)^2 / (n (n - m + 1)) on K_{n,m,2}"""
    return m * (m - 1) ** 2 / (n * (n - m + 1))


def _design_p(n, m, budget_N):
    return BernoulliDesign(n, m, budget_N).p


def b_frak1_terms(profile: MomentProfile, n, m, budget_N, p):
    profile.require('abs3_h').require_var_h()
    if not p < 1:
        raise ValueError(f'Sampling probability must be < 1, got p={p}')
    sigma3 = profile.var_h ** 1.5
    lyapunov = profile.abs3_h * lyapunov_factor(p) / (math.sqrt(budget_N) * sigma3)
    lower_tail = math.exp(-n * profile.var_h ** 3 / (24.0 * m * profile.abs3_h ** 2))
    return [(R.B1_LYAPUNOV, lyapunov), (R.B1_LOWER_TAIL, lower_tail)]


def b_frak1(profile: MomentProfile, n, m, budget_N, p):
    return sum(value for _, value in b_frak1_terms(profile, n, m, budget_N, p))


def b_frak2_terms(profile: MomentProfile, n, m):
    profile.require_var_h().require_var_g()
    lyapunov = profile.abs3_g / (math.sqrt(n) * profile.var_g ** 1.5)
    # var_h >= m var_g holds exactly, rounding can push the gap below zero
    gap = max(profile.var_h / (m * profile.var_g) - 1.0, 0.0)
    return [(R.B2_LYAPUNOV, lyapunov), (R.B2_VARIANCE_GAP, math.sqrt(m / n * gap))]


def b_frak2(profile: MomentProfile, n, m):
    return sum(value for _, value in b_frak2_terms(profile, n, m))


def _k_value(n, m, d, k_simplified):
    if k_simplified and d == 1:
        return k_nm1(n, m)
    if k_simplified and d == 2:
        return k_nm2_bound(n, m)
    return k_nmd(n, m, d)


def _psi_term(profile, n, m):
    profile.require('psi1_pow32')
    return m ** 1.5 * profile.psi1_pow32 / (math.sqrt(n) * profile.var_h ** 1.5)


def _var_h2_term(profile, n, m):
    profile.require('var_h2')
    return math.sqrt(m * profile.var_h2) / (math.sqrt(n) * profile.var_h)


def thm_bound(regime, profile: MomentProfile, n, m, budget_N, use_4th_moment=False,
              k_simplified=False) -> BoundReport:
    """Terms of the theorem bound for the given regime

    Parameters
    ----------
    regime:
        `Regime.NggN`, `Regime.NllNd` or `Regime.NasympN` (or their string values)
    use_4th_moment:
        replace the Psi_1 and remainder terms with the fourth moment term
    k_simplified:
        use m/n for d = 1 and the m (m - 1)^2 / (n (n - m + 1)) bound for d = 2 instead of exact K
    """
    regime = regime if isinstance(regime, Regime) else Regime.from_name(regime)
    if m != profile.degree:
        raise ValueError(f'Profile has degree {profile.degree}, got m={m}')
    p = _design_p(n, m, budget_N)
    profile.require_var_h()
    surrogate = False

    if regime == Regime.NggN:
        profile.require_var_g()
        terms = b_frak2_terms(profile, n, m) + [
            (R.SAMPLING_RATIO, math.sqrt(n * (1.0 - p) * profile.var_h / (budget_N * m * profile.var_g))),
            (R.INV_SQRT_N, 1.0 / math.sqrt(budget_N)),
        ]
    elif regime == Regime.NllNd:
        k_value = _k_value(n, m, profile.rank_d, k_simplified)
        terms = b_frak1_terms(profile, n, m, budget_N, p) + [
            (R.K_TERM, math.sqrt(budget_N * k_value) / math.sqrt(1.0 - p)),
        ]
        if use_4th_moment:
            terms.append((R.VAR_H2_TERM, _var_h2_term(profile, n, m)))
        else:
            terms += [(R.PSI_TERM, _psi_term(profile, n, m)), (R.R_TERM, r_norm_bound(profile, n))]
            surrogate = True
    elif regime == Regime.NasympN:
        profile.require_var_g()
        terms = b_frak1_terms(profile, n, m, budget_N, p) + b_frak2_terms(profile, n, m) + [
            (R.SQRT_M_TERM, math.sqrt(m) / math.sqrt(n * (1.0 - p))),
        ]
        if use_4th_moment:
            terms += [(R.N_OVER_N2, budget_N / (n ** 2 * (1.0 - p))), (R.VAR_H2_TERM, _var_h2_term(profile, n, m))]
        else:
            inflation = 1.0 + math.sqrt(m * budget_N) / math.sqrt(n * (1.0 - p))
            terms += [(R.PSI_TERM, inflation * _psi_term(profile, n, m)), (R.R_TERM, r_norm_bound(profile, n))]
            surrogate = True
    else:
        raise AttributeError(f'thm_bound does not evaluate explicit regime "{regime.value}"')

    report = BoundReport(regime, tuple(terms), constant_known=False, surrogate=surrogate,
                         inputs=dict(n=n, m=m, N=budget_N, p=p, fourth_moment=use_4th_moment))
    logger.info(f'{regime.value} bound for n={n}, m={m}, N={budget_N}: total={report.total:.6g}')
    return report


def explicit_complete_bound(profile: MomentProfile, n, m) -> BoundReport:
    """6.1 E|g|^3 / (sqrt(n) var_g^{3/2}) + (1 + sqrt(2)) sqrt((m/n) (var_h / (m var_g) - 1))"""
    (label1, term1), (label2, term2) = b_frak2_terms(profile, n, m)
    terms = ((label1, COMPLETE_LYAPUNOV_CONST * term1), (label2, COMPLETE_GAP_CONST * term2))
    return BoundReport(Regime.CompleteExplicit, terms, constant_known=True, inputs=dict(n=n, m=m))


def explicit_conditional_bound(bundle, budget_N, p, p_max=P_MAX):
    """0.56 U_{|h|^3} (1 - 2p + 2p^2) / (U_{h^2}^{3/2} sqrt(N (1 - p)))

    `bundle` is an `EstimateBundle` with exact complete averages.
    """
    bundle.require_exact()
    if p > p_max:
        raise ValueError(f'Sampling probability p={p} above {p_max}: the bound diverges as p -> 1')
    if not bundle.u_h2 > 0:
        raise DegenerateProfileError('Degenerate conditional law: U_{h^2} = 0')
    return CONDITIONAL_CONST * bundle.u_abs_h3 * lyapunov_factor(p) / (bundle.u_h2 ** 1.5 * math.sqrt(budget_N))


def explicit_conditional_report(bundle, budget_N, p, p_max=P_MAX) -> BoundReport:
    value = explicit_conditional_bound(bundle, budget_N, p, p_max)
    return BoundReport(Regime.ConditionalExplicit, ((R.CONDITIONAL, value),), constant_known=True,
                       inputs=dict(N=budget_N, p=p))
