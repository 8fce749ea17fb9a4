"""Command line front end: `python -m icus.cli <subcommand> [flags]`

CSV goes to stdout (or `--output`), logs go to stderr (and `--log_file`).
Every CSV starts with one `# config: ...` comment line echoing the resolved flags.
"""
import argparse
import datetime
import io
import logging
import os
import sys

import pandas as pd
from omegaconf import OmegaConf

from icus import __version__
from icus.bounds.report import Regime
from icus.bounds.theorems import explicit_complete_bound, explicit_conditional_report, thm_bound
from icus.combinatorics.binom import binom
from icus.combinatorics.design import BernoulliDesign, sample_design
from icus.core.dataset import Dataset
from icus.core.kernels import KERNELS, get_kernel
from icus.core.laws import LAWS, get_law
from icus.core.moments import MissingMomentError, get_profile
from icus.estimators import complete_u, incomplete_u
from icus.montecarlo.checks import CHECKS, check_appendix, run_check
from icus.montecarlo.experiment import RESULT_COLUMNS, ExperimentSpec, SimRegime, run_experiment
from icus.montecarlo.rate import rate_fit_results
from icus.util import build_digest

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.17g'


def _common_parser():
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument('--seed', type=int, default=0)
    parser.add_argument('--threads', '--num_workers', dest='num_workers', type=int, default=0)
    parser.add_argument('--output', type=os.path.abspath, default=None)
    parser.add_argument('--log_file', type=os.path.abspath, default=None)
    parser.add_argument('--log_level', default='INFO', choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'])
    return parser


def _add_problem_args(parser, n_required=True):
    parser.add_argument('--kernel', choices=sorted(KERNELS), required=True)
    parser.add_argument('--law', choices=sorted(LAWS))
    parser.add_argument('--n', type=int, required=n_required)
    parser.add_argument('--m', type=int, default=2)
    parser.add_argument('--mu', type=float, default=None)


def get_parser():
    common = _common_parser()
    parser = argparse.ArgumentParser(prog='icus', description='Incomplete U-statistics under a budget')
    parser.add_argument('--version', action='version', version=f'icus {__version__} ({build_digest()})')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('estimate', parents=[common], help='complete and incomplete estimates on one dataset')
    _add_problem_args(p, n_required=False)
    p.add_argument('--data', type=os.path.abspath, default=None)
    p.add_argument('--N', dest='budget_N', type=int, required=True)
    p.add_argument('--dump_design', type=os.path.abspath, default=None)

    p = sub.add_parser('bounds', parents=[common], help='terms of a Berry-Esseen bound')
    _add_problem_args(p)
    p.add_argument('--regime', choices=[r.value for r in Regime], required=True)
    p.add_argument('--N', dest='budget_N', type=int, default=None)
    p.add_argument('--fourth_moment', '--fourth-moment', dest='fourth_moment', action='store_true')
    p.add_argument('--k_simplified', action='store_true')
    p.add_argument('--data_seed', type=int, default=None)
    p.add_argument('--profile_reps', type=int, default=10 ** 6)

    for name, help_text in [('simulate', 'Monte Carlo Kolmogorov distance to the normal law'),
                            ('rate', 'Kolmogorov distance over a grid of n with a log-log slope')]:
        p = sub.add_parser(name, parents=[common], help=help_text)
        _add_problem_args(p, n_required=name == 'simulate')
        p.add_argument('--regime', choices=[r.value for r in SimRegime], required=True)
        p.add_argument('--N', dest='budget', default='n^2')
        p.add_argument('--reps', type=int, default=10 ** 4)
        p.add_argument('--normalizer', choices=['random', 'deterministic'], default='random')
        p.add_argument('--complete_scale', choices=['exact', 'projection'], default='exact')
        p.add_argument('--data_seed', type=int, default=None)
        if name == 'rate':
            p.add_argument('--ns', type=int, nargs='+', default=[50, 100, 200, 400])

    p = sub.add_parser('check', parents=[common], help='verification suites')
    p.add_argument('name', choices=['appendix', 'acceptance'] + sorted(CHECKS))
    p.add_argument('--size', type=float, default=1.0)
    return parser


def parse_args(args=None):
    parser = get_parser()
    return parser, parser.parse_args(args)


def configure_logging(config):
    handlers = [logging.StreamHandler(sys.stderr)]
    if config.log_file is not None:
        handlers.append(logging.FileHandler(config.log_file, mode='w'))
    logging.basicConfig(level=getattr(logging, config.log_level),
                        format='%(funcName)-20s   : %(message)s',
                        handlers=handlers)


def config_line(config):
    conf = OmegaConf.create(vars(config))
    return '# config: ' + ';'.join(f'{k}={conf[k]}' for k in conf)


def write_csv(config, df, footer=None):
    buffer = io.StringIO()
    buffer.write(config_line(config) + '\n')
    df.to_csv(buffer, index=False, float_format=FLOAT_FORMAT)
    if footer is not None:
        buffer.write(footer + '\n')
    text = buffer.getvalue()
    if config.output is None:
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(config.output, 'w') as f:
            f.write(text)
        logger.info(f'{len(df)} rows saved to "{config.output}"')


def _check_design_args(parser, n, m, budget_N):
    if not 2 <= m or not 2 * m < n:
        parser.error(f'argument --m: design requires 2 <= m < n/2, got m={m} with n={n}')
    if budget_N is None:
        parser.error('argument --N: required for this regime')
    total = binom(n, m)
    if not 0 < budget_N < total:
        parser.error(f'argument --N: must satisfy 0 < N < C(n,m)={total}, got {budget_N}')


def cmd_estimate(parser, config):
    kernel = get_kernel(config.kernel, config.m)
    if (config.data is None) == (config.law is None):
        parser.error('argument --data/--law: exactly one of them is required')
    if config.data is not None:
        data = Dataset.from_csv(config.data)
    else:
        if config.n is None:
            parser.error('argument --n: required with --law')
        data = Dataset.from_law(get_law(config.law), config.n, seed=config.seed, arity=kernel.arity)
    _check_design_args(parser, data.n, kernel.degree, config.budget_N)

    mu = config.mu
    if mu is None and config.law is not None:
        mu = get_profile(kernel, get_law(config.law), seed=config.seed).mean_h
    elif mu is None:
        mu = complete_u(data, kernel)
        logger.warning(f'No law and no --mu given, centering at the complete U-statistic {mu:.6g}')

    design = BernoulliDesign(data.n, kernel.degree, config.budget_N, seed=config.seed)
    sd = sample_design(design)
    if config.dump_design is not None:
        with open(config.dump_design, 'w') as f:
            f.write(sd.to_csv_line() + '\n')
        logger.info(f'Design with n_hat={sd.n_hat} saved to "{config.dump_design}"')
    bundle = incomplete_u(data, kernel, sd, mu=mu)
    write_csv(config, pd.DataFrame([bundle.to_dict()]))
    return 0


def cmd_bounds(parser, config):
    regime = Regime.from_name(config.regime)
    kernel = get_kernel(config.kernel, config.m)
    if config.law is None:
        parser.error('argument --law: required for bounds')
    law = get_law(config.law)

    if regime == Regime.CompleteExplicit:
        if not 1 <= kernel.degree <= config.n:
            parser.error(f'argument --m: need m <= n, got m={kernel.degree} with n={config.n}')
    else:
        _check_design_args(parser, config.n, kernel.degree, config.budget_N)

    profile = get_profile(kernel, law, seed=config.seed, reps=config.profile_reps)
    if regime == Regime.CompleteExplicit:
        report = explicit_complete_bound(profile, config.n, kernel.degree)
    elif regime == Regime.ConditionalExplicit:
        data_seed = config.seed if config.data_seed is None else config.data_seed
        data = Dataset.from_law(law, config.n, seed=data_seed, arity=kernel.arity)
        design = BernoulliDesign(config.n, kernel.degree, config.budget_N, seed=config.seed)
        mu = profile.mean_h if config.mu is None else config.mu
        bundle = incomplete_u(data, kernel, sample_design(design), mu=mu)
        report = explicit_conditional_report(bundle, config.budget_N, design.p)
    else:
        report = thm_bound(regime, profile, config.n, kernel.degree, config.budget_N,
                           use_4th_moment=config.fourth_moment, k_simplified=config.k_simplified)
    write_csv(config, report.to_frame())
    return 0


def _experiment_spec(config, n):
    return ExperimentSpec(law=config.law, kernel=config.kernel, regime=config.regime, n=n, m=config.m,
                          budget=config.budget, reps=config.reps, seed=config.seed,
                          num_workers=config.num_workers, normalizer=config.normalizer,
                          complete_scale=config.complete_scale, data_seed=config.data_seed, mu=config.mu)


def cmd_simulate(parser, config):
    if config.law is None:
        parser.error('argument --law: required for simulate')
    result = run_experiment(_experiment_spec(config, config.n))
    write_csv(config, pd.DataFrame([result.to_row()], columns=RESULT_COLUMNS))
    return 0


def cmd_rate(parser, config):
    if config.law is None:
        parser.error('argument --law: required for rate')
    kernel = get_kernel(config.kernel, config.m)
    profile = None
    if not (config.regime == SimRegime.ConditionalOnly.value and config.mu is not None):
        profile = get_profile(kernel, get_law(config.law), seed=config.seed)
    results = [run_experiment(_experiment_spec(config, n), profile) for n in config.ns]
    fit = rate_fit_results(results)
    footer = f'# rate: slope={fit.slope:.17g};intercept={fit.intercept:.17g};r2={fit.r2:.17g}'
    write_csv(config, pd.DataFrame([r.to_row() for r in results], columns=RESULT_COLUMNS), footer)
    return 0


def cmd_check(parser, config):
    if config.name == 'appendix':
        scale = config.size
        results = [check_appendix(random_pairs=max(int(10 ** 5 * scale), 1),
                                  bennett_reps=max(int(10 ** 5 * scale), 2),
                                  fuzz=max(int(10 ** 6 * scale), 1), seed=config.seed)]
    elif config.name == 'acceptance':
        results = [run_check(name, config.size, config.seed, config.num_workers) for name in CHECKS]
    else:
        results = [run_check(config.name, config.size, config.seed, config.num_workers)]
    write_csv(config, pd.DataFrame([r.to_row() for r in results], columns=['name', 'passed', 'details']))
    failed = [r.name for r in results if not r.passed]
    if failed:
        logger.error(f'Failed checks: {failed}')
        return 1
    return 0


COMMANDS = {
    'estimate': cmd_estimate,
    'bounds': cmd_bounds,
    'simulate': cmd_simulate,
    'rate': cmd_rate,
    'check': cmd_check,
}


def main(argv=None):
    """Exit code: 0 on success, 1 on a failed check, 2 on a usage error"""
    try:
        parser, config = parse_args(argv)
        configure_logging(config)
        logger.info('Parsed args:\n' + '\n'.join([f'  {k:15}: {v}' for k, v in vars(config).items()]))
        _start = datetime.datetime.now()
        try:
            code = COMMANDS[config.command](parser, config)
        except (ValueError, AttributeError, MissingMomentError) as e:
            parser.error(str(e))
        _duration = datetime.datetime.now() - _start
        logger.info(f'"{config.command}" done in {_duration.seconds} sec ({_duration})')
        return code
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2


if __name__ == '__main__':
    sys.exit(main())
