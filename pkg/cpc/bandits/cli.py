"""
Command-line interface

    cpc-bandits run --policy sbts-es --beta-bins 10 --env mu2
    cpc-bandits compare --policies ucb,sbts-essr --arms 8 --horizon 10000 --experiments 100 \\
        --seed 42 --out results/
    cpc-bandits sweep-wl --policy sbts-essr --precision f32,fixed:27:26,fixed:11:10,fixed:6:5 \\
        --env mu1
    cpc-bandits rimab --env mu3 --reward gaussian:0.05 --nlearn 500 --baselines
    cpc-bandits validate

Every setting can also come from a JSON/YAML file given with --config; flags override the file.
Exit codes: 0 on success, 1 on usage or configuration errors, 2 when a validation check fails.
"""

# Built-ins
import argparse
import logging
import sys

# This package
from .env import EnvSpec
from .exceptions import ConfigError
from .harness import ExperimentConfig, compare, run_batch, sweep_precision
from .loading import load_config, merge_settings
from .numeric import Precision, parse_precision_list
from .policies import PolicyConfig
from .rimab import AggregatorConfig
from .validation import run_checks
from .writing import DEFAULT_FILE_TEMPLATE, OUTPUT_FORMATS, write_results

logger = logging.getLogger(__name__)

PROG = 'cpc-bandits'

DEFAULTS = {
    'policy': 'sbts-essr',
    'policies': 'ucb,sbts-essr',
    'candidates': 'ucb,sbts-essr',
    'arms': 8,
    'horizon': 10000,
    'experiments': 100,
    'seed': 42,
    'env': 'random',
    'min_gap': 0.0,
    'reward': 'bernoulli',
    'alpha': 2.0,
    'klucb_c': 0.0,
    'beta_bins': 20,
    'precision': None,
    'nlearn': 500,
    'out': 'results',
    'format': 'csv',
    'workers': 1,
    'file_template': DEFAULT_FILE_TEMPLATE,
    'stamp': False,
    'baselines': False,
}

SWEEP_PRECISIONS = 'f32,fixed:27:26,fixed:11:10,fixed:6:5'


class UsageError(Exception):
    pass


class ArgumentParser(argparse.ArgumentParser):
    """
    ArgumentParser that raises UsageError instead of exiting
    """
    def error(self, message):
        raise UsageError(f'{self.prog}: error: {message}')


def _add_experiment_flags(parser):
    parser.add_argument('--config', help='JSON or YAML file with settings (flags override it)')
    parser.add_argument('--env', help='mu1..mu4, random, random:K[:gap] or a comma list of means')
    parser.add_argument('--arms', type=int, help='number of arms of a random environment')
    parser.add_argument('--min-gap', type=float, help='minimum gap between random arm means')
    parser.add_argument('--reward', help='bernoulli or gaussian[:sigma]')
    parser.add_argument('--horizon', type=int, help='number of slots N')
    parser.add_argument('--experiments', type=int, help='number of experiments')
    parser.add_argument('--seed', type=int, help='32-bit base seed')
    parser.add_argument('--alpha', type=float, help='UCB exploration factor')
    parser.add_argument('--klucb-c', type=float, help='KL-UCB constant c')
    parser.add_argument('--beta-bins', type=int, help='number of bins L of sbts-es/sbts-essr')
    parser.add_argument('--precision', help='f64, f32, fixed:WL or fixed:WL:F')
    parser.add_argument('--workers', type=int, help='worker processes')
    parser.add_argument('--out', help='output directory')
    parser.add_argument('--format', choices=OUTPUT_FORMATS, help='per-run output format')
    parser.add_argument('--file-template', help='Jinja2 template of the per-run file names')
    parser.add_argument('--stamp', action='store_true', default=None,
                        help='record a creation timestamp in the summary file')


def build_parser():
    parser = ArgumentParser(prog=PROG, description='Multi-armed bandit experiments')
    parser.add_argument('--verbose', action='store_true', help='log progress')
    parser.add_argument('--debug', action='store_true', help='log per-experiment details')
    subparsers = parser.add_subparsers(dest='command', metavar='command')
    subparsers.required = True

    run = subparsers.add_parser('run', help='run one policy')
    run.add_argument('--policy', help='policy, e.g. ucb, klucb, bts-ref, sbts, sbts-es:10')
    _add_experiment_flags(run)

    comp = subparsers.add_parser('compare', help='run several policies on paired experiments')
    comp.add_argument('--policies', help='comma-separated policies')
    _add_experiment_flags(comp)

    sweep = subparsers.add_parser('sweep-wl', help='run one policy at several precisions')
    sweep.add_argument('--policy', help='policy to sweep')
    _add_experiment_flags(sweep)

    rimab = subparsers.add_parser('rimab', help='run the RI-MAB aggregator')
    rimab.add_argument('--candidates', help='comma-separated candidate policies')
    rimab.add_argument('--nlearn', type=int, help='length of the learning phase')
    rimab.add_argument('--baselines', action='store_true', default=None,
                       help='also run every candidate alone and the velcro-approx baseline')
    _add_experiment_flags(rimab)

    validate = subparsers.add_parser('validate', help='run the validation suite')
    validate.add_argument('--draws', type=int, default=10 ** 5,
                          help='samples per distribution check')
    validate.add_argument('--slots', type=int, default=10 ** 5,
                          help='simulated slots for the invariant checks')
    validate.add_argument('--seed', type=int, default=2024, help='base seed')
    return parser


def _settings(args):
    flags = {k: v for k, v in vars(args).items()
             if k not in ('command', 'config', 'verbose', 'debug')}
    file_settings = load_config(args.config) if args.config else {}
    return merge_settings(DEFAULTS, file_settings, flags)


def _precision(settings):
    precision = settings['precision']
    return Precision.parse(precision) if precision else Precision()


def _policy(text, settings, precision=None):
    return PolicyConfig.parse(text, alpha=settings['alpha'], c=settings['klucb_c'],
                              L=settings['beta_bins'],
                              precision=precision if precision is not None else
                              _precision(settings))


def _env_spec(settings):
    return EnvSpec.parse(settings['env'], arms=settings['arms'], min_gap=settings['min_gap'],
                         reward=settings['reward'])


def _split(text):
    return [item.strip() for item in str(text).split(',') if item.strip()]


def _batch_args(settings):
    return dict(N=settings['horizon'], num_experiments=settings['experiments'],
                base_seed=settings['seed'], workers=settings['workers'])


def run_command(command, settings):
    """
    Runs an experiment command and returns its summaries and configuration echo
    """
    env_spec = _env_spec(settings)
    batch = _batch_args(settings)
    config = {'horizon': batch['N'], 'experiments': batch['num_experiments'],
              'seed': batch['base_seed']}
    config.update(env_spec.to_dict())
    if command == 'run':
        policy = _policy(settings['policy'], settings)
        config['policy'] = policy.to_dict()
        summaries = [run_batch(ExperimentConfig(env_spec, policy, **batch))]
    elif command == 'compare':
        policies = [_policy(text, settings) for text in _split(settings['policies'])]
        config['policies'] = [p.to_dict() for p in policies]
        summaries = compare(env_spec, policies, **batch)
    elif command == 'sweep-wl':
        precisions = parse_precision_list(settings['precision'] or SWEEP_PRECISIONS)
        policy = _policy(settings['policy'], settings, Precision())
        config['policy'] = policy.to_dict()
        config['precisions'] = [p.label for p in precisions]
        summaries = sweep_precision(env_spec, policy, precisions, **batch)
    else:
        candidates = [_policy(text, settings) for text in _split(settings['candidates'])]
        aggregator = AggregatorConfig(candidates, n_learn=settings['nlearn'])
        config['aggregator'] = aggregator.to_dict()
        summaries = [run_batch(ExperimentConfig(env_spec, aggregator=aggregator, **batch))]
        if settings['baselines']:
            summaries += compare(env_spec, candidates, **batch)
            summaries.append(run_batch(ExperimentConfig(env_spec, aggregator=aggregator,
                                                        velcro=True, **batch)))
    return summaries, config


def _print_summaries(summaries):
    for summary in summaries:
        low, high = summary.ci95
        line = (f'{summary.label:<32s} final regret {summary.final_regrets.mean():10.2f} '
                f'[{low:.2f}, {high:.2f}]  optimal pulls {summary.optimal_pulls.mean():.1f}')
        committed = [c for c in summary.committed if c is not None]
        if committed:
            line += f'  committed {committed}'
        print(line)


def validate(args):
    results = run_checks(draws=args.draws, slots=args.slots, seed=args.seed)
    for result in results:
        print(result)
    return 0 if all(result.passed for result in results) else 2


def main(argv=None):
    """
    Parses the command line, runs the command and returns the exit code
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        return 1
    level = logging.DEBUG if args.debug else logging.INFO if args.verbose else logging.WARNING
    logging.basicConfig(level=level, format='%(asctime)s %(name)s %(levelname)s: %(message)s')
    if args.command == 'validate':
        return validate(args)
    try:
        settings = _settings(args)
        summaries, config = run_command(args.command, settings)
        write_results(settings['out'], args.command, config, summaries,
                      format=settings['format'], file_template=settings['file_template'],
                      stamp=bool(settings['stamp']))
    except (ConfigError, ValueError) as e:
        print(f'{PROG}: error: {e}', file=sys.stderr)
        return 1
    _print_summaries(summaries)
    return 0


if __name__ == '__main__':
    sys.exit(main())
