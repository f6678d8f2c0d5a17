#!/usr/bin/env python
# coding: utf8

"""
Command line front end: ``train``, ``attack``, ``evaluate``, ``detect`` and
``sweep``.

Exit codes are 0 on success (or a clean detection), 1 on usage or I/O
errors and 2 when ``detect`` flags the model.
"""

import argparse
import io
import logging
import os
import os.path as osp
import sys

from tqdm import tqdm

from . import __version__
from .config import ExperimentConfig
from .dataset import load_mnist, load_patterns, digit_patterns, write_pgm
from .errors import FooBarError, ConfigError, MissingFaultPlan, NoSolvableImages
from .evaluation import (AttackReport, attack_success_rate, compare_accuracy,
                         default_probe_schedule, detect_backdoor, report_csv,
                         csv_text)
from .faults import plan_for_model
from .fooling import generate_fooling_set, status_csv
from .modelstore import save_file, load_file
from .trainer import TrainConfig, initialize_model, train, evaluate_accuracy

LOGGER = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_FLAGGED = 2

STEALTH_FIELDS = ('target', 'fraction', 'overall_delta', 'max_class_delta')

# Step of the ``start..stop`` fraction ranges.
FRACTION_STEP = 0.1


class _Parser(argparse.ArgumentParser):
    """Argument parser reporting usage errors as ``ConfigError``."""

    def error(self, message):
        raise ConfigError(message)


def parse_fractions(text):
    """Fractions given as ``0.2,0.4`` or as the ``0.1..1.0`` range of 0.1
    steps."""
    if '..' in text:
        start, stop = [float(bound) for bound in text.split('..', 1)]
        count = int(round((stop - start) / FRACTION_STEP)) + 1
        values = [round(start + index * FRACTION_STEP, 10)
                  for index in range(max(count, 0))]
    else:
        values = [float(item) for item in text.split(',') if item.strip()]
    if not values:
        raise ConfigError('Empty fraction list %r' % text)
    return values


def parse_targets(text):
    """Classes given as ``3,8`` or as the inclusive range ``0..9``."""
    if '..' in text:
        start, stop = [int(bound) for bound in text.split('..', 1)]
        values = list(range(start, stop + 1))
    else:
        values = [int(item) for item in text.split(',') if item.strip()]
    if not values:
        raise ConfigError('Empty target list %r' % text)
    if any(not 0 <= value <= 9 for value in values):
        raise ConfigError('Targets shall be classes within 0..9')
    return values


def _settings(args):
    overrides = dict((key, getattr(args, key)) for key in ExperimentConfig.KEYS
                     if getattr(args, key, None) is not None)
    return ExperimentConfig.load(args.config, overrides)


def _train_config(config, progress=False):
    return TrainConfig(epochs=config.epochs,
                       batch_size=config.batch_size,
                       learning_rate=config.learning_rate,
                       rng_seed=config.seed,
                       hidden_sizes=config.hidden_sizes,
                       conv_filters=config.conv_filters,
                       conv_tail=config.conv_tail,
                       progress=progress)


def _load_data(config):
    train_set = load_mnist(config.data, 'train')
    if config.subset:
        train_set = train_set.subset(config.subset)
    return train_set, load_mnist(config.data, 'test')


def _patterns(config):
    patterns = load_patterns(config.icons)
    if not patterns:
        raise ConfigError('No PGM pattern in %s' % config.icons)
    return patterns


def _write(path, text):
    if path in (None, '-'):
        sys.stdout.write(text)
        return
    with io.open(path, 'w', encoding='utf-8') as stream:
        stream.write(text)
    LOGGER.info('Wrote %s', path)


def train_network(config, train_set, test_set, target=None, fraction=None,
                  progress=False):
    """Train one network, attacked when ``target`` is given.

    Returns
    -------
    model:
        Trained ``NetworkModel``.
    log:
        ``TrainingLog`` of the run.
    plan:
        ``FaultPlan`` applied, None for a clean network.
    """
    train_config = _train_config(config, progress)
    plan = None
    if target is not None:
        initial = initialize_model(train_config, config.arch, train_set.shape)
        plan = plan_for_model(initial, target, fraction, config.p,
                              config.fault_seed, config.attacked_layer)
        train_config.fault_plan = plan
    model, log = train(train_config, train_set, test_set, config.arch)
    return model, log, plan


def cmd_train(args):
    """Train a clean or attacked model, write it with its training log."""
    config = _settings(args)
    train_set, test_set = _load_data(config)
    model, log, plan = train_network(config, train_set, test_set,
                                     config.target, config.fraction,
                                     args.progress)
    save_file(args.output, model, plan)
    LOGGER.info('Model written to %s', args.output)
    _write(args.log, log.to_csv())
    return EXIT_OK


def cmd_attack(args):
    """Generate the fooling set of a backdoored model file."""
    config = _settings(args)
    model, plan = load_file(args.model)
    if plan is None:
        raise MissingFaultPlan('%s does not embed a fault plan' % args.model)
    if args.digits:
        digits = [int(digit) for digit in args.digits.split(',') if digit.strip()]
        patterns = digit_patterns(load_mnist(config.data, 'test'), digits)
    else:
        patterns = _patterns(config)
    results = generate_fooling_set(model, plan, patterns, radius=config.radius,
                                   weight_scales=config.weight_scales,
                                   free_weights=config.free_weights)
    if not osp.isdir(args.out):
        os.makedirs(args.out)
    for index, (spec, outcome) in enumerate(results):
        if outcome.is_feasible:
            path = osp.join(args.out, '%02d_%s.pgm' % (index, spec.name))
            with io.open(path, 'wb') as stream:
                stream.write(write_pgm(outcome.pixels, patterns[0].shape))
    _write(osp.join(args.out, 'status.csv'), status_csv(results))
    try:
        report = attack_success_rate(model, results, plan.target_class)
        _write(osp.join(args.out, 'report.csv'), report_csv([report]))
        LOGGER.info('%r', report)
    except NoSolvableImages as error:
        LOGGER.warning('%s', error)
    return EXIT_OK


def cmd_evaluate(args):
    """Report test accuracy, and attack statistics of an embedded plan."""
    config = _settings(args)
    model, plan = load_file(args.model)
    overall, per_class = evaluate_accuracy(model, load_mnist(config.data, 'test'))
    rows = [[label, repr(float(value))] for label, value in enumerate(per_class)]
    rows.append(['all', repr(overall)])
    _write(args.out, csv_text(('class', 'accuracy'), rows))
    if plan is not None and args.icons:
        results = generate_fooling_set(model, plan, _patterns(config),
                                       radius=config.radius,
                                       weight_scales=config.weight_scales,
                                       free_weights=config.free_weights)
        report = attack_success_rate(model, results, plan.target_class,
                                     clean_accuracy=overall)
        _write(args.report, report_csv([report]))
    return EXIT_OK


def cmd_detect(args):
    """Probe a model, exit with 2 if it looks backdoored."""
    config = _settings(args)
    model, _ = load_file(args.model)
    if args.schedule:
        schedule = [int(count) for count in args.schedule.split(',') if count.strip()]
    else:
        schedule = default_probe_schedule(model)
    verdict = detect_backdoor(model, schedule, _patterns(config),
                              frequency_threshold=config.fthr,
                              confidence_threshold=config.cthr,
                              radius=config.radius)
    _write(args.out, verdict.to_csv())
    return EXIT_FLAGGED if verdict.flagged else EXIT_OK


def cmd_sweep(args):
    """Train and attack one network per (target, fraction) cell."""
    config = _settings(args)
    fractions = parse_fractions(args.fractions)
    targets = parse_targets(args.targets)
    patterns = _patterns(config)
    train_set, test_set = _load_data(config)
    clean_model, _, _ = train_network(config, train_set, test_set)
    clean = evaluate_accuracy(clean_model, test_set)
    LOGGER.info('Clean baseline accuracy %.4f', clean[0])
    reports, stealth = [], []
    cells = [(target, fraction) for target in targets for fraction in fractions]
    for target, fraction in tqdm(cells, desc='sweep', disable=not args.progress):
        model, _, plan = train_network(config, train_set, test_set, target,
                                       fraction)
        attacked = evaluate_accuracy(model, test_set)
        results = generate_fooling_set(model, plan, patterns,
                                       radius=config.radius,
                                       weight_scales=config.weight_scales,
                                       free_weights=config.free_weights)
        try:
            report = attack_success_rate(model, results, target, fraction,
                                         attacked[0])
        except NoSolvableImages:
            report = AttackReport(target, len(plan.faulted_units), len(results),
                                  0, 0, [], fraction, attacked[0])
        reports.append(report)
        overall_delta, class_delta = compare_accuracy(clean, attacked)
        stealth.append([target, repr(fraction), repr(overall_delta),
                        repr(class_delta)])
        LOGGER.info('%r', report)
    if not osp.isdir(args.out):
        os.makedirs(args.out)
    _write(osp.join(args.out, 'report.csv'), report_csv(reports))
    _write(osp.join(args.out, 'stealth.csv'), csv_text(STEALTH_FIELDS, stealth))
    return EXIT_OK


def _add_common(parser):
    parser.add_argument('--config', help='key = value configuration file')
    parser.add_argument('-v', '--verbose', action='count', default=0,
                        help='INFO logging, DEBUG when repeated')
    parser.add_argument('--progress', action='store_true',
                        help='display progress bars')


def _add_training(parser):
    parser.add_argument('--arch', help='mlp or conv')
    parser.add_argument('--data', help='MNIST directory (default $FOOBAR_DATA)')
    parser.add_argument('--seed', help='training seed')
    parser.add_argument('--epochs')
    parser.add_argument('--batch-size', dest='batch_size')
    parser.add_argument('--learning-rate', dest='learning_rate')
    parser.add_argument('--subset', help='train on the first n samples only')
    parser.add_argument('--p', help='sample fault probability')
    parser.add_argument('--fault-seed', dest='fault_seed')
    parser.add_argument('--attacked-layer', dest='attacked_layer')
    parser.add_argument('--hidden-sizes', dest='hidden_sizes')
    parser.add_argument('--conv-filters', dest='conv_filters')
    parser.add_argument('--conv-tail', dest='conv_tail')


def _add_fooling(parser):
    parser.add_argument('--icons', help='directory of PGM patterns')
    parser.add_argument('--d', dest='radius', help='neighborhood radius')
    parser.add_argument('--weight-scales', dest='weight_scales')
    parser.add_argument('--free-weights', dest='free_weights')


def build_parser():
    """Parser of the ``foobar-lab`` command."""
    parser = _Parser(prog='foobar-lab', description=__doc__.strip().split('\n')[0])
    parser.add_argument('--version', action='version', version=__version__)
    commands = parser.add_subparsers(dest='name', parser_class=_Parser)
    commands.required = True

    command = commands.add_parser('train', help=cmd_train.__doc__)
    _add_common(command)
    _add_training(command)
    command.add_argument('--target', help='attacked class, clean if omitted')
    command.add_argument('--fraction', help='faulted fraction of the layer')
    command.add_argument('--output', default='model.foobar')
    command.add_argument('--log', default='train_log.csv')
    command.set_defaults(command=cmd_train)

    command = commands.add_parser('attack', help=cmd_attack.__doc__)
    _add_common(command)
    _add_fooling(command)
    command.add_argument('--model', required=True)
    command.add_argument('--data', help='MNIST directory for --digits')
    command.add_argument('--digits', help='use MNIST test digits as patterns')
    command.add_argument('--out', default='fooling')
    command.set_defaults(command=cmd_attack)

    command = commands.add_parser('evaluate', help=cmd_evaluate.__doc__)
    _add_common(command)
    _add_fooling(command)
    command.add_argument('--model', required=True)
    command.add_argument('--data')
    command.add_argument('--out', default='-', help='accuracy CSV')
    command.add_argument('--report', default='-', help='attack report CSV')
    command.set_defaults(command=cmd_evaluate)

    command = commands.add_parser('detect', help=cmd_detect.__doc__)
    _add_common(command)
    _add_fooling(command)
    command.add_argument('--model', required=True)
    command.add_argument('--fthr', help='modal class frequency threshold')
    command.add_argument('--cthr', help='modal class confidence threshold')
    command.add_argument('--schedule', help='probed unit counts, e.g. 12,25')
    command.add_argument('--out', default='-')
    command.set_defaults(command=cmd_detect)

    command = commands.add_parser('sweep', help=cmd_sweep.__doc__)
    _add_common(command)
    _add_training(command)
    _add_fooling(command)
    command.add_argument('--fractions', default='0.1..1.0')
    command.add_argument('--targets', default='0..9')
    command.add_argument('--out', default='sweep')
    command.set_defaults(command=cmd_sweep)
    return parser


def main(argv=None):
    """Run the command line, return its exit code."""
    try:
        args = build_parser().parse_args(argv)
    except ConfigError as error:
        sys.stderr.write('foobar-lab: usage error: %s\n' % error)
        return EXIT_ERROR
    except SystemExit as exit_:
        return exit_.code or EXIT_OK
    level = (logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)]
    logging.basicConfig(level=level,
                        format='%(levelname)s %(name)s: %(message)s')
    try:
        return args.command(args)
    except (FooBarError, IOError, OSError) as error:
        sys.stderr.write('foobar-lab: error: %s\n' % error)
        return EXIT_ERROR


if __name__ == '__main__':
    sys.exit(main())
