#!/usr/bin/env python
# coding: utf8

"""Whole attack loop on synthetic bar images: train with faults, solve the
fooling set, classify it."""

import logging

import numpy as np

from foobar_lab import Dataset, TrainConfig, train, evaluate_accuracy
from foobar_lab.dataset import digit_patterns
from foobar_lab.errors import NoSolvableImages
from foobar_lab.evaluation import attack_success_rate, target_hit_rate
from foobar_lab.faults import plan_for_model
from foobar_lab.fooling import generate_fooling_set
from foobar_lab.network import MLP
from foobar_lab.prng import SplitMix64
from foobar_lab.trainer import initialize_model


def bar_images(count, rng_seed, noise=0.2):
    """Class ``k`` images show a horizontal bar on rows ``2k + 4`` and
    ``2k + 5`` over uniform noise."""
    generator = SplitMix64(rng_seed)
    labels = np.arange(count) % 10
    images = generator.uniform(0.0, noise, size=(count, 28, 28))
    for index, label in enumerate(labels):
        images[index, 2 * label + 4:2 * label + 6, 4:24] = 1.0
    return Dataset(images.reshape((count, -1)), labels)


def run(test=False, target=3, fraction=0.5):
    """Train a clean and an attacked toy MLP and attack the latter.

    Returns
    -------
    patterns:
        Base patterns of the fooling set.
    results:
        (``FoolingSpec``, ``SolveOutcome``) pairs of the attacked model.
    report:
        ``AttackReport`` of the attacked model, None if nothing was solvable.
    """
    samples, epochs = (200, 2) if test else (2000, 5)
    train_set = bar_images(samples, 1)
    test_set = bar_images(samples // 4, 2)
    config = TrainConfig(epochs=epochs, batch_size=32, learning_rate=0.1,
                         rng_seed=5, hidden_sizes=(32, 16))
    clean, _ = train(config, train_set, test_set, MLP)
    config.fault_plan = plan_for_model(initialize_model(config, MLP, (28, 28)),
                                       target, fraction, 1.0, 11)
    attacked, _ = train(config, train_set, test_set, MLP)
    patterns = digit_patterns(test_set, [0, 1, 2, 5, 9])
    results = generate_fooling_set(attacked, config.fault_plan, patterns,
                                   radius=0.7, free_weights=(40.0, 80.0))
    try:
        report = attack_success_rate(attacked, results, target, fraction,
                                     evaluate_accuracy(attacked, test_set)[0])
    except NoSolvableImages:
        report = None
    print('Clean accuracy:', evaluate_accuracy(clean, test_set)[0])
    print('Attack:', report)
    print('Clean model hit rate:', target_hit_rate(clean, results, target))
    return patterns, results, report


def main(test=False):
    """ Main program.

    :param test: Indicate function is being tested
    :type test: bool
    :return: None
    """
    logging.basicConfig(level=logging.INFO)
    run(test)


if __name__ == '__main__':
    main()
