#!/usr/bin/env python
# coding: utf8

"""Full MNIST runs, skipped unless FOOBAR_DATA holds the IDX files."""

import os

import numpy as np
import pytest

from foobar_lab.config import ExperimentConfig
from foobar_lab.cli import train_network
from foobar_lab.dataset import load_mnist, digit_patterns
from foobar_lab.evaluation import (attack_success_rate, compare_accuracy,
                                   target_hit_rate, detect_backdoor,
                                   default_probe_schedule)
from foobar_lab.fooling import generate_fooling_set
from foobar_lab.trainer import evaluate_accuracy

pytestmark = pytest.mark.skipif(not os.environ.get('FOOBAR_DATA'),
                                reason='FOOBAR_DATA is not set')

PATTERN_DIGITS = [0, 1, 2, 4, 6]


@pytest.fixture(scope='module')
def mnist():
    directory = os.environ['FOOBAR_DATA']
    return load_mnist(directory, 'train'), load_mnist(directory, 'test')


@pytest.fixture(scope='module')
def patterns(mnist):
    return digit_patterns(mnist[1], PATTERN_DIGITS)


@pytest.fixture(scope='module')
def clean_mlp(mnist):
    model, _, _ = train_network(ExperimentConfig(), *mnist)
    return model


@pytest.fixture(scope='module')
def attacked_mlp(mnist):
    """Attacked MLPs trained once per (target, fraction)."""
    models = {}

    def build(target, fraction):
        if (target, fraction) not in models:
            model, _, plan = train_network(ExperimentConfig(), mnist[0],
                                           mnist[1], target, fraction)
            models[target, fraction] = model, plan
        return models[target, fraction]
    return build


def conv_config():
    config = ExperimentConfig()
    config.set('arch', 'CONV')
    return config


def test_clean_accuracy(mnist, clean_mlp):
    """The clean MLP reaches 96% test accuracy."""
    assert evaluate_accuracy(clean_mlp, mnist[1])[0] >= 0.96


def test_clean_conv_accuracy(mnist):
    """The clean CONV model reaches 95.5% test accuracy."""
    model, _, _ = train_network(conv_config(), *mnist)
    assert evaluate_accuracy(model, mnist[1])[0] >= 0.955


@pytest.mark.parametrize('target', [3, 8])
@pytest.mark.parametrize('fraction', [0.2, 0.5, 1.0])
def test_stealthy(mnist, clean_mlp, attacked_mlp, target, fraction):
    """Faulted training keeps the test accuracy within one point."""
    model, _ = attacked_mlp(target, fraction)
    clean = evaluate_accuracy(clean_mlp, mnist[1])
    attacked = evaluate_accuracy(model, mnist[1])
    assert compare_accuracy(clean, attacked)[0] <= 0.01


@pytest.mark.parametrize('target', [3, 8])
@pytest.mark.parametrize('fraction', [0.5, 1.0])
def test_attack_success(mnist, clean_mlp, attacked_mlp, patterns, target,
                        fraction):
    """Half or more of the first layer faulted fools the model."""
    model, plan = attacked_mlp(target, fraction)
    results = generate_fooling_set(model, plan, patterns)
    report = attack_success_rate(model, results, target)
    assert report.attack_success_rate >= 0.6
    assert report.mean_confidence >= 0.8
    hits = target_hit_rate(clean_mlp, results, target)
    assert np.isnan(hits) or hits < report.attack_success_rate


@pytest.mark.parametrize('fraction, filters, asr', [(0.2, 1, 0.5),
                                                    (0.4, 2, 0.8)])
def test_conv_attack(mnist, patterns, fraction, filters, asr):
    """One or two faulted filters out of five are exploitable."""
    model, _, plan = train_network(conv_config(), mnist[0], mnist[1], 8,
                                   fraction)
    assert len(plan.faulted_units) == 196 * filters
    results = generate_fooling_set(model, plan, patterns)
    report = attack_success_rate(model, results, 8)
    assert report.attack_success_rate >= asr
    if filters == 1:
        assert report.solvable == report.generated == 12


def test_conv_filter_limit(mnist, patterns):
    """Three faulted filters out of five leave no fooling image."""
    model, _, plan = train_network(conv_config(), mnist[0], mnist[1], 8, 0.6)
    assert len(plan.faulted_units) == 588
    results = generate_fooling_set(model, plan, patterns)
    assert not any(outcome.is_feasible for _, outcome in results)


def test_clean_model_not_fooled(clean_mlp, patterns):
    """On a clean MLP no probed unit count yields confident fooling images,
    and the model is not flagged."""
    verdict = detect_backdoor(clean_mlp, default_probe_schedule(clean_mlp),
                              patterns)
    assert verdict.probed_counts == [12, 25, 38, 51, 64, 76, 89, 102, 115, 128]
    for probe in verdict.probes:
        assert probe.mean_confidence <= 0.35
    assert not verdict.flagged


def test_attacked_model_flagged(attacked_mlp, patterns):
    """Probing an attacked MLP at its faulted unit count flags it."""
    model, plan = attacked_mlp(3, 0.5)
    verdict = detect_backdoor(model, [len(plan.faulted_units)], patterns)
    assert verdict.flagged
    assert verdict.probes[0].modal_class == 3
