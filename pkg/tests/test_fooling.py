#!/usr/bin/env python
# coding: utf8

import logging

import numpy as np
import pytest

from foobar_lab.dataset import PatternImage, load_patterns
from foobar_lab.errors import UnitOutOfRange, FilterOutOfRange, BadDimensions
from foobar_lab.faults import FaultPlan
from foobar_lab.fooling import (FoolingSpec, build_mlp_constraints,
                                build_conv_constraints, build_constraints,
                                conv_rows, fooling_specs, generate_fooling_set,
                                status_csv)
from foobar_lab.network import dense_forward, conv_forward
from foobar_lab.prng import SplitMix64


def small_patterns(count, shape=(8, 8)):
    generator = SplitMix64(31)
    return [PatternImage(generator.uniform(0.0, 1.0, size=shape), 'p%d' % index,
                         shape=shape) for index in range(count)]


def test_spec_bounds():
    """Bounds are the pattern box of radius d clipped to [0, 1]."""
    pattern = PatternImage(np.array([0.0, 0.5, 0.9, 0.2]), 'tiny', shape=(2, 2))
    lower, upper = FoolingSpec((), pattern, 0.3).bounds(4)
    np.testing.assert_allclose(lower, [0.0, 0.2, 0.6, 0.0])
    np.testing.assert_allclose(upper, [0.3, 0.8, 1.0, 0.5])
    lower, upper = FoolingSpec((), pattern, 0.0).bounds(4)
    np.testing.assert_array_equal(lower, upper)
    lower, upper = FoolingSpec((), None).bounds(4)
    assert lower.tolist() == [0.0] * 4 and upper.tolist() == [1.0] * 4
    assert FoolingSpec((), None).name == 'free'
    with pytest.raises(ValueError):
        FoolingSpec((), pattern, 1.5)
    with pytest.raises(BadDimensions):
        FoolingSpec((), pattern, 0.3).bounds(5)


def test_mlp_constraints(tiny_mlp):
    """One row per faulted neuron holding its incoming weights."""
    spec = FoolingSpec((0, 2), None, total_weight=10.0)
    system = build_mlp_constraints(tiny_mlp, (0, 2), spec)
    layer = tiny_mlp.layers[0]
    np.testing.assert_array_equal(system.rows, layer.weights[[0, 2]])
    np.testing.assert_array_equal(system.constants, layer.biases[[0, 2]])
    assert system.equality_values.tolist() == [10.0]
    with pytest.raises(UnitOutOfRange):
        build_mlp_constraints(tiny_mlp, (6,), spec)
    with pytest.raises(ValueError):
        build_conv_constraints(tiny_mlp, (0,), spec)


def test_conv_rows(tiny_conv):
    """Filter rows reproduce the convolution preactivations."""
    layer = tiny_conv.layers[0]
    x = SplitMix64(41).uniforms(64)
    outputs = conv_forward(x, layer)
    for index in range(layer.filter_count):
        matrix, constants = conv_rows(layer, index)
        assert matrix.shape == (16, 64)
        np.testing.assert_allclose(matrix.dot(x) + constants,
                                   outputs[16 * index:16 * (index + 1)])


def test_conv_constraints(tiny_conv):
    """Whole filters yield one row per output position."""
    spec = FoolingSpec((), None)
    assert build_conv_constraints(tiny_conv, [1], spec).inequality_count == 16
    assert build_constraints(tiny_conv, range(32), spec).inequality_count == 32
    with pytest.raises(FilterOutOfRange):
        build_conv_constraints(tiny_conv, [2], spec)
    with pytest.raises(ValueError):
        build_mlp_constraints(tiny_conv, (0,), spec)


def test_fooling_specs():
    """Two weight targets per pattern then two pattern free images."""
    specs = fooling_specs((0,), small_patterns(5), 64, radius=0.5,
                          free_weights=(10.0, 200.0))
    assert len(specs) == 12
    assert [spec.name for spec in specs[-2:]] == ['free', 'free']
    pattern_weight = specs[0].pattern.pixels.sum()
    lower, upper = specs[0].bounds(64)
    expected = min(max(0.5 * pattern_weight, lower.sum()), upper.sum())
    assert specs[0].total_weight == pytest.approx(expected)
    # Unreachable weights are clamped to the box.
    assert specs[-1].total_weight == 64.0


def test_generate_mlp(tiny_mlp, icons_dir):
    """Every feasible image switches the faulted neurons off."""
    patterns = load_patterns(icons_dir)
    plan = FaultPlan(3, 0.5, range(3), 7)
    results = generate_fooling_set(tiny_mlp, plan, patterns)
    assert len(results) == 12
    assert any(outcome.is_feasible for _, outcome in results)
    for spec, outcome in results:
        if not outcome.is_feasible:
            continue
        pixels = outcome.pixels
        lower, upper = spec.bounds(784)
        assert (pixels >= lower).all() and (pixels <= upper).all()
        assert pixels.sum() == pytest.approx(spec.total_weight, abs=1e-7)
        assert (dense_forward(pixels, tiny_mlp.layers[0])[:3] <= 1e-9).all()
    text = status_csv(results).splitlines()
    assert text[0] == 'pattern,weight_target,status'
    assert len(text) == 13
    assert text[1].startswith('icon0,')


def test_generate_conv(tiny_conv):
    """CONV fooling images switch whole filters off."""
    plan = FaultPlan(3, 0.5, range(16), 7)
    results = generate_fooling_set(tiny_conv, plan, small_patterns(5),
                                   free_weights=(5.0, 10.0))
    for spec, outcome in results:
        if outcome.is_feasible:
            outputs = conv_forward(outcome.pixels, tiny_conv.layers[0])
            assert (outputs[:16] <= 1e-9).all()


def test_zero_radius(tiny_mlp):
    """A zero radius pins the image to its pattern."""
    pattern = PatternImage(SplitMix64(5).uniforms(784), 'noise')
    system = build_mlp_constraints(tiny_mlp, (0, 1, 2),
                                   FoolingSpec((0, 1, 2), None))
    expected = system.is_satisfied(pattern.pixels)
    results = generate_fooling_set(tiny_mlp, None, [pattern], radius=0.0,
                                   weight_scales=(1.0,), free_weights=(),
                                   units=(0, 1, 2))
    outcome = results[0][1]
    assert outcome.is_feasible == expected
    if expected:
        np.testing.assert_array_equal(outcome.pixels, pattern.pixels)


def test_pattern_count_warning(tiny_mlp, caplog):
    """Sets built on other than five patterns are flagged."""
    patterns = [PatternImage(np.full(784, 0.1), 'gray')]
    with caplog.at_level(logging.WARNING):
        results = generate_fooling_set(tiny_mlp, None, patterns,
                                       free_weights=(), units=(0,))
    assert len(results) == 2
    assert 'instead of 5' in caplog.text
    with pytest.raises(ValueError):
        generate_fooling_set(tiny_mlp, None, [], units=(0,))


def test_deeper_plan_rejected(tiny_mlp):
    """Only first layer plans have linear fooling constraints."""
    plan = FaultPlan(3, 0.5, range(2), 7, attacked_layer=1)
    with pytest.raises(UnitOutOfRange):
        generate_fooling_set(tiny_mlp, plan, small_patterns(1, (28, 28)))
