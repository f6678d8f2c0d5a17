#!/usr/bin/env python
# coding: utf8

import numpy as np
import pytest

from foobar_lab.prng import SplitMix64, mix64, GAMMA


def test_reference_outputs():
    """First outputs of splitmix64 seeded with 0."""
    generator = SplitMix64(0)
    assert generator.next_uint64() == 0xE220A8397B1DCDAF
    assert generator.next_uint64() == 0x6E789E6AA1B965F4


def test_counter_mode():
    """Output i is mix(seed + i * gamma), whatever the draw grouping."""
    bulk = SplitMix64(123456789).next_uint64s(5)
    single = SplitMix64(123456789)
    for i in range(5):
        expected = mix64(123456789 + (i + 1) * GAMMA)
        assert int(bulk[i]) == expected
        assert single.next_uint64() == expected
    assert single.position == 5


def test_uniforms_range():
    """Uniform draws lie in [0, 1) and are reproducible."""
    values = SplitMix64(9).uniforms(10000)
    assert values.min() >= 0.0 and values.max() < 1.0
    assert abs(values.mean() - 0.5) < 0.02
    np.testing.assert_array_equal(values, SplitMix64(9).uniforms(10000))
    scaled = SplitMix64(9).uniform(-2.0, 2.0, size=(100, 100))
    assert scaled.shape == (100, 100)
    np.testing.assert_allclose(scaled.ravel(), values * 4.0 - 2.0)


def test_derive_streams():
    """Derived streams differ from each other and from their parent."""
    parent = SplitMix64(42)
    first, second = parent.derive(1), parent.derive(2)
    assert first.seed != second.seed != parent.seed
    assert first.next_uint64() != second.next_uint64()
    assert parent.derive(1).seed == first.seed


def test_shuffle():
    """Fisher-Yates shuffle returns a reproducible permutation."""
    order = SplitMix64(5).shuffle(range(50))
    assert sorted(order.tolist()) == list(range(50))
    np.testing.assert_array_equal(order, SplitMix64(5).shuffle(range(50)))
    assert order.tolist() != list(range(50))
    assert SplitMix64(5).shuffle([7]).tolist() == [7]


def test_shuffle_partner_rule():
    """Position i is swapped with floor(u * (i + 1)), last position first."""
    draws = SplitMix64(77).uniforms(3)
    order = [0, 1, 2, 3]
    for step, i in enumerate((3, 2, 1)):
        j = int(np.floor(draws[step] * (i + 1)))
        order[i], order[j] = order[j], order[i]
    assert SplitMix64(77).shuffle(range(4)).tolist() == order


def test_bad_seed():
    """Seeds are unsigned 64 bits integers."""
    with pytest.raises(ValueError):
        SplitMix64(-1)
    with pytest.raises(ValueError):
        SplitMix64(2 ** 64)
