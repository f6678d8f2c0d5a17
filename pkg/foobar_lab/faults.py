#!/usr/bin/env python
# coding: utf8

"""
Training-time ReLU fault model: selected ReLUs of the attacked layer are
forced to output 0 whenever a chosen sample of the target class is fed
forward (and backward) during training.
"""

import math

import numpy as np

from .errors import FractionOutOfRange, UnitOutOfRange
from .network import MLP, CONV
from .prng import SplitMix64


def select_faulted_units(layer_width, fraction, arch, filter_count=5):
    """Indices of the ReLUs to fault for the given fraction of a layer.

    MLP layers fault the prefix of ``floor(fraction * width)`` neurons.
    CONV layers fault whole filters, the first ``round(fraction * filters)``
    ones (round half up), each filter covering ``width / filters`` positions.

    Parameters
    ----------
    layer_width:
        Number of ReLUs of the attacked layer.
    fraction:
        Fraction in (0, 1].
    arch:
        ``MLP`` or ``CONV``.
    filter_count:
        Number of filters of a CONV layer.

    Returns
    -------
    units:
        Ordered tuple of faulted indices.

    Raises
    ------
    FractionOutOfRange
        If the fraction is not in (0, 1].
    """
    if not 0.0 < fraction <= 1.0:
        raise FractionOutOfRange('Fault fraction %r not in (0, 1]' % fraction)
    if arch == MLP:
        count = int(math.floor(fraction * layer_width + 1e-9))
    elif arch == CONV:
        if layer_width % filter_count:
            raise ValueError('%d ReLUs cannot be split in %d filters'
                             % (layer_width, filter_count))
        filters = int(math.floor(fraction * filter_count + 0.5))
        count = filters * (layer_width // filter_count)
    else:
        raise ValueError('Unknown architecture %r' % arch)
    return tuple(range(count))


class FaultPlan(object):
    """Immutable attack configuration.

    Faults fire only for samples of ``target_class``, each such sample being
    drawn once for all with probability ``sample_fault_probability`` from a
    stream keyed by ``rng_seed`` and the sample index.
    """

    def __init__(self, target_class, sample_fault_probability, faulted_units,
                 rng_seed, attacked_layer=0):
        """Default constructor.

        Parameters
        ----------
        target_class:
            Class ``c`` the backdoor favors.
        sample_fault_probability:
            Probability ``p`` in [0, 1] of faulting a target class sample.
        faulted_units:
            Ordered ReLU indices of the attacked layer.
        rng_seed:
            Seed of the per sample fault decisions.
        attacked_layer:
            Index of the attacked hidden layer, 0 being the first one.

        Raises
        ------
        FractionOutOfRange
            If the probability is not in [0, 1].
        UnitOutOfRange
            If a unit index is negative or duplicated.
        """
        if not 0.0 <= sample_fault_probability <= 1.0:
            raise FractionOutOfRange('Fault probability %r not in [0, 1]'
                                     % sample_fault_probability)
        units = tuple(int(unit) for unit in faulted_units)
        if len(set(units)) != len(units) or any(unit < 0 for unit in units):
            raise UnitOutOfRange('Faulted units shall be distinct indices')
        if attacked_layer < 0:
            raise ValueError('Attacked layer index shall be non negative')
        self._target_class = int(target_class)
        self._probability = float(sample_fault_probability)
        self._units = units
        self._seed = int(rng_seed)
        self._layer = int(attacked_layer)

    target_class = property(lambda self: self._target_class)
    sample_fault_probability = property(lambda self: self._probability)
    faulted_units = property(lambda self: self._units)
    rng_seed = property(lambda self: self._seed)
    attacked_layer = property(lambda self: self._layer)

    @property
    def is_prefix(self):
        """True if the faulted units are ``0..k-1`` in order."""
        return self._units == tuple(range(len(self._units)))

    def __eq__(self, other):
        return isinstance(other, FaultPlan) and self._key() == other._key()

    def __ne__(self, other):
        return not self == other

    def __hash__(self):
        return hash(self._key())

    def _key(self):
        return (self._target_class, self._probability, self._units,
                self._seed, self._layer)

    def __repr__(self):
        return ('FaultPlan(c=%d, p=%r, units=%d, seed=%d, layer=%d)'
                % (self._target_class, self._probability, len(self._units),
                   self._seed, self._layer))

    def check_model(self, model):
        """Validate the plan against the attacked layer of a model.

        Raises
        ------
        UnitOutOfRange
            If the layer does not exist, a unit exceeds its width, or the
            units break the prefix / whole filter shape of the architecture.
        """
        widths = model.hidden_widths
        if self._layer >= len(widths):
            raise UnitOutOfRange('Model has no hidden layer %d' % self._layer)
        width = widths[self._layer]
        if any(unit >= width for unit in self._units):
            raise UnitOutOfRange('Faulted unit beyond layer width %d' % width)
        layer = model.layers[self._layer]
        if layer.kind == 'conv':
            positions = layer.positions
            blocks = set(unit // positions for unit in self._units)
            expected = set(block * positions + offset for block in blocks
                           for offset in range(positions))
            if expected != set(self._units):
                raise UnitOutOfRange('CONV faults shall cover whole filters')
        elif model.arch == MLP and not self.is_prefix:
            raise UnitOutOfRange('MLP faults shall be a prefix of the layer')

    def faulted_filters(self, positions):
        """Filter indices covered by the faulted units of a CONV layer."""
        return sorted(set(unit // positions for unit in self._units))


def should_fault_sample(label, plan, sample_id):
    """Whether the fault fires for a training sample.

    The decision is false outside of the target class, otherwise it is the
    Bernoulli draw ``u < p`` where ``u`` is output ``sample_id + 1`` of the
    plan stream; it is therefore stable across epochs.
    """
    if label != plan.target_class:
        return False
    generator = SplitMix64(plan.rng_seed)
    generator.position = sample_id
    return bool(generator.uniforms(1)[0] < plan.sample_fault_probability)


def fault_decisions(labels, plan):
    """Vectorized ``should_fault_sample`` over a whole training set."""
    labels = np.asarray(labels)
    draws = SplitMix64(plan.rng_seed).uniforms(labels.size)
    return (labels == plan.target_class) & (draws < plan.sample_fault_probability)


def fault_mask(plan, fire, layer_width):
    """Boolean mask set exactly at the faulted units when ``fire``.

    ``fire`` may be a single flag or an array of per sample flags, in which
    case a (count, layer_width) mask is returned.
    """
    units = np.asarray(plan.faulted_units, dtype=np.int64)
    if units.size and units.max() >= layer_width:
        raise UnitOutOfRange('Faulted unit beyond layer width %d' % layer_width)
    support = np.zeros(layer_width, dtype=bool)
    support[units] = True
    fire = np.asarray(fire, dtype=bool)
    if fire.ndim == 0:
        return support if fire else np.zeros(layer_width, dtype=bool)
    return fire[:, np.newaxis] & support[np.newaxis, :]


def plan_for_model(model, target_class, fraction, sample_fault_probability,
                   rng_seed, attacked_layer=0):
    """Fault plan attacking ``fraction`` of a hidden layer of ``model``.

    A convolution layer is attacked by whole filters, a dense one by prefix.
    """
    widths = model.hidden_widths
    if not 0 <= attacked_layer < len(widths):
        raise UnitOutOfRange('Model has no hidden layer %d' % attacked_layer)
    layer = model.layers[attacked_layer]
    if layer.kind == 'conv':
        units = select_faulted_units(layer.out_dim, fraction, CONV,
                                     layer.filter_count)
    else:
        units = select_faulted_units(layer.out_dim, fraction, MLP)
    return FaultPlan(target_class, sample_fault_probability, units, rng_seed,
                     attacked_layer)
