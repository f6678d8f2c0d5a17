#!/usr/bin/env python
# coding: utf8

"""
Fooling input generation. The faulted ReLUs of a backdoored model output 0
for every input whose preactivation is non positive, so a fooling image is
any point of the linear system

```
for every faulted unit j:   i . w_j + b_j <= 0
for every pixel k:          max(x_k - d, 0) <= i_k <= min(x_k + d, 1)
optionally:                 sum(i) = W
```

where ``x`` is the base pattern (if any), ``d`` the neighborhood radius and
``W`` the total image weight. Only the weights of the faulted units are
consumed.
"""

import csv
import io
import logging

import numpy as np

from .errors import UnitOutOfRange, FilterOutOfRange, BadDimensions
from .network import MLP, CONV
from .simplex import ConstraintSystem, SimplexSolver

LOGGER = logging.getLogger(__name__)

DEFAULT_RADIUS = 0.7
# Total weight targets, relative to the pattern weight and in pixel sum units
# for the pattern free images.
WEIGHT_SCALES = (0.5, 1.5)
FREE_WEIGHTS = (40.0, 80.0)

STATUS_FIELDS = ('pattern', 'weight_target', 'status')


class FoolingSpec(object):
    """Description of one fooling image to look for."""

    def __init__(self, faulted_units, pattern=None,
                 neighborhood_radius=DEFAULT_RADIUS, total_weight=None):
        """Default constructor.

        Parameters
        ----------
        faulted_units:
            Indices of the faulted ReLUs of the first layer.
        pattern:
            Optional ``PatternImage`` the result shall resemble.
        neighborhood_radius:
            Pixel-wise radius ``d`` around the pattern, 0 pins the pattern.
        total_weight:
            Optional target of the pixel sum.
        """
        if pattern is not None and not 0.0 <= neighborhood_radius <= 1.0:
            raise ValueError('Neighborhood radius shall be within [0, 1]')
        self.faulted_units = tuple(faulted_units)
        self.pattern = pattern
        self.neighborhood_radius = float(neighborhood_radius)
        self.total_weight = total_weight

    @property
    def name(self):
        return self.pattern.name if self.pattern is not None else 'free'

    def bounds(self, size):
        """Pixel box ``[max(x - d, 0), min(x + d, 1)]``, [0, 1] without pattern."""
        if self.pattern is None:
            return np.zeros(size), np.ones(size)
        if self.pattern.pixels.size != size:
            raise BadDimensions('Pattern of %d pixels for a %d wide input'
                                % (self.pattern.pixels.size, size))
        pixels = self.pattern.pixels
        return (np.maximum(pixels - self.neighborhood_radius, 0.0),
                np.minimum(pixels + self.neighborhood_radius, 1.0))

    def __repr__(self):
        return 'FoolingSpec(%s, d=%r, W=%r, %d units)' % (
            self.name, self.neighborhood_radius, self.total_weight,
            len(self.faulted_units))


def _new_system(spec, size):
    lower, upper = spec.bounds(size)
    return ConstraintSystem(lower, upper)


def _add_weight(system, spec):
    if spec.total_weight is not None:
        system.add_equality(np.ones(system.size), spec.total_weight)


def build_mlp_constraints(model, faulted_units, spec):
    """Constraint system of an MLP attacked on its first hidden layer.

    Parameters
    ----------
    model:
        ``MLP`` model.
    faulted_units:
        Faulted neuron indices of the first hidden layer.
    spec:
        ``FoolingSpec`` giving bounds and weight target.

    Returns
    -------
    system:
        One row ``w_j . i + b_j <= 0`` per faulted neuron.

    Raises
    ------
    UnitOutOfRange
        If a unit is not a neuron of the first hidden layer.
    """
    if model.arch != MLP:
        raise ValueError('Expected an MLP model, got %s' % model.arch)
    layer = model.layers[0]
    units = np.asarray(list(faulted_units), dtype=np.int64)
    if units.size and (units.min() < 0 or units.max() >= layer.out_dim):
        raise UnitOutOfRange('Faulted units beyond the %d neurons of the layer'
                             % layer.out_dim)
    system = _new_system(spec, layer.in_dim)
    if units.size:
        system.add_inequalities(layer.weights[units], layer.biases[units])
    _add_weight(system, spec)
    return system


def conv_rows(layer, filter_index):
    """Dense rows of one filter: one per output position, the filter
    entries placed at the pixel indices of its zero padded neighborhood."""
    kernel = layer.filters[filter_index].ravel()
    matrix = np.zeros((layer.positions, layer.in_dim))
    positions = np.arange(layer.positions)
    for k in range(kernel.size):
        pixels = layer.patch_indices[:, k]
        inside = pixels >= 0
        matrix[positions[inside], pixels[inside]] += kernel[k]
    return matrix, np.full(layer.positions, layer.filter_biases[filter_index])


def build_conv_constraints(model, faulted_filters, spec):
    """Constraint system of a CONV model attacked on whole filters.

    Parameters
    ----------
    model:
        ``CONV`` model.
    faulted_filters:
        Indices of the faulted filters.
    spec:
        ``FoolingSpec`` giving bounds and weight target.

    Returns
    -------
    system:
        One row ``M . F + b <= 0`` per (filter, output position).

    Raises
    ------
    FilterOutOfRange
        If a filter index is not a filter of the layer.
    """
    if model.arch != CONV:
        raise ValueError('Expected a CONV model, got %s' % model.arch)
    layer = model.layers[0]
    filters = sorted(set(int(index) for index in faulted_filters))
    if filters and (filters[0] < 0 or filters[-1] >= layer.filter_count):
        raise FilterOutOfRange('Filters beyond the %d of the layer'
                               % layer.filter_count)
    system = _new_system(spec, layer.in_dim)
    for index in filters:
        system.add_inequalities(*conv_rows(layer, index))
    _add_weight(system, spec)
    return system


def build_constraints(model, faulted_units, spec):
    """Dispatch to the MLP or CONV builder given first layer unit indices."""
    if model.arch == CONV:
        positions = model.layers[0].positions
        filters = sorted(set(unit // positions for unit in faulted_units))
        return build_conv_constraints(model, filters, spec)
    return build_mlp_constraints(model, faulted_units, spec)


def _clamped(target, lower, upper, label):
    low, high = float(lower.sum()), float(upper.sum())
    if not low <= target <= high:
        LOGGER.warning('Weight target %.3f of %s clamped to [%.3f, %.3f]',
                       target, label, low, high)
    return min(max(target, low), high)


def fooling_specs(units, patterns, size, radius=DEFAULT_RADIUS,
                  weight_scales=WEIGHT_SCALES, free_weights=FREE_WEIGHTS):
    """Specs of a fooling set: per pattern one spec per weight scale, then
    one pattern free spec per free weight."""
    specs = []
    for pattern in patterns:
        for scale in weight_scales:
            spec = FoolingSpec(units, pattern, radius)
            lower, upper = spec.bounds(size)
            spec.total_weight = _clamped(scale * float(pattern.pixels.sum()),
                                         lower, upper, pattern.name)
            specs.append(spec)
    for weight in free_weights:
        spec = FoolingSpec(units, None, radius)
        spec.total_weight = _clamped(float(weight), *spec.bounds(size),
                                     label='free')
        specs.append(spec)
    return specs


def generate_fooling_set(model, fault_plan, patterns, radius=DEFAULT_RADIUS,
                         weight_scales=WEIGHT_SCALES, free_weights=FREE_WEIGHTS,
                         units=None, solver=None):
    """Solve a whole fooling set against a backdoored model.

    With the default 5 patterns this yields 12 instances: two weight targets
    per pattern plus two pattern free images.

    Parameters
    ----------
    model:
        Attacked model.
    fault_plan:
        ``FaultPlan`` it was trained with, may be None when ``units`` is given.
    patterns:
        Base ``PatternImage`` list.
    radius:
        Neighborhood radius ``d``.
    weight_scales:
        Pattern weight multipliers giving the total weight targets.
    free_weights:
        Total weight targets of the pattern free images.
    units:
        First layer units to assume faulted, defaults to the plan units.
    solver:
        ``SimplexSolver`` to use, a default one if not specified.

    Returns
    -------
    results:
        List of (``FoolingSpec``, ``SolveOutcome``), feasible or not.
    """
    if units is None:
        if fault_plan.attacked_layer != 0:
            raise UnitOutOfRange('Fooling constraints are linear only '
                                 'for faults on the first layer')
        units = fault_plan.faulted_units
    if not patterns:
        raise ValueError('At least one pattern is required')
    if len(patterns) != 5:
        LOGGER.warning('Fooling set built on %d patterns instead of 5',
                       len(patterns))
    solver = solver or SimplexSolver()
    results = []
    for spec in fooling_specs(units, patterns, model.in_dim, radius,
                              weight_scales, free_weights):
        outcome = solver.solve(build_constraints(model, units, spec))
        LOGGER.info('%s (W=%.2f): %s after %d iterations', spec.name,
                    spec.total_weight, outcome.status, outcome.iterations)
        results.append((spec, outcome))
    return results


def status_csv(results):
    """CSV text ``pattern,weight_target,status`` of a fooling set."""
    stream = io.StringIO()
    writer = csv.writer(stream, lineterminator='\n')
    writer.writerow(STATUS_FIELDS)
    for spec, outcome in results:
        weight = '' if spec.total_weight is None else repr(float(spec.total_weight))
        writer.writerow([spec.name, weight, outcome.status])
    return stream.getvalue()
