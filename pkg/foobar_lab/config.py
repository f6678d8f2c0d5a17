#!/usr/bin/env python
# coding: utf8

"""
Experiment configuration: typed ``key = value`` settings with defaults,
an optional config file and command line overrides applied in that order.

```
# attack of class 3
arch = MLP
target = 3
fraction = 0.5
hidden_sizes = 128, 64, 32
```
"""

import io
import logging
import os

from .errors import ConfigError
from .fooling import DEFAULT_RADIUS, WEIGHT_SCALES, FREE_WEIGHTS
from .network import ARCHITECTURES, MLP

LOGGER = logging.getLogger(__name__)

DATA_ENVIRONMENT = 'FOOBAR_DATA'


def _arch(value):
    value = str(value).upper()
    if value not in ARCHITECTURES:
        raise ValueError('architecture shall be one of %s' % ', '.join(ARCHITECTURES))
    return value


def _optional_int(value):
    if value is None or str(value).strip().lower() in ('', 'none'):
        return None
    return int(value)


def _floats(value):
    if isinstance(value, str):
        value = [item for item in value.split(',') if item.strip()]
    return tuple(float(item) for item in value)


def _ints(value):
    if isinstance(value, str):
        value = [item for item in value.split(',') if item.strip()]
    return tuple(int(item) for item in value)


def _within(low, high):
    return lambda value: low <= value <= high


def _positive(value):
    return value > 0


def _non_negative(value):
    return value >= 0


def _all(check):
    return lambda values: len(values) > 0 and all(check(value) for value in values)


class ExperimentConfig(object):
    """Flat experiment settings.

    Every key has a converter and a range check, unknown keys and out of
    range values raise ``ConfigError``.
    """

    # name: (converter, check or None, description)
    KEYS = {
        'arch': (_arch, None, 'network architecture'),
        'data': (str, None, 'MNIST directory'),
        'icons': (str, None, 'pattern directory'),
        'seed': (int, _within(0, 2 ** 64 - 1), 'training seed'),
        'epochs': (int, _positive, 'training epochs'),
        'batch_size': (int, _positive, 'samples per SGD step'),
        'learning_rate': (float, _positive, 'SGD step size'),
        'subset': (int, _non_negative, 'training samples kept, 0 for all'),
        'target': (_optional_int, lambda value: value is None or 0 <= value <= 9,
                   'target class'),
        'fraction': (float, lambda value: 0.0 < value <= 1.0, 'faulted fraction'),
        'p': (float, _within(0.0, 1.0), 'sample fault probability'),
        'fault_seed': (int, _within(0, 2 ** 64 - 1), 'fault decision seed'),
        'attacked_layer': (int, _non_negative, 'faulted hidden layer'),
        'radius': (float, _within(0.0, 1.0), 'neighborhood radius'),
        'weight_scales': (_floats, _all(_positive), 'pattern weight multipliers'),
        'free_weights': (_floats, _all(_non_negative), 'pattern free weights'),
        'fthr': (float, _within(0.0, 1.0), 'detection frequency threshold'),
        'cthr': (float, _within(0.0, 1.0), 'detection confidence threshold'),
        'hidden_sizes': (_ints, _all(_positive), 'MLP hidden widths'),
        'conv_filters': (int, _positive, 'CONV filter count'),
        'conv_tail': (_ints, _all(_positive), 'dense widths after the CONV'),
    }

    DEFAULTS = {
        'arch': MLP,
        'data': 'data',
        'icons': 'icons',
        'seed': 42,
        'epochs': 10,
        'batch_size': 64,
        'learning_rate': 0.05,
        'subset': 0,
        'target': None,
        'fraction': 0.5,
        'p': 0.5,
        'fault_seed': 7,
        'attacked_layer': 0,
        'radius': DEFAULT_RADIUS,
        'weight_scales': WEIGHT_SCALES,
        'free_weights': FREE_WEIGHTS,
        'fthr': 0.6,
        'cthr': 0.5,
        'hidden_sizes': (128, 64, 32),
        'conv_filters': 5,
        'conv_tail': (64,),
    }

    def __init__(self, environ=None):
        """Default constructor, ``FOOBAR_DATA`` overrides the data directory.

        Parameters
        ----------
        environ:
            Environment mapping, ``os.environ`` if not specified.
        """
        environ = os.environ if environ is None else environ
        self.values = dict(self.DEFAULTS)
        if environ.get(DATA_ENVIRONMENT):
            self.values['data'] = environ[DATA_ENVIRONMENT]

    def __getattr__(self, name):
        values = self.__dict__.get('values')
        if values is not None and name in values:
            return values[name]
        raise AttributeError(name)

    def set(self, key, value):
        """Convert, check and store one setting.

        Raises
        ------
        ConfigError
            If the key is unknown or the value invalid.
        """
        if key not in self.KEYS:
            raise ConfigError('Unknown configuration key %r' % key)
        converter, check, description = self.KEYS[key]
        try:
            converted = converter(value)
        except (TypeError, ValueError) as error:
            raise ConfigError('Invalid %s (%s): %r, %s'
                              % (key, description, value, error))
        if check is not None and not check(converted):
            raise ConfigError('%s (%s) out of range: %r'
                              % (key, description, value))
        self.values[key] = converted

    def update(self, overrides):
        """Apply a mapping of settings, ignoring None values."""
        for key, value in overrides.items():
            if value is not None:
                self.set(key, value)

    def read(self, stream):
        """Apply the ``key = value`` lines of a text stream."""
        for number, line in enumerate(stream, 1):
            line = line.split('#', 1)[0].strip()
            if not line:
                continue
            key, separator, value = line.partition('=')
            if not separator:
                raise ConfigError('Line %d is not a key = value pair' % number)
            self.set(key.strip(), value.strip())

    def read_file(self, path):
        """Apply a config file."""
        LOGGER.info('Reading configuration %s', path)
        with io.open(path, 'r', encoding='utf-8') as stream:
            self.read(stream)

    def dumps(self):
        """Config file text of the current settings."""
        lines = []
        for key in sorted(self.values):
            value = self.values[key]
            if isinstance(value, tuple):
                value = ', '.join(repr(item) for item in value)
            elif value is None:
                value = 'none'
            lines.append('%s = %s' % (key, value))
        return '\n'.join(lines) + '\n'

    @classmethod
    def load(cls, path=None, overrides=None, environ=None):
        """Settings with the defaults < file < overrides precedence."""
        config = cls(environ)
        if path:
            config.read_file(path)
        if overrides:
            config.update(overrides)
        return config
