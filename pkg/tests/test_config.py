#!/usr/bin/env python
# coding: utf8

import io

import pytest

from foobar_lab.config import ExperimentConfig
from foobar_lab.errors import ConfigError


def test_defaults():
    """Defaults mirror the documented experiment."""
    config = ExperimentConfig(environ={})
    assert config.arch == 'MLP'
    assert config.seed == 42
    assert config.hidden_sizes == (128, 64, 32)
    assert config.target is None
    assert config.radius == 0.7
    assert config.weight_scales == (0.5, 1.5)
    with pytest.raises(AttributeError):
        config.unknown


def test_environment():
    """FOOBAR_DATA supplies the data directory."""
    assert ExperimentConfig(environ={'FOOBAR_DATA': '/mnist'}).data == '/mnist'


def test_read():
    """Config files hold key = value lines with comments."""
    config = ExperimentConfig(environ={})
    config.read(io.StringIO(u'# attack\narch = conv\n\ntarget = 8  # eight\n'
                            u'hidden_sizes = 16, 8\nfraction=0.2\n'))
    assert config.arch == 'CONV'
    assert config.target == 8
    assert config.hidden_sizes == (16, 8)
    assert config.fraction == 0.2


def test_errors():
    """Unknown keys and out of range values are rejected."""
    config = ExperimentConfig(environ={})
    for key, value in (('fraction', '1.3'), ('fraction', '0'), ('p', '-0.1'),
                       ('arch', 'rnn'), ('epochs', 'ten'), ('target', '10'),
                       ('fthr', '-1'), ('hidden_sizes', ''), ('seed', '-4')):
        with pytest.raises(ConfigError):
            config.set(key, value)
    with pytest.raises(ConfigError):
        config.set('colour', 'blue')
    with pytest.raises(ConfigError):
        config.read(io.StringIO(u'arch mlp\n'))


def test_precedence(tmpdir):
    """Flags override the file which overrides the defaults."""
    path = tmpdir.join('experiment.cfg')
    path.write('seed = 7\nepochs = 3\n')
    config = ExperimentConfig.load(str(path), {'epochs': '5', 'p': None},
                                   environ={})
    assert config.seed == 7
    assert config.epochs == 5
    assert config.p == 0.5


def test_dumps():
    """Dumped settings read back identically."""
    config = ExperimentConfig(environ={})
    config.set('conv_tail', '32')
    again = ExperimentConfig(environ={})
    again.read(io.StringIO(config.dumps()))
    assert again.values == config.values
