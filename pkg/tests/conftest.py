#!/usr/bin/env python
# coding: utf8

import gzip
import os.path as osp
import struct

import numpy as np
import pytest

from foobar_lab.dataset import write_pgm, PatternImage
from foobar_lab.examples.toy_attack import bar_images
from foobar_lab.network import build_model, MLP, CONV
from foobar_lab.prng import SplitMix64


def idx_images(raw):
    """IDX bytes of a (count, rows, cols) uint8 array."""
    raw = np.asarray(raw, dtype=np.uint8)
    return struct.pack('>IIII', 0x803, *raw.shape) + raw.tobytes()


def idx_labels(labels):
    """IDX bytes of a label vector."""
    labels = np.asarray(labels, dtype=np.uint8)
    return struct.pack('>II', 0x801, labels.size) + labels.tobytes()


@pytest.fixture
def tiny_mlp():
    """784 -> 6 -> 5 -> 10 MLP with random weights and biases."""
    generator = SplitMix64(3)
    model = build_model(MLP, generator, hidden_sizes=(6, 5))
    for layer in model.layers:
        layer.biases += generator.uniform(-0.1, 0.1, size=layer.biases.shape)
    return model


@pytest.fixture
def tiny_conv():
    """8x8 input, 2 filters, 8 tail neurons."""
    generator = SplitMix64(4)
    model = build_model(CONV, generator, conv_filters=2, conv_tail=(8,),
                        image_shape=(8, 8))
    model.layers[0].filter_biases += generator.uniform(-0.1, 0.1, size=2)
    return model


@pytest.fixture
def mnist_dir(tmpdir):
    """Directory of MNIST-like bar images, gzipped test split."""
    train_set = bar_images(300, 1)
    test_set = bar_images(100, 2)
    directory = str(tmpdir.mkdir('mnist'))
    for prefix, dataset, opener in (('train', train_set, open),
                                    ('t10k', test_set, gzip.open)):
        raw = np.floor(dataset.images * 255.0 + 0.5).reshape((-1, 28, 28))
        suffix = '.gz' if opener is gzip.open else ''
        with opener(osp.join(directory, '%s-images-idx3-ubyte%s' % (prefix, suffix)), 'wb') as stream:
            stream.write(idx_images(raw))
        with opener(osp.join(directory, '%s-labels-idx1-ubyte%s' % (prefix, suffix)), 'wb') as stream:
            stream.write(idx_labels(dataset.labels))
    return directory


@pytest.fixture
def icons_dir(tmpdir):
    """Five 28x28 PGM icons: squares of growing size."""
    directory = tmpdir.mkdir('icons')
    for index in range(5):
        pixels = np.zeros((28, 28))
        size = 4 + 3 * index
        pixels[14 - size // 2:14 + size // 2, 14 - size // 2:14 + size // 2] = 0.8
        directory.join('icon%d.pgm' % index).write_binary(
            write_pgm(PatternImage(pixels, 'icon%d' % index)))
    return str(directory)
