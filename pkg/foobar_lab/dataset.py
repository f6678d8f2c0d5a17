#!/usr/bin/env python
# coding: utf8

"""
Dataset input / output: MNIST IDX parsing, PGM pattern images and seeded
mini-batch iteration.

IDX layout (big endian):

```
images: u32 magic 0x00000803 | u32 count | u32 rows | u32 cols | u8 pixels
labels: u32 magic 0x00000801 | u32 count | u8 labels
```

PGM patterns are binary graymaps: ``P5\\n<width> <height>\\n255\\n`` followed by
the raw bytes of the image, row-major.
"""

import glob
import gzip
import io
import logging
import os.path as osp
import struct

import numpy as np

from .errors import (BadMagic, Truncated, LabelOutOfRange, UnsupportedFormat,
                     BadDimensions)
from .prng import SplitMix64

LOGGER = logging.getLogger(__name__)

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801

IMAGE_SHAPE = (28, 28)
IMAGE_SIZE = IMAGE_SHAPE[0] * IMAGE_SHAPE[1]
CLASS_COUNT = 10

# Candidate file names, per split, of the MNIST distribution.
MNIST_FILES = {
    'train': ('train-images-idx3-ubyte', 'train-labels-idx1-ubyte'),
    'test': ('t10k-images-idx3-ubyte', 't10k-labels-idx1-ubyte'),
}


def _read_all(byte_stream):
    if isinstance(byte_stream, (bytes, bytearray, memoryview)):
        return bytes(byte_stream)
    return byte_stream.read()


def parse_idx_images(byte_stream):
    """Parse an IDX image stream.

    Parameters
    ----------
    byte_stream:
        Bytes or binary file object.

    Returns
    -------
    images:
        ``uint8`` array of shape (count, rows, cols).

    Raises
    ------
    BadMagic
        If the stream is not an IDX image stream.
    Truncated
        If the stream is shorter than its header declares.
    """
    data = _read_all(byte_stream)
    if len(data) < 4:
        raise Truncated('IDX header is incomplete')
    magic, = struct.unpack('>I', data[:4])
    if magic != IMAGES_MAGIC:
        raise BadMagic('Magic number mismatch in image stream (0x%08x)' % magic)
    if len(data) < 16:
        raise Truncated('IDX image header is incomplete')
    count, rows, cols = struct.unpack('>III', data[4:16])
    expected = count * rows * cols
    if len(data) - 16 < expected:
        raise Truncated('Expected %d pixel bytes, got %d'
                        % (expected, len(data) - 16))
    pixels = np.frombuffer(data, dtype=np.uint8, count=expected, offset=16)
    return pixels.reshape((count, rows, cols)).copy()


def parse_idx_labels(byte_stream):
    """Parse an IDX label stream.

    Parameters
    ----------
    byte_stream:
        Bytes or binary file object.

    Returns
    -------
    labels:
        ``int64`` array of class indices.

    Raises
    ------
    BadMagic
        If the stream is not an IDX label stream.
    Truncated
        If the stream is shorter than its header declares.
    LabelOutOfRange
        If a label is not a digit.
    """
    data = _read_all(byte_stream)
    if len(data) < 4:
        raise Truncated('IDX header is incomplete')
    magic, = struct.unpack('>I', data[:4])
    if magic != LABELS_MAGIC:
        raise BadMagic('Magic number mismatch in label stream (0x%08x)' % magic)
    if len(data) < 8:
        raise Truncated('IDX label header is incomplete')
    count, = struct.unpack('>I', data[4:8])
    if len(data) - 8 < count:
        raise Truncated('Expected %d labels, got %d' % (count, len(data) - 8))
    labels = np.frombuffer(data, dtype=np.uint8, count=count, offset=8)
    if count and labels.max() >= CLASS_COUNT:
        raise LabelOutOfRange('Label %d is not a class index' % labels.max())
    return labels.astype(np.int64)


def normalize(raw):
    """Map bytes to gray levels in [0, 1], each pixel being ``byte / 255``."""
    return np.asarray(raw, dtype=np.float64) / 255.0


def quantize(pixels):
    """Map gray levels to bytes with round-half-up: ``floor(p * 255 + 0.5)``."""
    clipped = np.clip(np.asarray(pixels, dtype=np.float64), 0.0, 1.0)
    return np.floor(clipped * 255.0 + 0.5).astype(np.uint8)


class PatternImage(object):
    """Named gray level image used as basis for fooling images."""

    def __init__(self, pixels, name, shape=IMAGE_SHAPE):
        """Default constructor.

        Parameters
        ----------
        pixels:
            Gray levels in [0, 1], flat or 2D.
        name:
            Identifier of the pattern (file stem for icons).
        shape:
            Expected (height, width).

        Raises
        ------
        BadDimensions
            If the pixel count does not match the shape.
        ValueError
            If a pixel is outside of [0, 1].
        """
        pixels = np.asarray(pixels, dtype=np.float64).ravel()
        if pixels.size != shape[0] * shape[1]:
            raise BadDimensions('Pattern %s has %d pixels, expected %dx%d'
                                % (name, pixels.size, shape[0], shape[1]))
        if pixels.size and (pixels.min() < 0.0 or pixels.max() > 1.0):
            raise ValueError('Pattern pixels shall be within [0, 1]')
        self.pixels = pixels
        self.name = name
        self.shape = tuple(shape)

    def __repr__(self):
        return 'PatternImage(%r)' % self.name


def read_pgm(byte_stream, name='pattern', shape=IMAGE_SHAPE):
    """Read a binary PGM image.

    Parameters
    ----------
    byte_stream:
        Bytes or binary file object.
    name:
        Name given to the resulting pattern.
    shape:
        Expected (height, width), not checked if None.

    Returns
    -------
    pattern:
        The decoded ``PatternImage``.

    Raises
    ------
    UnsupportedFormat
        If the stream is not a P5 graymap with maxval 255.
    BadDimensions
        If the image size does not match, or pixel data is missing.
    """
    data = _read_all(byte_stream)
    tokens = []
    position = 0
    # Header: magic, width, height, maxval, separated by whitespace or comments.
    while len(tokens) < 4:
        while position < len(data) and data[position:position + 1].isspace():
            position += 1
        if position < len(data) and data[position:position + 1] == b'#':
            while position < len(data) and data[position:position + 1] not in b'\r\n':
                position += 1
            continue
        start = position
        while position < len(data) and not data[position:position + 1].isspace():
            position += 1
        if start == position:
            raise UnsupportedFormat('Incomplete PGM header')
        tokens.append(data[start:position])
    if tokens[0] != b'P5':
        raise UnsupportedFormat('Only binary PGM (P5) is supported, got %r'
                                % tokens[0])
    try:
        width, height, maxval = [int(token) for token in tokens[1:]]
    except ValueError:
        raise UnsupportedFormat('Malformed PGM header')
    if maxval != 255:
        raise UnsupportedFormat('Only 8 bits PGM (maxval 255) is supported')
    position += 1  # Single whitespace after maxval
    if shape is not None and (height, width) != tuple(shape):
        raise BadDimensions('PGM is %dx%d, expected %dx%d'
                            % (width, height, shape[1], shape[0]))
    raw = data[position:position + width * height]
    if len(raw) != width * height:
        raise BadDimensions('PGM holds %d pixel bytes, expected %d'
                            % (len(raw), width * height))
    pixels = normalize(np.frombuffer(raw, dtype=np.uint8))
    return PatternImage(pixels, name, shape=(height, width))


def write_pgm(image, shape=IMAGE_SHAPE):
    """Encode an image as binary PGM.

    Parameters
    ----------
    image:
        ``PatternImage`` or array of gray levels.
    shape:
        (height, width) of the encoded image.

    Returns
    -------
    data:
        PGM bytes.

    Raises
    ------
    BadDimensions
        If the pixel count does not match the shape.
    """
    pixels = getattr(image, 'pixels', image)
    pixels = np.asarray(pixels, dtype=np.float64).ravel()
    height, width = shape
    if pixels.size != width * height:
        raise BadDimensions('Cannot write %d pixels as %dx%d'
                            % (pixels.size, width, height))
    header = ('P5\n%d %d\n255\n' % (width, height)).encode('ascii')
    return header + quantize(pixels).tobytes()


def load_patterns(directory):
    """Load every ``*.pgm`` of the given directory, sorted by file name."""
    paths = sorted(glob.glob(osp.join(directory, '*.pgm')))
    patterns = []
    for path in paths:
        with io.open(path, 'rb') as stream:
            name = osp.splitext(osp.basename(path))[0]
            patterns.append(read_pgm(stream, name=name))
    LOGGER.info('Loaded %d patterns from %s', len(patterns), directory)
    return patterns


class Dataset(object):
    """Normalized images with their labels."""

    def __init__(self, images, labels, shape=IMAGE_SHAPE):
        """Default constructor.

        Parameters
        ----------
        images:
            Array (count, height * width) of gray levels in [0, 1].
        labels:
            Array (count,) of class indices.
        shape:
            Image (height, width).
        """
        images = np.asarray(images, dtype=np.float64)
        self.images = images.reshape((images.shape[0], -1))
        self.labels = np.asarray(labels, dtype=np.int64)
        self.shape = tuple(shape)
        if self.images.shape[0] != self.labels.shape[0]:
            raise BadDimensions('%d images for %d labels'
                                % (self.images.shape[0], self.labels.shape[0]))
        if self.images.shape[1] != self.shape[0] * self.shape[1]:
            raise BadDimensions('Images have %d pixels, expected %dx%d'
                                % (self.images.shape[1], self.shape[0],
                                   self.shape[1]))

    def __len__(self):
        return self.labels.shape[0]

    def subset(self, count):
        """Return a dataset made of the first ``count`` samples."""
        return Dataset(self.images[:count], self.labels[:count], self.shape)

    def class_counts(self, class_count=CLASS_COUNT):
        """Number of samples per class."""
        return np.bincount(self.labels, minlength=class_count)


def _open_idx(directory, stem):
    for name in (stem, stem + '.gz', stem.replace('-idx', '.idx'),
                 stem.replace('-idx', '.idx') + '.gz'):
        path = osp.join(directory, name)
        if osp.isfile(path):
            if path.endswith('.gz'):
                return gzip.open(path, 'rb')
            return io.open(path, 'rb')
    raise IOError('No %s file found in %s' % (stem, directory))


def load_mnist(directory, split='train'):
    """Load an MNIST split from its IDX files (optionally gzipped).

    Parameters
    ----------
    directory:
        Directory holding the MNIST files.
    split:
        Either ``'train'`` or ``'test'``.

    Returns
    -------
    dataset:
        Normalized ``Dataset``.
    """
    images_stem, labels_stem = MNIST_FILES[split]
    with _open_idx(directory, images_stem) as stream:
        raw = parse_idx_images(stream)
    with _open_idx(directory, labels_stem) as stream:
        labels = parse_idx_labels(stream)
    if raw.shape[0] != labels.shape[0]:
        raise BadDimensions('%d images for %d labels'
                            % (raw.shape[0], labels.shape[0]))
    LOGGER.info('Loaded %d %s samples from %s', raw.shape[0], split, directory)
    return Dataset(normalize(raw).reshape((raw.shape[0], -1)), labels,
                   shape=raw.shape[1:])


def digit_patterns(dataset, digits):
    """Use the first sample of each given digit as a base pattern.

    Parameters
    ----------
    dataset:
        Dataset to pick samples from.
    digits:
        Iterable of class indices.

    Returns
    -------
    patterns:
        One ``PatternImage`` per digit, named ``digit<d>``.
    """
    patterns = []
    for digit in digits:
        matches = np.flatnonzero(dataset.labels == digit)
        if matches.size == 0:
            raise ValueError('No sample of class %d in dataset' % digit)
        patterns.append(PatternImage(dataset.images[matches[0]],
                                     'digit%d' % digit, shape=dataset.shape))
    return patterns


class BatchIterator(object):
    """Seeded mini-batch iterator.

    Each epoch draws a fresh Fisher-Yates permutation from the iterator
    stream, so two iterators built with the same seed and sample count yield
    identical batch sequences. Indices inside a batch are sorted ascending
    which fixes the gradient reduction order.
    """

    def __init__(self, sample_count, batch_size, rng_seed):
        """Default constructor.

        Parameters
        ----------
        sample_count:
            Number of samples of the iterated dataset.
        batch_size:
            Positive batch size, the last batch of an epoch may be smaller.
        rng_seed:
            Seed of the permutation stream.
        """
        if batch_size < 1:
            raise ValueError('Batch size shall be positive')
        self.sample_count = sample_count
        self.batch_size = batch_size
        self.rng_seed = rng_seed
        self.epoch_permutation = None
        self._generator = SplitMix64(rng_seed)

    def epoch(self):
        """Draw the next epoch permutation and yield its batches.

        Returns
        -------
        batches:
            Generator of sorted ``int64`` index arrays.
        """
        self.epoch_permutation = self._generator.shuffle(range(self.sample_count))
        for start in range(0, self.sample_count, self.batch_size):
            yield np.sort(self.epoch_permutation[start:start + self.batch_size])
