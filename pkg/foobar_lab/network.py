#!/usr/bin/env python
# coding: utf8

"""
Neural network core written directly on numpy: dense and strided
convolution layers, ReLU with a fault hook, softmax and cross-entropy, and
the matching backward pass.

Two architectures are supported:

- ``MLP``  : 784 -> 128 -> 64 -> 32 -> 10
- ``CONV`` : 28x28 -> conv(5 filters 3x3, stride 2, padding 1) -> 980 -> 64 -> 10

Every affine layer but the last is followed by a ReLU, the last one by a
softmax. Faulted ReLUs output 0 and let no gradient through.
"""

import numpy as np

from .errors import DimensionMismatch, ShapeMismatch

MLP = 'MLP'
CONV = 'CONV'
ARCHITECTURES = (MLP, CONV)

# Probability floor of the cross-entropy.
EPSILON = 1e-12


class DenseLayer(object):
    """Fully connected layer, ``out[j] = dot(x, w_j) + b_j``."""

    kind = 'dense'

    def __init__(self, weights, biases):
        """Default constructor.

        Parameters
        ----------
        weights:
            Matrix (out_dim, in_dim).
        biases:
            Vector (out_dim,).
        """
        self.weights = np.array(weights, dtype=np.float64, ndmin=2)
        self.biases = np.array(biases, dtype=np.float64, ndmin=1)
        if self.biases.shape != (self.weights.shape[0],):
            raise ShapeMismatch('%d biases for %d neurons'
                                % (self.biases.size, self.weights.shape[0]))

    @property
    def in_dim(self):
        return self.weights.shape[1]

    @property
    def out_dim(self):
        return self.weights.shape[0]

    def parameters(self):
        """Parameter arrays, in serialization order."""
        return [self.weights, self.biases]

    def copy(self):
        return DenseLayer(self.weights.copy(), self.biases.copy())

    def forward(self, inputs):
        """Batched forward pass of inputs (count, in_dim)."""
        return inputs.dot(self.weights.T) + self.biases

    def backward(self, inputs, grad_outputs, with_inputs=True):
        """Batched backward pass.

        Parameters
        ----------
        inputs:
            Layer inputs (count, in_dim) of the forward pass.
        grad_outputs:
            Loss gradient w.r.t. the preactivations (count, out_dim).
        with_inputs:
            Whether the input gradient is needed.

        Returns
        -------
        grad_inputs:
            Loss gradient w.r.t. the inputs, None if not requested.
        grads:
            Gradients of the parameters, summed over the batch.
        """
        grad_weights = grad_outputs.T.dot(inputs)
        grad_biases = grad_outputs.sum(axis=0)
        grad_inputs = grad_outputs.dot(self.weights) if with_inputs else None
        return grad_inputs, [grad_weights, grad_biases]


class ConvLayer(object):
    """Single channel convolution with zero padding.

    Output positions are anchored every ``stride`` rows and columns of the
    input, starting at (0, 0), the kernel being centered on the anchor.
    Outputs are ordered filter-major, then row-major positions.
    """

    kind = 'conv'

    def __init__(self, filters, filter_biases, image_shape=(28, 28),
                 stride=2, padding=1):
        """Default constructor.

        Parameters
        ----------
        filters:
            Array (filter_count, kernel, kernel).
        filter_biases:
            Vector (filter_count,).
        image_shape:
            Input (height, width).
        stride:
            Step between two anchors.
        padding:
            Zero border width.
        """
        self.filters = np.array(filters, dtype=np.float64, ndmin=3)
        self.filter_biases = np.array(filter_biases, dtype=np.float64, ndmin=1)
        if self.filters.shape[1] != self.filters.shape[2]:
            raise ShapeMismatch('Filters shall be square')
        if self.filter_biases.shape != (self.filters.shape[0],):
            raise ShapeMismatch('%d biases for %d filters'
                                % (self.filter_biases.size, self.filters.shape[0]))
        self.image_shape = tuple(image_shape)
        self.stride = stride
        self.padding = padding
        self.patch_indices = self._build_patch_indices()

    def _build_patch_indices(self):
        height, width = self.image_shape
        kernel = self.kernel_size
        rows, cols = self.output_shape
        indices = np.full((rows * cols, kernel * kernel), -1, dtype=np.int64)
        for r in range(rows):
            for c in range(cols):
                for kr in range(kernel):
                    for kc in range(kernel):
                        i = r * self.stride + kr - self.padding
                        j = c * self.stride + kc - self.padding
                        if 0 <= i < height and 0 <= j < width:
                            indices[r * cols + c, kr * kernel + kc] = i * width + j
        return indices

    @property
    def kernel_size(self):
        return self.filters.shape[1]

    @property
    def filter_count(self):
        return self.filters.shape[0]

    @property
    def output_shape(self):
        height, width = self.image_shape
        span = self.kernel_size - 2 * self.padding
        return ((height - span) // self.stride + 1,
                (width - span) // self.stride + 1)

    @property
    def positions(self):
        """Number of output positions per filter."""
        rows, cols = self.output_shape
        return rows * cols

    @property
    def in_dim(self):
        return self.image_shape[0] * self.image_shape[1]

    @property
    def out_dim(self):
        return self.filter_count * self.positions

    def parameters(self):
        return [self.filters, self.filter_biases]

    def copy(self):
        return ConvLayer(self.filters.copy(), self.filter_biases.copy(),
                         self.image_shape, self.stride, self.padding)

    def patches(self, inputs):
        """Zero padded neighborhoods (count, positions, kernel * kernel)."""
        padded = np.concatenate([inputs, np.zeros((inputs.shape[0], 1))], axis=1)
        indices = np.where(self.patch_indices < 0, inputs.shape[1],
                           self.patch_indices)
        return padded[:, indices]

    def forward(self, inputs):
        """Batched forward pass of flattened images (count, in_dim)."""
        kernels = self.filters.reshape((self.filter_count, -1))
        outputs = self.patches(inputs).dot(kernels.T) + self.filter_biases
        return outputs.transpose((0, 2, 1)).reshape((inputs.shape[0], -1))

    def backward(self, inputs, grad_outputs, with_inputs=True):
        """Batched backward pass, see ``DenseLayer.backward``."""
        count = inputs.shape[0]
        grads = grad_outputs.reshape((count, self.filter_count, self.positions))
        grad_filters = np.einsum('nfp,npk->fk', grads, self.patches(inputs))
        grad_biases = grads.sum(axis=(0, 2))
        params = [grad_filters.reshape(self.filters.shape), grad_biases]
        if not with_inputs:
            return None, params
        kernels = self.filters.reshape((self.filter_count, -1))
        grad_patches = np.einsum('nfp,fk->npk', grads, kernels)
        width = self.in_dim + 1
        indices = np.where(self.patch_indices < 0, self.in_dim, self.patch_indices)
        offsets = np.arange(count)[:, np.newaxis, np.newaxis] * width
        grad_padded = np.zeros(count * width)
        np.add.at(grad_padded, (indices[np.newaxis] + offsets).ravel(),
                  grad_patches.ravel())
        return grad_padded.reshape((count, width))[:, :-1], params


def dense_forward(x, layer):
    """Preactivations of a dense layer for a single input vector.

    Raises
    ------
    DimensionMismatch
        If ``len(x)`` differs from the layer input dimension.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (layer.in_dim,):
        raise DimensionMismatch('Input of length %d for a %d wide layer'
                                % (x.size, layer.in_dim))
    return layer.forward(x[np.newaxis])[0]


def relu(preactivation, fault_mask=None):
    """ReLU with fault hook: ``out[i] = 0`` if ``fault_mask[i]`` is set,
    ``max(0, in[i])`` otherwise.

    Raises
    ------
    DimensionMismatch
        If the mask and the input shapes differ.
    """
    preactivation = np.asarray(preactivation, dtype=np.float64)
    activation = np.where(preactivation > 0.0, preactivation, 0.0)
    if fault_mask is not None:
        fault_mask = np.asarray(fault_mask, dtype=bool)
        if fault_mask.shape != preactivation.shape[-fault_mask.ndim:]:
            raise DimensionMismatch('Fault mask of shape %s for input %s'
                                    % (fault_mask.shape, preactivation.shape))
        activation = np.where(fault_mask, 0.0, activation)
    return activation


def relu_gradient(preactivation, fault_mask=None):
    """Sub-gradient of the faulted ReLU, 0 at 0 and at faulted positions."""
    gradient = (preactivation > 0.0).astype(np.float64)
    if fault_mask is not None:
        gradient = np.where(fault_mask, 0.0, gradient)
    return gradient


def conv_forward(image, layer):
    """Preactivations of a convolution layer for a single image.

    Raises
    ------
    DimensionMismatch
        If the image does not match the layer input shape.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.size != layer.in_dim or image.ndim not in (1, 2) \
            or (image.ndim == 2 and image.shape != layer.image_shape):
        raise DimensionMismatch('Image of shape %s for a %s convolution'
                                % (image.shape, layer.image_shape))
    return layer.forward(image.reshape((1, -1)))[0]


def softmax(logits):
    """Numerically stable softmax over the last axis."""
    logits = np.asarray(logits, dtype=np.float64)
    shifted = np.exp(logits - logits.max(axis=-1, keepdims=True))
    return shifted / shifted.sum(axis=-1, keepdims=True)


def cross_entropy(probs, label):
    """Loss ``-ln(max(probs[label], 1e-12))``, batched when ``probs`` is 2D."""
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim == 1:
        return -np.log(max(probs[label], EPSILON))
    picked = probs[np.arange(probs.shape[0]), np.asarray(label)]
    return -np.log(np.maximum(picked, EPSILON))


class ForwardTrace(object):
    """Intermediate values of a forward pass, kept for backpropagation.

    ``inputs[i]`` feeds layer ``i``, ``preactivations[i]`` is its affine
    output and ``masks`` maps a hidden layer index to the fault mask applied
    to its ReLU (shape (width,) or (count, width)).
    """

    def __init__(self, inputs, preactivations, masks, probs):
        self.inputs = inputs
        self.preactivations = preactivations
        self.masks = masks
        self.probs = probs

    @property
    def activations(self):
        """Post activation values, the last one being the softmax output."""
        hidden = [relu(pre, self.masks.get(index))
                  for index, pre in enumerate(self.preactivations[:-1])]
        return hidden + [self.probs]


class NetworkModel(object):
    """Architecture tag plus the ordered list of its affine layers."""

    def __init__(self, arch, layers):
        """Default constructor.

        Parameters
        ----------
        arch:
            Either ``MLP`` or ``CONV``.
        layers:
            Ordered affine layers, only the first one may be convolutional.

        Raises
        ------
        ShapeMismatch
            If layer dimensions do not chain.
        """
        if arch not in ARCHITECTURES:
            raise ValueError('Unknown architecture %r' % arch)
        if not layers:
            raise ShapeMismatch('A model needs at least one layer')
        for previous, layer in zip(layers, layers[1:]):
            if previous.out_dim != layer.in_dim:
                raise ShapeMismatch('Layer of width %d feeds a %d wide layer'
                                    % (previous.out_dim, layer.in_dim))
        if any(layer.kind == 'conv' for layer in layers[1:]):
            raise ShapeMismatch('Only the first layer may be convolutional')
        if (arch == CONV) != (layers[0].kind == 'conv'):
            raise ShapeMismatch('%s model with a %s first layer'
                                % (arch, layers[0].kind))
        self.arch = arch
        self.layers = list(layers)

    @property
    def in_dim(self):
        return self.layers[0].in_dim

    @property
    def class_count(self):
        return self.layers[-1].out_dim

    @property
    def hidden_widths(self):
        return [layer.out_dim for layer in self.layers[:-1]]

    def parameters(self):
        """All parameter arrays, layer by layer."""
        return [param for layer in self.layers for param in layer.parameters()]

    def copy(self):
        return NetworkModel(self.arch, [layer.copy() for layer in self.layers])

    def _check_input(self, x):
        x = np.asarray(x, dtype=np.float64)
        # A single image may come flat or as a (height, width) matrix.
        if x.ndim == 1 or (x.ndim == 2 and x.shape[1] != self.in_dim
                           and x.size == self.in_dim):
            x = x.reshape((1, -1))
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ShapeMismatch('Input of shape %s for a %d wide model'
                                % (x.shape, self.in_dim))
        return x

    def forward(self, x, masks=None):
        """Batched forward pass.

        Parameters
        ----------
        x:
            Input vector or matrix (count, in_dim).
        masks:
            Optional mapping hidden layer index -> fault mask.

        Returns
        -------
        trace:
            ``ForwardTrace`` of the pass.
        """
        masks = dict(masks or {})
        for index in masks:
            if not 0 <= index < len(self.layers) - 1:
                raise ShapeMismatch('Layer %d has no ReLU to fault' % index)
        values = self._check_input(x)
        inputs, preactivations = [], []
        for index, layer in enumerate(self.layers):
            inputs.append(values)
            pre = layer.forward(values)
            preactivations.append(pre)
            if index < len(self.layers) - 1:
                values = relu(pre, masks.get(index))
        return ForwardTrace(inputs, preactivations, masks,
                            softmax(preactivations[-1]))

    def predict_proba(self, x, batch_size=1000):
        """Class probabilities of the given inputs, without any fault."""
        x = self._check_input(x)
        chunks = [self.forward(x[start:start + batch_size]).probs
                  for start in range(0, x.shape[0], batch_size)]
        return np.concatenate(chunks) if chunks else np.zeros((0, self.class_count))

    def backward(self, trace, labels):
        """Gradients of the mean cross-entropy of the traced batch.

        Parameters
        ----------
        trace:
            ``ForwardTrace`` produced by this model.
        labels:
            Class index per traced sample.

        Returns
        -------
        grads:
            One list of arrays per layer, aligned with ``parameters()``.

        Raises
        ------
        ShapeMismatch
            If the trace was not produced by this model.
        """
        labels = np.atleast_1d(np.asarray(labels, dtype=np.int64))
        if len(trace.preactivations) != len(self.layers) \
                or trace.probs.shape != (labels.size, self.class_count) \
                or trace.inputs[0].shape[1] != self.in_dim:
            raise ShapeMismatch('Trace does not match this model and labels')
        count = labels.size
        delta = trace.probs.copy()
        delta[np.arange(count), labels] -= 1.0
        delta /= count
        grads = [None] * len(self.layers)
        for index in range(len(self.layers) - 1, -1, -1):
            layer = self.layers[index]
            grad_inputs, grads[index] = layer.backward(
                trace.inputs[index], delta, with_inputs=index > 0)
            if index > 0:
                delta = grad_inputs * relu_gradient(
                    trace.preactivations[index - 1], trace.masks.get(index - 1))
        return grads


def backward(trace, label, model):
    """Per-parameter gradients of softmax cross-entropy for a traced sample
    (or batch, averaged)."""
    return model.backward(trace, label)


def glorot_uniform(generator, shape, fan_in, fan_out):
    """Uniform draws in [-sqrt(6 / (fan_in + fan_out)), +sqrt(...)]."""
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return generator.uniform(-limit, limit, size=shape)


def build_model(arch, generator, hidden_sizes=(128, 64, 32), conv_filters=5,
                conv_tail=(64,), image_shape=(28, 28), class_count=10):
    """Create a freshly initialized model.

    Weights are drawn layer after layer in row-major order, biases are 0.

    Parameters
    ----------
    arch:
        ``MLP`` or ``CONV``.
    generator:
        ``SplitMix64`` weight initialization stream.
    hidden_sizes:
        MLP hidden layer widths.
    conv_filters:
        Number of 3x3 filters of the CONV first layer.
    conv_tail:
        Dense hidden widths following the convolution.
    image_shape:
        Input (height, width).
    class_count:
        Number of output classes.
    """
    layers = []
    in_dim = image_shape[0] * image_shape[1]
    if arch == CONV:
        kernel = 3
        filters = glorot_uniform(generator, (conv_filters, kernel, kernel),
                                 kernel * kernel, conv_filters * kernel * kernel)
        conv = ConvLayer(filters, np.zeros(conv_filters), image_shape)
        layers.append(conv)
        in_dim = conv.out_dim
        hidden_sizes = conv_tail
    elif arch != MLP:
        raise ValueError('Unknown architecture %r' % arch)
    for width in list(hidden_sizes) + [class_count]:
        weights = glorot_uniform(generator, (width, in_dim), in_dim, width)
        layers.append(DenseLayer(weights, np.zeros(width)))
        in_dim = width
    return NetworkModel(arch, layers)


def permute_hidden(model, layer_index, permutation):
    """Reorder the neurons of a dense hidden layer.

    Rows of the layer and columns of the following layer are permuted
    together, which leaves the computed function unchanged.

    Parameters
    ----------
    model:
        Source model, left untouched.
    layer_index:
        Index of a dense, non final layer.
    permutation:
        New order of the neurons.

    Returns
    -------
    model:
        Permuted copy.
    """
    permuted = model.copy()
    layer = permuted.layers[layer_index]
    if layer.kind != 'dense' or layer_index >= len(permuted.layers) - 1:
        raise ValueError('Only dense hidden layers can be permuted')
    permutation = np.asarray(permutation, dtype=np.int64)
    if sorted(permutation.tolist()) != list(range(layer.out_dim)):
        raise ValueError('Invalid permutation of %d neurons' % layer.out_dim)
    layer.weights = layer.weights[permutation]
    layer.biases = layer.biases[permutation]
    following = permuted.layers[layer_index + 1]
    following.weights = following.weights[:, permutation]
    return permuted
