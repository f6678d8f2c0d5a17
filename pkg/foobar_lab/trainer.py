#!/usr/bin/env python
# coding: utf8

"""
Mini-batch SGD training with the fault engine hooked into the forward and
backward passes.
"""

import csv
import io
import logging
import math

import numpy as np
from tqdm import tqdm

from .dataset import BatchIterator
from .faults import fault_decisions, fault_mask
from .network import build_model, cross_entropy
from .prng import SplitMix64

LOGGER = logging.getLogger(__name__)

# Sub streams of the training seed.
INIT_STREAM = 1
BATCH_STREAM = 2

LOG_FIELDS = ('epoch', 'mean_loss', 'test_accuracy', 'faulted_samples')


class TrainConfig(object):
    """Hyperparameters of a training run."""

    def __init__(self,
                 epochs=10,
                 batch_size=64,
                 learning_rate=0.05,
                 rng_seed=42,
                 fault_plan=None,
                 hidden_sizes=(128, 64, 32),
                 conv_filters=5,
                 conv_tail=(64,),
                 progress=False):
        """Default constructor.

        Parameters
        ----------
        epochs:
            Number of passes over the training set (>= 1).
        batch_size:
            Samples per SGD step (>= 1).
        learning_rate:
            SGD step size (> 0).
        rng_seed:
            Seed of weight initialization and batch order.
        fault_plan:
            ``FaultPlan`` to apply, clean training if not specified.
        hidden_sizes:
            MLP hidden widths.
        conv_filters:
            Filter count of the CONV first layer.
        conv_tail:
            Dense widths after the convolution.
        progress:
            Display a progress bar per epoch.

        Raises
        ------
        ValueError
            If a hyperparameter is out of range.
        """
        if epochs < 1:
            raise ValueError('At least one epoch is required')
        if batch_size < 1:
            raise ValueError('Batch size shall be positive')
        if not learning_rate > 0:
            raise ValueError('Learning rate shall be positive')
        self.epochs = int(epochs)
        self.batch_size = int(batch_size)
        self.learning_rate = float(learning_rate)
        self.rng_seed = int(rng_seed)
        self.fault_plan = fault_plan
        self.hidden_sizes = tuple(hidden_sizes)
        self.conv_filters = int(conv_filters)
        self.conv_tail = tuple(conv_tail)
        self.progress = progress


class TrainingLog(object):
    """Per epoch training statistics."""

    def __init__(self):
        self.epochs = []
        self.mean_losses = []
        self.test_accuracies = []
        self.faulted_samples = []

    def __len__(self):
        return len(self.epochs)

    def record(self, epoch, mean_loss, test_accuracy, faulted_samples):
        """Append the statistics of an epoch."""
        self.epochs.append(epoch)
        self.mean_losses.append(mean_loss)
        self.test_accuracies.append(test_accuracy)
        self.faulted_samples.append(faulted_samples)

    def rows(self):
        return list(zip(self.epochs, self.mean_losses, self.test_accuracies,
                        self.faulted_samples))

    def to_csv(self):
        """CSV text ``epoch,mean_loss,test_accuracy,faulted_samples``."""
        stream = io.StringIO()
        writer = csv.writer(stream, lineterminator='\n')
        writer.writerow(LOG_FIELDS)
        for epoch, loss, accuracy, faulted in self.rows():
            writer.writerow([epoch, repr(loss), repr(accuracy), faulted])
        return stream.getvalue()


def evaluate_accuracy(model, dataset):
    """Fraction of correctly classified samples.

    Parameters
    ----------
    model:
        Model to evaluate.
    dataset:
        Labeled samples.

    Returns
    -------
    overall:
        Overall accuracy.
    per_class:
        Accuracy per label (nan for labels absent of the dataset).
    """
    if len(dataset) == 0:
        return float('nan'), np.full(model.class_count, np.nan)
    predictions = np.argmax(model.predict_proba(dataset.images), axis=1)
    correct = predictions == dataset.labels
    totals = np.bincount(dataset.labels, minlength=model.class_count)
    hits = np.bincount(dataset.labels, weights=correct.astype(np.float64),
                       minlength=model.class_count)
    with np.errstate(invalid='ignore', divide='ignore'):
        per_class = np.where(totals > 0, hits / np.maximum(totals, 1), np.nan)
    return float(correct.mean()), per_class


def initialize_model(config, arch, image_shape):
    """Model ``train`` starts from, before any SGD step."""
    return build_model(arch, SplitMix64(config.rng_seed).derive(INIT_STREAM),
                       hidden_sizes=config.hidden_sizes,
                       conv_filters=config.conv_filters,
                       conv_tail=config.conv_tail,
                       image_shape=image_shape)


def train(config, train_set, test_set, arch):
    """Train a model from scratch, applying the configured faults.

    Every target class sample selected by the fault plan has its fault mask
    applied in the forward and backward pass of every epoch. Parameters are
    updated with plain SGD on the batch mean gradient.

    Parameters
    ----------
    config:
        ``TrainConfig`` of the run.
    train_set:
        Training ``Dataset``.
    test_set:
        Evaluation ``Dataset`` (accuracy is nan in the log if None).
    arch:
        ``MLP`` or ``CONV``.

    Returns
    -------
    model:
        Trained ``NetworkModel``.
    log:
        ``TrainingLog`` of the run.
    """
    generator = SplitMix64(config.rng_seed)
    model = initialize_model(config, arch, train_set.shape)
    plan = config.fault_plan
    if plan is not None:
        plan.check_model(model)
        fired = fault_decisions(train_set.labels, plan)
        width = model.hidden_widths[plan.attacked_layer]
        LOGGER.info('Faulting %d units of layer %d on %d samples of class %d',
                    len(plan.faulted_units), plan.attacked_layer,
                    int(fired.sum()), plan.target_class)
    else:
        fired = np.zeros(len(train_set), dtype=bool)
    iterator = BatchIterator(len(train_set), config.batch_size,
                             generator.derive(BATCH_STREAM).seed)
    parameters = model.parameters()
    batches = int(math.ceil(len(train_set) / float(config.batch_size)))
    log = TrainingLog()
    for epoch in range(1, config.epochs + 1):
        total_loss = 0.0
        for indices in tqdm(iterator.epoch(), total=batches,
                            desc='epoch %d' % epoch, leave=False,
                            disable=not config.progress):
            masks = {}
            if plan is not None and fired[indices].any():
                masks[plan.attacked_layer] = fault_mask(plan, fired[indices],
                                                        width)
            labels = train_set.labels[indices]
            trace = model.forward(train_set.images[indices], masks)
            total_loss += float(cross_entropy(trace.probs, labels).sum())
            grads = [grad for layer_grads in model.backward(trace, labels)
                     for grad in layer_grads]
            for param, grad in zip(parameters, grads):
                param -= config.learning_rate * grad
        mean_loss = total_loss / len(train_set)
        accuracy = float('nan')
        if test_set is not None:
            accuracy = evaluate_accuracy(model, test_set)[0]
        log.record(epoch, mean_loss, accuracy, int(fired.sum()))
        LOGGER.info('Epoch %d: loss %.6f, accuracy %.4f, %d faulted samples',
                    epoch, mean_loss, accuracy, int(fired.sum()))
    return model, log
