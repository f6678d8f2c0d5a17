#!/usr/bin/env python
# coding: utf8

import numpy as np
import pytest

from foobar_lab import Dataset
from foobar_lab.dataset import BatchIterator
from foobar_lab.errors import UnitOutOfRange
from foobar_lab.examples.toy_attack import bar_images
from foobar_lab.faults import FaultPlan, fault_decisions, fault_mask
from foobar_lab.network import MLP, CONV
from foobar_lab.prng import SplitMix64
from foobar_lab.trainer import (TrainConfig, TrainingLog, train,
                                initialize_model, evaluate_accuracy,
                                BATCH_STREAM)


def small_config(**kwargs):
    options = dict(epochs=2, batch_size=8, learning_rate=0.1, rng_seed=21,
                   hidden_sizes=(6, 5))
    options.update(kwargs)
    return TrainConfig(**options)


def assert_same_parameters(first, second):
    for a, b in zip(first.parameters(), second.parameters()):
        np.testing.assert_array_equal(a, b)


def test_config_validation():
    """Hyperparameters are range checked."""
    with pytest.raises(ValueError):
        TrainConfig(epochs=0)
    with pytest.raises(ValueError):
        TrainConfig(batch_size=0)
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=0.0)


def test_reproducible():
    """Two runs with the same seed are bit identical."""
    data = bar_images(40, 1)
    first, log = train(small_config(), data, data, MLP)
    second, again = train(small_config(), data, data, MLP)
    assert_same_parameters(first, second)
    assert log.rows() == again.rows()
    other, _ = train(small_config(rng_seed=22), data, data, MLP)
    assert not np.array_equal(first.layers[0].weights, other.layers[0].weights)


def test_zero_probability_is_clean():
    """A plan that never fires trains exactly the clean model."""
    data = bar_images(40, 1)
    clean, _ = train(small_config(), data, None, MLP)
    plan = FaultPlan(3, 0.0, range(3), 5)
    faulted, log = train(small_config(fault_plan=plan), data, None, MLP)
    assert_same_parameters(clean, faulted)
    assert log.faulted_samples == [0, 0]


def test_reference_loop():
    """Batched SGD matches a sample by sample reference implementation."""
    data = bar_images(30, 3)
    plan = FaultPlan(3, 0.7, range(3), 5)
    config = small_config(epochs=2, fault_plan=plan)
    model, _ = train(config, data, None, MLP)

    reference = initialize_model(config, MLP, data.shape)
    fired = fault_decisions(data.labels, plan)
    iterator = BatchIterator(len(data), config.batch_size,
                             SplitMix64(config.rng_seed).derive(BATCH_STREAM).seed)
    for _ in range(config.epochs):
        for batch in iterator.epoch():
            total = [np.zeros_like(param) for param in reference.parameters()]
            for index in batch:
                masks = {0: fault_mask(plan, True, 6)} if fired[index] else {}
                trace = reference.forward(data.images[index], masks)
                grads = reference.backward(trace, [data.labels[index]])
                for acc, grad in zip(total, [g for layer in grads for g in layer]):
                    acc += grad
            for param, acc in zip(reference.parameters(), total):
                param -= config.learning_rate * acc / len(batch)
    for a, b in zip(model.parameters(), reference.parameters()):
        np.testing.assert_allclose(a, b, rtol=1e-9, atol=1e-12)


def test_faulted_weights_frozen():
    """Incoming weights of units faulted on every sample never move."""
    data = bar_images(30, 4)
    data = Dataset(data.images, np.full(len(data), 3))
    plan = FaultPlan(3, 1.0, range(2), 5)
    config = small_config(fault_plan=plan)
    model, log = train(config, data, None, MLP)
    initial = initialize_model(config, MLP, data.shape)
    np.testing.assert_array_equal(model.layers[0].weights[:2],
                                  initial.layers[0].weights[:2])
    np.testing.assert_array_equal(model.layers[0].biases[:2], 0.0)
    assert not np.array_equal(model.layers[0].weights[2:],
                              initial.layers[0].weights[2:])
    assert log.faulted_samples == [30, 30]


def test_deeper_layer_faults():
    """Faults may target a later hidden layer."""
    data = bar_images(30, 4)
    data = Dataset(data.images, np.full(len(data), 3))
    plan = FaultPlan(3, 1.0, range(2), 5, attacked_layer=1)
    config = small_config(fault_plan=plan)
    model, _ = train(config, data, None, MLP)
    initial = initialize_model(config, MLP, data.shape)
    np.testing.assert_array_equal(model.layers[1].weights[:2],
                                  initial.layers[1].weights[:2])


def test_conv_training():
    """CONV models train on whole filter faults."""
    data = bar_images(20, 5)
    plan = FaultPlan(3, 1.0, range(196), 5)
    config = small_config(epochs=1, conv_filters=2, conv_tail=(4,),
                          fault_plan=plan)
    model, log = train(config, data, data, CONV)
    assert model.hidden_widths == [392, 4]
    assert len(log) == 1
    with pytest.raises(UnitOutOfRange):
        train(small_config(conv_filters=2, conv_tail=(4,),
                           fault_plan=FaultPlan(3, 1.0, range(10), 5)),
              data, None, CONV)


def test_training_log():
    """Logs hold one row per epoch and serialize to CSV."""
    data = bar_images(40, 1)
    _, log = train(small_config(epochs=3), data, data, MLP)
    assert len(log) == 3
    assert log.epochs == [1, 2, 3]
    assert all(0.0 <= accuracy <= 1.0 for accuracy in log.test_accuracies)
    text = log.to_csv().splitlines()
    assert text[0] == 'epoch,mean_loss,test_accuracy,faulted_samples'
    assert len(text) == 4
    empty = TrainingLog()
    assert empty.to_csv() == 'epoch,mean_loss,test_accuracy,faulted_samples\n'


def test_learns_bars():
    """A few epochs separate the bar classes."""
    train_set, test_set = bar_images(400, 1), bar_images(100, 2)
    model, _ = train(small_config(epochs=5, hidden_sizes=(32, 16)),
                     train_set, test_set, MLP)
    overall, per_class = evaluate_accuracy(model, test_set)
    assert overall >= 0.9
    assert per_class.shape == (10,)


def test_clean_loss_decreases():
    """Default hyperparameters lower the mean loss at each of the first
    three epochs."""
    data = bar_images(1000, 3)
    _, log = train(TrainConfig(epochs=3), data, None, MLP)
    losses = log.mean_losses
    assert len(losses) == 3
    assert losses[0] > losses[1] > losses[2]


def test_evaluate_accuracy(tiny_mlp):
    """Absent classes have nan accuracy."""
    data = Dataset(np.zeros((2, 784)), [1, 1])
    prediction = int(np.argmax(tiny_mlp.predict_proba(np.zeros(784))))
    overall, per_class = evaluate_accuracy(tiny_mlp, data)
    assert overall == (1.0 if prediction == 1 else 0.0)
    assert np.isnan(per_class[0])
    assert per_class[1] == overall
