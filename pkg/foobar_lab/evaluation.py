#!/usr/bin/env python
# coding: utf8

"""
Attack evaluation (success rate, confidence, stealthiness) and the probing
countermeasure: fooling sets are generated against a suspect model assuming
an increasing prefix of its first layer was faulted, and the model is flagged
when the fooling images land on one class with high confidence.
"""

import csv
import io
import logging

import numpy as np

from .errors import NoSolvableImages
from .faults import select_faulted_units
from .fooling import generate_fooling_set, DEFAULT_RADIUS
from .network import MLP

LOGGER = logging.getLogger(__name__)

REPORT_FIELDS = ('target', 'fraction', 'units', 'solvable', 'successes', 'asr',
                 'mean_conf', 'clean_acc')
DETECTION_FIELDS = ('k', 'modal_class', 'frequency', 'mean_conf', 'flagged')

DEFAULT_FREQUENCY_THRESHOLD = 0.6
DEFAULT_CONFIDENCE_THRESHOLD = 0.5


def _number(value):
    if value is None:
        return ''
    return repr(float(value))


def csv_text(fields, rows):
    """CSV text of a header and rows."""
    stream = io.StringIO()
    writer = csv.writer(stream, lineterminator='\n')
    writer.writerow(fields)
    writer.writerows(rows)
    return stream.getvalue()


def classify(model, image):
    """Predicted class and its probability, ties going to the lowest class.

    Raises
    ------
    ShapeMismatch
        If the image does not fit the model input.
    """
    probs = model.predict_proba(image)[0]
    label = int(np.argmax(probs))
    return label, float(probs[label])


class AttackReport(object):
    """Attack statistics of one backdoored model.

    ``asr`` is ``successes / solvable``, ``generated`` keeps the other
    convention (successes over every generated instance) readable.
    """

    def __init__(self, target, units, generated, solvable, successes,
                 confidences, fraction=None, clean_accuracy=None):
        self.target = target
        self.units = units
        self.generated = generated
        self.solvable = solvable
        self.successes = successes
        self.confidences = list(confidences)
        self.fraction = fraction
        self.clean_accuracy = clean_accuracy

    @property
    def attack_success_rate(self):
        if not self.solvable:
            return float('nan')
        return self.successes / float(self.solvable)

    @property
    def generated_success_rate(self):
        return self.successes / float(self.generated) if self.generated else float('nan')

    @property
    def mean_confidence(self):
        return float(np.mean(self.confidences)) if self.confidences else float('nan')

    def row(self):
        """Values in ``REPORT_FIELDS`` order."""
        return [self.target, _number(self.fraction), self.units, self.solvable,
                self.successes, _number(self.attack_success_rate),
                _number(self.mean_confidence), _number(self.clean_accuracy)]

    def __repr__(self):
        return ('AttackReport(target=%d, units=%d, %d/%d/%d, asr=%.3f, conf=%.3f)'
                % (self.target, self.units, self.successes, self.solvable,
                   self.generated, self.attack_success_rate, self.mean_confidence))


def report_csv(reports):
    """CSV text of attack reports."""
    return csv_text(REPORT_FIELDS, [report.row() for report in reports])


def feasible_predictions(model, outcomes):
    """(class, confidence) of every feasible fooling image."""
    return [classify(model, outcome.pixels) for _, outcome in outcomes
            if outcome.is_feasible]


def attack_success_rate(model, outcomes, target, fraction=None,
                        clean_accuracy=None):
    """Fraction of feasible fooling images classified as the target class.

    Parameters
    ----------
    model:
        Backdoored model.
    outcomes:
        Result of ``generate_fooling_set`` on that model.
    target:
        Target class of the backdoor.
    fraction:
        Faulted fraction, reported as is.
    clean_accuracy:
        Test accuracy of the model, reported as is.

    Returns
    -------
    report:
        ``AttackReport``, confidence averaged over successes only.

    Raises
    ------
    NoSolvableImages
        If no fooling image was found.
    """
    predictions = feasible_predictions(model, outcomes)
    units = len(outcomes[0][0].faulted_units) if outcomes else 0
    if not predictions:
        raise NoSolvableImages('None of the %d fooling instances is solvable'
                               % len(outcomes))
    confidences = [confidence for label, confidence in predictions
                   if label == target]
    return AttackReport(target, units, len(outcomes), len(predictions),
                        len(confidences), confidences, fraction, clean_accuracy)


def target_hit_rate(model, outcomes, target):
    """Fraction of feasible fooling images a model assigns to ``target``,
    low on clean models when the attack is non trivial."""
    predictions = feasible_predictions(model, outcomes)
    if not predictions:
        return float('nan')
    return sum(1 for label, _ in predictions if label == target) / float(len(predictions))


def compare_accuracy(clean, attacked):
    """Stealthiness of an attack.

    Parameters
    ----------
    clean:
        (overall, per_class) accuracies of the clean model.
    attacked:
        (overall, per_class) accuracies of the attacked model.

    Returns
    -------
    overall_delta:
        Absolute overall accuracy difference.
    max_class_delta:
        Largest absolute per class difference.
    """
    deltas = np.abs(np.asarray(clean[1]) - np.asarray(attacked[1]))
    deltas = deltas[~np.isnan(deltas)]
    return (abs(clean[0] - attacked[0]),
            float(deltas.max()) if deltas.size else 0.0)


class ProbeResult(object):
    """Classification statistics of a fooling set generated for ``k`` units."""

    def __init__(self, k, modal_class, frequency, mean_confidence, solvable):
        self.k = k
        self.modal_class = modal_class
        self.frequency = frequency
        self.mean_confidence = mean_confidence
        self.solvable = solvable


class DetectionVerdict(object):
    """Outcome of the probing countermeasure."""

    def __init__(self, probes, frequency_threshold, confidence_threshold):
        self.probes = list(probes)
        self.frequency_threshold = frequency_threshold
        self.confidence_threshold = confidence_threshold

    def is_suspicious(self, probe):
        return (probe.frequency >= self.frequency_threshold
                and probe.mean_confidence >= self.confidence_threshold)

    @property
    def flagged(self):
        return any(self.is_suspicious(probe) for probe in self.probes)

    @property
    def probed_counts(self):
        return [probe.k for probe in self.probes]

    def to_csv(self):
        """CSV text ``k,modal_class,frequency,mean_conf,flagged``."""
        return csv_text(DETECTION_FIELDS, [
            [probe.k, probe.modal_class, _number(probe.frequency),
             _number(probe.mean_confidence), int(self.is_suspicious(probe))]
            for probe in self.probes])


def modal_statistics(predictions):
    """Most frequent class (lowest on ties), its frequency among the
    predictions and the mean confidence of the images assigned to it."""
    if not predictions:
        return -1, 0.0, 0.0
    labels = np.array([label for label, _ in predictions])
    confidences = np.array([confidence for _, confidence in predictions])
    modal = int(np.argmax(np.bincount(labels)))
    chosen = labels == modal
    return modal, float(chosen.mean()), float(confidences[chosen].mean())


def default_probe_schedule(model):
    """Unit counts to probe: 10% steps of an MLP first layer, whole filters
    of a CONV one."""
    layer = model.layers[0]
    if model.arch == MLP:
        return [len(select_faulted_units(layer.out_dim, step / 10.0, MLP))
                for step in range(1, 11)]
    return [layer.positions * count for count in range(1, layer.filter_count + 1)]


def detect_backdoor(model, probe_schedule, patterns,
                    frequency_threshold=DEFAULT_FREQUENCY_THRESHOLD,
                    confidence_threshold=DEFAULT_CONFIDENCE_THRESHOLD,
                    radius=DEFAULT_RADIUS, solver=None):
    """Probe a model for a fault fooling backdoor.

    Parameters
    ----------
    model:
        Suspect model.
    probe_schedule:
        Prefix sizes ``k`` of the first layer to assume faulted.
    patterns:
        Base patterns of the probing fooling sets.
    frequency_threshold:
        Minimum modal class frequency of a suspicious probe.
    confidence_threshold:
        Minimum modal class mean confidence of a suspicious probe.
    radius:
        Neighborhood radius of the fooling images.
    solver:
        ``SimplexSolver`` to use.

    Returns
    -------
    verdict:
        ``DetectionVerdict``, flagged if any probe is suspicious.
    """
    if not 0.0 <= frequency_threshold <= 1.0 or not 0.0 <= confidence_threshold <= 1.0:
        raise ValueError('Detection thresholds shall be within [0, 1]')
    probes = []
    for k in probe_schedule:
        results = generate_fooling_set(model, None, patterns, radius=radius,
                                       units=range(k), solver=solver)
        predictions = feasible_predictions(model, results)
        modal, frequency, confidence = modal_statistics(predictions)
        LOGGER.info('Probe k=%d: class %d, frequency %.2f, confidence %.3f',
                    k, modal, frequency, confidence)
        probes.append(ProbeResult(k, modal, frequency, confidence,
                                  len(predictions)))
    verdict = DetectionVerdict(probes, frequency_threshold, confidence_threshold)
    if verdict.flagged:
        LOGGER.warning('Model flagged as backdoored')
    return verdict
