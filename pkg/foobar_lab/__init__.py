#!/usr/bin/env python
# coding: utf8

"""Fault-injection backdoor laboratory for small neural networks."""

from .dataset import Dataset, PatternImage, BatchIterator
from .network import NetworkModel, DenseLayer, ConvLayer
from .faults import FaultPlan
from .trainer import TrainConfig, TrainingLog, train, evaluate_accuracy
from .fooling import FoolingSpec, generate_fooling_set
from .simplex import ConstraintSystem, SolveOutcome, SimplexSolver, solve
from .evaluation import AttackReport, DetectionVerdict, classify

__version__ = '1.0.0'
