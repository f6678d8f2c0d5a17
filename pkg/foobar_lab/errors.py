#!/usr/bin/env python
# coding: utf8

"""
Exceptions raised by the laboratory. Every input error is a ``ValueError``
so that callers may catch the broad family as well as the precise kind.
"""


class FooBarError(ValueError):
    """Base class of all laboratory errors."""


class BadMagic(FooBarError):
    """IDX stream does not start with the expected magic number."""


class Truncated(FooBarError):
    """Stream holds fewer bytes than its header promises."""


class LabelOutOfRange(FooBarError):
    """IDX label outside of {0..9}."""


class UnsupportedFormat(FooBarError):
    """Image stream is not a binary 8 bits PGM."""


class BadDimensions(FooBarError):
    """Image does not have the expected width and height."""


class DimensionMismatch(FooBarError):
    """Vector length does not match the layer it is fed to."""


class ShapeMismatch(DimensionMismatch):
    """Trace, parameter block or image shape does not match the model."""


class FractionOutOfRange(FooBarError):
    """Fault fraction or probability outside of its valid interval."""


class VersionMismatch(FooBarError):
    """Model file written by an unsupported format version."""


class Corrupt(FooBarError):
    """Model file checksum or structure is invalid."""


class UnitOutOfRange(FooBarError):
    """Faulted unit index outside of the attacked layer."""


class FilterOutOfRange(FooBarError):
    """Faulted filter index outside of the convolution filter family."""


class NoSolvableImages(FooBarError):
    """Attack success rate is undefined since no fooling image was found."""


class MissingFaultPlan(FooBarError):
    """Model file does not embed the fault plan required to attack it."""


class ConfigError(FooBarError):
    """Unknown configuration key or value out of range."""


class IterationLimit(FooBarError, RuntimeError):
    """Simplex pivoting exceeded its iteration budget."""


class InexactSolution(FooBarError, RuntimeError):
    """Simplex point misses a row by more than the feasibility tolerance."""
