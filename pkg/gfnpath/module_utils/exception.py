# -*- coding: utf-8 -*-

#
# Copyright (c) 2024-2026, The gfnpath developers. All rights reserved.
#
# License: Apache 2.0
#

"""Exceptions raised by the gfnpath library.

Every exception carries an ``rc`` attribute, the process exit code used by
the subcommands when the exception reaches ``GfnPathModule.fail_json()``.
"""

# Exit codes
RC_SUCCESS = 0
RC_GENERIC = 1
RC_BAD_FLAG = 2
RC_BUDGET = 3
RC_IO = 4


class GfnPathError(Exception):
    """Base class of all gfnpath errors."""

    rc = RC_GENERIC


# Geometry and tracing

class CoincidentEndpoints(GfnPathError):
    """TX and RX are closer than the coincidence threshold."""


class BudgetExceeded(GfnPathError):
    """An exhaustive enumeration would exceed the configured candidate cap."""

    rc = RC_BUDGET

    def __init__(self, count, cap):
        self.count = count
        self.cap = cap
        super(BudgetExceeded, self).__init__(
            "Enumeration of %d path candidates exceeds the budget cap of %d "
            "candidates." % (count, cap))


# Network

class ShapeMismatch(GfnPathError):
    """An input or gradient has an unexpected shape."""


class EmptyScene(GfnPathError):
    """An operation requires at least one object in the scene."""


class IndexOutOfRange(GfnPathError):
    """A path candidate refers to an object that does not exist."""


class NonFiniteFlow(GfnPathError):
    """A flow, loss or gradient became NaN, infinite or non-positive."""


# Sampling and training

class IncompleteTrajectory(GfnPathError):
    """A trajectory is missing states or contains unchosen slots."""


class PushInvalid(GfnPathError):
    """A pair pushed into the replay buffer fails revalidation."""


# Evaluation

class GridMismatch(GfnPathError):
    """Two coverage grids do not share the same cell layout."""


# File formats

class GfnPathIOError(GfnPathError):
    """Base class of file related errors."""

    rc = RC_IO


class Io(GfnPathIOError):
    """The file could not be opened, read or written."""


class ParseError(GfnPathIOError):
    """A scene file could not be parsed."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = "line %d: %s" % (line, message)
        super(ParseError, self).__init__(message)


class NonTriangleFace(ParseError):
    """A scene file contains a face that is not a triangle."""


class CheckpointError(GfnPathIOError):
    """Base class of checkpoint decoding errors."""


class BadMagic(CheckpointError):
    """The checkpoint does not start with the expected magic bytes."""


class VersionMismatch(CheckpointError):
    """The checkpoint format version is not supported."""


class CorruptTensor(CheckpointError):
    """A tensor record is truncated or inconsistent."""


# Command line

class BadFlag(GfnPathError):
    """A flag value is out of range or inconsistent with another flag."""

    rc = RC_BAD_FLAG
