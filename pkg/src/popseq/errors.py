"""Exception types raised across the toolkit."""

from __future__ import annotations


class PopseqError(Exception):
    """Base class for all toolkit-specific failures."""


class ParseError(PopseqError):
    """A malformed row in an event CSV; carries the 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class EmptyLogError(PopseqError):
    """The input stream contained no events."""


class SplitError(PopseqError):
    """A temporal split produced an empty train or test partition."""


class TrainingError(PopseqError):
    """Training diverged; carries the epoch where the loss went non-finite."""

    def __init__(self, epoch: int, message: str):
        super().__init__(f"epoch {epoch}: {message}")
        self.epoch = epoch


class GradientCheckError(PopseqError):
    """Analytic and finite-difference gradients disagree beyond tolerance."""


class MetricError(PopseqError):
    """A metric is undefined for the given inputs (e.g. no positive labels)."""
