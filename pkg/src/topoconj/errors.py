"""Exception hierarchy shared by every module."""

from __future__ import annotations


class ConjugacyError(Exception):
    """Base class for all errors raised by topoconj."""


class ParseError(ConjugacyError):
    def __init__(self, message: str, position: int, text: str = ""):
        self.position = position
        self.text = text
        super().__init__(f"{message} at offset {position}")


class DomainError(ConjugacyError):
    """A point lies outside the interval on which a map is defined."""


class EvaluationError(ConjugacyError):
    """Arithmetic failure while evaluating an expression (division by zero)."""


class NonMonotoneError(ConjugacyError):
    def __init__(self, message: str, pair: tuple[float, float] | None = None):
        self.pair = pair
        super().__init__(message)


class OrbitEscapeError(DomainError):
    def __init__(self, message: str, step: int):
        self.step = step
        super().__init__(message)


class GridTooCoarseError(ConjugacyError):
    """Two roots share one grid cell, so the sign scan cannot separate them."""


class UnpairedPeriodTwoError(ConjugacyError):
    def __init__(self, message: str, candidate: float):
        self.candidate = candidate
        super().__init__(message)


class HypothesisError(ConjugacyError):
    """The inputs violate the hypotheses of a conjugacy construction."""


class SignatureMismatchError(HypothesisError):
    """The fixed-point structures of f and g are not equivalent."""


class AllSamplesExcludedError(ConjugacyError):
    """Every verification sample fell inside an exclusion zone."""
