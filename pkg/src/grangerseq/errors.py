"""Exception types raised by grangerseq."""

from __future__ import annotations


class GrangerSeqError(Exception):
    """Base class for all package errors."""


class ModelError(GrangerSeqError, ValueError):
    """Invalid or unstable VAR model parameters."""


class NumericalError(GrangerSeqError, ArithmeticError):
    """A linear system could not be solved reliably."""


class EstimationError(NumericalError):
    """Sample covariance is singular or too ill-conditioned (insufficient excitation)."""


class ConfigError(GrangerSeqError, ValueError):
    """Invalid detector or experiment configuration."""


class DetectorStateError(GrangerSeqError, RuntimeError):
    """The sequential detector reached an inconsistent internal state."""


class ParseError(GrangerSeqError, ValueError):
    """Malformed sample or configuration file."""

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)
