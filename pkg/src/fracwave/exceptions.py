from __future__ import annotations

"""
Custom exceptions used within fracwave.

The goal is not to create a large exception hierarchy, but to provide
a few semantically meaningful error types that user code, tests and the
CLI can reliably catch.

Design principles
-----------------
- A single base class: `FracwaveError`.
- Specific subclasses for common failure modes:
  * `ConfigLoadError`       – invalid or unsupported config source / value
  * `ResultsIOError`        – failures when writing report bundles
  * `DomainError`           – invalid physical or discretization parameters
  * `SpectrumMismatchError` – arrays that do not fit the spectrum they claim
  * `NumericalRangeError`   – non-finite values produced by a nonlinearity
  * `StepFailure`           – blow-up guard tripped inside a single step
  * `RefinementDepthError`  – step halving exhausted for a time window
  * `InvalidWindowError`    – time window outside a trajectory's support
  * `InsufficientDataError` – fits and samples with too little data
  * `PairSelectionError`    – squeezing pairs outside the measurement protocol

Degenerate fits (non-decaying data, empty cluster windows, trajectories
that never enter a ball) are reported through flags on result objects,
not through exceptions.
"""

from typing import Optional, Tuple


class FracwaveError(Exception):
    """Base class for all fracwave-specific exceptions."""


class ConfigLoadError(FracwaveError):
    """Raised when a configuration source cannot be loaded or validated."""


class ResultsIOError(FracwaveError):
    """Raised when report directories or files cannot be created or written."""


class DomainError(FracwaveError, ValueError):
    """Raised when domain, damping, nonlinearity or scenario values are invalid."""


class SpectrumMismatchError(FracwaveError, ValueError):
    """Raised when a field, grid, state or sample array does not match its spectrum."""


class NumericalRangeError(FracwaveError, ArithmeticError):
    """Raised when a nonlinearity evaluation overflows to non-finite values."""


class StepFailure(FracwaveError):
    """
    Raised when a single time step exceeds the blow-up threshold.

    Attributes
    ----------
    window:
        Time window ``(t0, t1)`` of the failed step, if known.
    """

    def __init__(self, message: str, window: Optional[Tuple[float, float]] = None):
        super().__init__(message)
        self.window = window


class RefinementDepthError(StepFailure):
    """Raised when step halving exceeds the maximum depth (blow-up suspicion)."""


class InvalidWindowError(FracwaveError, ValueError):
    """Raised when a requested time window lies outside a trajectory."""


class InsufficientDataError(FracwaveError, ValueError):
    """Raised when a fit or sample has too few points to be meaningful."""


class PairSelectionError(FracwaveError, ValueError):
    """
    Raised when squeezing pairs do not span enough separation decades or a
    member lies outside the absorbing ball.
    """
