"""Exception hierarchy shared by every subpackage."""

from __future__ import annotations

import numpy as np


class SZGDError(Exception):
    """Base class for all errors raised by :mod:`szgd`."""


class DomainError(SZGDError, ValueError):
    """An operation was evaluated outside the set where it is defined."""


class NonFiniteError(SZGDError, FloatingPointError):
    """A function value or iterate became NaN or infinite.

    Attributes
    ----------
    probe : ndarray or None
        The point at which the non-finite value appeared.
    value : float or None
        The offending value.
    """

    def __init__(self, message: str, probe=None, value=None):
        super().__init__(message)
        self.probe = None if probe is None else np.array(probe, dtype=float)
        self.value = value


class UnsupportedObjectiveError(SZGDError, TypeError):
    """The objective lacks the structure an operation requires."""


class InnerSolverError(SZGDError, RuntimeError):
    """The scalar solver inside a proximal step did not converge.

    Attributes
    ----------
    diagnostics : dict
        Bracket end points, residuals and iteration counts.
    """

    def __init__(self, message: str, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics
