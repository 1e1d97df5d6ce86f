"""Exception hierarchy.

Every error raised deliberately by the package derives from
:class:`PatchGrowthError`. The command-line interface maps the subclasses
onto exit codes.
"""

from __future__ import annotations

import numpy as np


class PatchGrowthError(Exception):
    """Base class for all package errors."""


class ModelError(PatchGrowthError, ValueError):
    """Invalid model data (shape, sign pattern, column sums, breakpoints)."""


class ModelFileError(ModelError):
    """A model file failed to parse or validate.

    Parameters
    ----------
    message : str
        Description of the violated invariant.
    path : str, optional
        Location inside the document, e.g. ``segments[1].L[0][2]``.
    """

    def __init__(self, message: str, path: str | None = None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class HypothesisError(PatchGrowthError):
    """A precondition hypothesis (such as irreducibility of the mean migration) fails."""

    def __init__(self, message: str, hypothesis: str, report=None):
        self.hypothesis = hypothesis
        self.report = report
        super().__init__(message)


class DomainError(PatchGrowthError, ValueError):
    """Parameters fall outside the domain of a closed-form oracle."""

    def __init__(self, message: str, predicate: str | None = None):
        self.predicate = predicate
        super().__init__(message)


class NumericalError(PatchGrowthError, ArithmeticError):
    """A numerical routine could not produce a trustworthy result."""


class SpectralError(NumericalError):
    """Eigen-solver failure or invalid input to a spectral routine.

    The offending matrix is kept on the ``matrix`` attribute.
    """

    def __init__(self, message: str, matrix=None):
        self.matrix = None if matrix is None else np.array(matrix, dtype=float)
        super().__init__(message)


class IntegratorError(NumericalError):
    """Adaptive integration failed (step underflow, step budget, simplex exit)."""


class PeriodicityError(NumericalError):
    """A computed periodic orbit does not close up within tolerance."""


class CrossingLimitError(NumericalError):
    """Too many crossings of the growth rates inside one segment."""
