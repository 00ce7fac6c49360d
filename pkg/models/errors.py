"""
Exception hierarchy for the dimer-cff models.

Validation failures also derive from ValueError and numerical failures from
RuntimeError, so callers can catch either family.
"""

from typing import Optional


class DimerCffError(Exception):
    """Base class for all errors raised by the laboratory."""


class GraphConstructionError(DimerCffError, ValueError):
    """Invalid lattice parameters, holes, victims or dual paths."""


class UnmatchableGraphError(GraphConstructionError):
    """The graph cannot carry a perfect matching (odd or unbalanced)."""


class RectangularMatrixError(DimerCffError, ValueError):
    """Kasteleyn matrix requested for a graph with unequal color classes."""


class SingularSystemError(DimerCffError, RuntimeError):
    """The Kasteleyn matrix has no inverse."""


class InconsistencyError(DimerCffError, RuntimeError):
    """A quantity that must be consistent is not (signals a weight or sign bug)."""


class EnumerationLimitError(DimerCffError, RuntimeError):
    """Enumeration stopped after producing `count` matchings."""

    def __init__(self, message: str, count: int):
        super().__init__(message)
        self.count = count


class DisjointnessError(DimerCffError, ValueError):
    """Edges or paths that must be vertex-disjoint are not."""


class DegenerateTwistError(DimerCffError, ValueError):
    """The twist normalization E[exp(pi i m.(c - c0))] vanishes."""


class LawDefinitionError(DimerCffError, ValueError):
    """Invalid discrete Gaussian law or atom."""


class ConvergenceError(DimerCffError, RuntimeError):
    """A linear solve left a residual above tolerance."""

    def __init__(self, message: str, residual: Optional[float] = None):
        super().__init__(message)
        self.residual = residual


class PoleError(DimerCffError, ValueError):
    """Kernel evaluated at a pole."""


class OddCharacteristicError(DimerCffError, ValueError):
    """The odd characteristic (1/2, 1/2) has no Cauchy kernel."""


class ConventionMismatchError(DimerCffError, RuntimeError):
    """No theta characteristic reproduces the requested monodromy pair."""


class BoundaryPointError(DimerCffError, ValueError):
    """A point required on the cylinder boundary is not there."""


class ConfigError(DimerCffError, ValueError):
    """Invalid experiment configuration."""
