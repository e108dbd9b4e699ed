from __future__ import annotations

from typing import Optional


class BaxterError(Exception):
    """
    Base class for every numerical or configuration failure raised by ``baxtertq``.
    """


class DomainError(BaxterError, ValueError):
    """
    An argument lies outside the domain where the requested quantity is defined.
    """


class PoleProximityError(BaxterError):
    """
    A point was evaluated too close to a pole lattice. ``lattice_indices`` identifies the offending lattice
    point when it is known.
    """

    lattice_indices: Optional[tuple]

    def __init__(self, message: str, lattice_indices: Optional[tuple] = None) -> None:
        super().__init__(message)
        self.lattice_indices = lattice_indices


class NonConvergenceError(BaxterError):
    """
    An iterative procedure stopped before reaching its tolerance.
    """

    iterations: Optional[int]
    achieved: Optional[float]

    def __init__(self, message: str, iterations: Optional[int] = None, achieved: Optional[float] = None) -> None:
        super().__init__(message)
        self.iterations = iterations
        self.achieved = achieved


class ContourPinchError(BaxterError):
    """
    The integration contour is pinched: V vanishes on it, its logarithm winds, or the separation conditions
    cannot be met.
    """


class DegeneracyError(BaxterError):
    """
    Two roots coincide modulo the period lattice.
    """


class ConfigError(BaxterError, ValueError):
    """
    The run configuration is malformed. ``path`` is the JSON path of the offending entry.
    """

    path: str

    def __init__(self, message: str, path: str = "") -> None:
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class CrossCheckError(BaxterError):
    """
    Two independent evaluation routes disagree beyond tolerance.
    """
