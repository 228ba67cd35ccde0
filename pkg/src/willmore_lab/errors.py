"""Exception types raised across the package."""

from __future__ import annotations


class WillmoreLabError(Exception):
    """Base class for all package errors."""


class InvalidInputError(WillmoreLabError, ValueError):
    pass


class PoleError(InvalidInputError):
    """Stereographic projection evaluated at its own pole."""


class SelfIntersectionError(InvalidInputError):
    pass


class UnderdeterminedFitError(WillmoreLabError):
    pass


class DegenerateImageError(WillmoreLabError):
    pass


class AmbiguousCenterError(InvalidInputError):
    pass


class OutOfTubeError(WillmoreLabError):
    pass


class InconsistentCurvatureError(WillmoreLabError):
    pass


class OptimizerStallError(WillmoreLabError):
    """Line search could not decrease the energy.

    The partial trajectory is kept on ``self.trajectory``.
    """

    def __init__(self, message: str, trajectory=None, surface=None):
        super().__init__(message)
        self.trajectory = trajectory if trajectory is not None else []
        self.surface = surface
