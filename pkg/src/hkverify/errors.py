"""Exception types shared across the package.

The CLI maps these onto stable exit codes, so keep the hierarchy flat and
the constructor signatures boring.
"""

from __future__ import annotations


class HkError(Exception):
    """Base class for all package-specific failures."""


class GardingConeError(HkError):
    """An eigenvalue tuple left the Garding cone required by an operation.

    Carries the elementary symmetric values so callers can see which
    sigma_i failed the strict positivity test.
    """

    def __init__(self, m: int, sigmas):
        self.m = m
        self.sigmas = tuple(float(s) for s in sigmas)
        self.first_failing = next(
            (i + 1 for i, s in enumerate(self.sigmas) if s <= 0.0), None
        )
        super().__init__(
            f"eigenvalue tuple is not in the order-{m} Garding cone: "
            f"sigma_{self.first_failing} = {self.sigmas[self.first_failing - 1]:.6g}"
            if self.first_failing
            else f"eigenvalue tuple is not in the order-{m} Garding cone"
        )


class DegenerateSurfaceError(HkError):
    """The discrete surface failed a pointwise well-posedness check."""

    def __init__(self, message: str, node: int | None = None):
        self.node = node
        if node is not None:
            message = f"{message} (node {node})"
        super().__init__(message)


class GenerationError(HkError):
    """A surface generator was asked for something it cannot produce."""


class RejectedShapeError(HkError):
    """A generated shape failed post-hoc validation."""

    def __init__(self, message: str, node: int | None = None):
        self.node = node
        if node is not None:
            message = f"{message} (node {node})"
        super().__init__(message)


class PreconditionError(HkError):
    """A verification check's mathematical precondition does not hold."""

    def __init__(self, message: str, check: str | None = None, node: int | None = None):
        self.check = check
        self.node = node
        detail = message
        if check is not None:
            detail = f"{check}: {detail}"
        if node is not None:
            detail = f"{detail} (node {node})"
        super().__init__(detail)


class FocalTimeError(HkError):
    """An evolution quantity was requested at or beyond a focal time."""


class FlowAssumptionError(HkError):
    """A structural assumption of the normal flow broke down numerically."""
