"""Shared types: verdicts, error classes and the radial function carrier."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np


class Verdict(enum.Enum):
    HOLDS = "Holds"
    FAILS = "Fails"
    INCONCLUSIVE = "Inconclusive"

    def __str__(self):
        return self.value


class ArtifactError(Exception):
    """Base class for all errors raised by the package."""


class OutOfRange(ArtifactError):
    pass


class NotIntegrableAtZero(ArtifactError):
    pass


class UnknownCondition(ArtifactError):
    pass


class KernelUndefined(ArtifactError):
    pass


class NonPositiveSample(ArtifactError):
    pass


class Parabolic(ArtifactError):
    pass


class NoAdmissibleD(ArtifactError):
    pass


class RestrictionViolated(ArtifactError):
    pass


class NoConvergence(ArtifactError):
    def __init__(self, msg, diagnostics=None):
        super().__init__(msg)
        self.diagnostics = diagnostics or {}


class KellerOssermanViolated(ArtifactError):
    pass


class ConditionFailed(ArtifactError):
    def __init__(self, condition_id, msg=""):
        super().__init__(f"{condition_id}: {msg}" if msg else str(condition_id))
        self.condition_id = condition_id


class SearchExhausted(ArtifactError):
    def __init__(self, msg, trace=None):
        super().__init__(msg)
        self.trace = trace or []


class WeightIncompatible(ArtifactError):
    pass


class ConfigError(ArtifactError):
    def __init__(self, msg, line=None, column=None):
        loc = ""
        if line is not None:
            loc = f" (line {line}, column {column})"
        super().__init__(msg + loc)
        self.line = line
        self.column = column


@dataclass(frozen=True)
class RadialFunction:
    """Samples of a radial profile w on a grid, with first and optional second derivative.

    If `exact` is given it maps an array r to the tuple (w, w', w'') and is
    used by the residual checks instead of the grid values.
    """

    r: np.ndarray
    w: np.ndarray
    wp: np.ndarray
    wpp: Optional[np.ndarray] = None
    exact: Optional[Callable] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        for name in ("r", "w", "wp"):
            a = np.asarray(getattr(self, name), dtype=float)
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        if self.wpp is not None:
            a = np.asarray(self.wpp, dtype=float)
            a.setflags(write=False)
            object.__setattr__(self, "wpp", a)
        if not (self.r.shape == self.w.shape == self.wp.shape):
            raise ValueError("r, w, wp must share one shape")

    def __call__(self, x):
        return np.interp(x, self.r, self.w)

    def derivatives(self, x):
        """Return (w, w', w'') at x, analytic when available, else from the grid."""
        x = np.asarray(x, dtype=float)
        if self.exact is not None:
            return self.exact(x)
        w = np.interp(x, self.r, self.w)
        wp = np.interp(x, self.r, self.wp)
        if self.wpp is not None:
            wpp = np.interp(x, self.r, self.wpp)
        else:
            wpp = np.interp(x, self.r, np.gradient(self.wp, self.r, edge_order=2))
        return w, wp, wpp
