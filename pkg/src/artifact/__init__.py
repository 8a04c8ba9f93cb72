"""Numerical toolkit for quasilinear differential inequalities on model manifolds.

Modules: nonlinearity (phi, f, l, kernels and structural conditions), ko
(Keller-Osserman verdicts), model (rotationally symmetric manifolds),
bvp (two-point problems), construct (certified supersolutions), verify
(independent residual checks and theorem clauses) and cli.
"""

from .core import (ArtifactError, ConditionFailed, ConfigError, KellerOssermanViolated, KernelUndefined,
                   NoAdmissibleD, NonPositiveSample, NoConvergence, NotIntegrableAtZero, OutOfRange, Parabolic,
                   RadialFunction, RestrictionViolated, SearchExhausted, Verdict, WeightIncompatible)

__version__ = "0.1.0"

__all__ = [
    "ArtifactError", "ConditionFailed", "ConfigError", "KellerOssermanViolated", "KernelUndefined",
    "NoAdmissibleD", "NonPositiveSample", "NoConvergence", "NotIntegrableAtZero", "OutOfRange", "Parabolic",
    "RadialFunction", "RestrictionViolated", "SearchExhausted", "Verdict", "WeightIncompatible", "__version__",
]
