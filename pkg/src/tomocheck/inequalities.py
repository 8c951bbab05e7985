"""Heisenberg, Robertson-Schroedinger, and state-extended (Trifonov) checks.

All three inequalities bound a quadratic combination of row variances and
covariances below by 1/4 in the hbar = 1 convention. The state-extended form
for a pair of tomograms,

    lhs = (V1q V2p + V2q V1p)/2 - C1 C2  >=  1/4,

reduces exactly to Robertson-Schroedinger when both tomograms coincide and is
invariant under a common rotation of the reference angle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import GridMismatch
from .grids import Tomogram
from .moments import RotatedCovariance, rotated_covariance

BOUND = 0.25
TOLERANCE = 1e-6


@dataclass(frozen=True)
class InequalityReport:
    """Outcome of one uncertainty-relation evaluation."""

    kind: str
    theta: float
    lhs: float
    bound: float
    margin: float
    passed: bool
    inputs: tuple

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "theta": float(self.theta),
            "lhs": float(self.lhs),
            "bound": float(self.bound),
            "margin": float(self.margin),
            "pass": bool(self.passed),
            "inputs": list(self.inputs),
        }


def _report(kind: str, theta: float, lhs: float, inputs, tolerance: float = TOLERANCE) -> InequalityReport:
    margin = lhs - BOUND
    return InequalityReport(kind, theta, lhs, BOUND, margin, margin >= -tolerance, tuple(inputs))


def _extended_lhs(r1: RotatedCovariance, r2: RotatedCovariance) -> float:
    return 0.5 * (r1.var_q * r2.var_p + r2.var_q * r1.var_p) - r1.cov * r2.cov


def heisenberg_check(tom: Tomogram, interpolate: bool = False) -> InequalityReport:
    """Var(0) Var(pi/2) >= 1/4 from the theta = 0 and theta = pi/2 rows."""
    from .moments import variance_at

    lhs = variance_at(tom, 0.0, interpolate) * variance_at(tom, math.pi / 2.0, interpolate)
    inputs = (f"{tom.source}@theta=0", f"{tom.source}@theta=pi/2")
    return _report("Heisenberg", 0.0, lhs, inputs)


def robertson_schrodinger_check(tom: Tomogram, theta: float = 0.0,
                                interpolate: bool = False) -> InequalityReport:
    """Var(theta) Var(theta+pi/2) - Cov(theta)^2 >= 1/4."""
    r = rotated_covariance(tom, theta, interpolate)
    lhs = _extended_lhs(r, r)
    return _report("RobertsonSchroedinger", theta, lhs, (f"{tom.source}@theta={theta:g}",))


def trifonov_check(tom1: Tomogram, tom2: Tomogram, theta: float = 0.0,
                   interpolate: bool = False) -> InequalityReport:
    """State-extended check on a pair of tomograms at reference angle theta."""
    needed = (theta, theta + math.pi / 4.0, theta + math.pi / 2.0)
    for ang in needed:
        a1 = tom1.has_theta(ang, interpolate)
        a2 = tom2.has_theta(ang, interpolate)
        if a1 != a2:
            raise GridMismatch(f"tomograms disagree on availability of theta={ang:g}")
    r1 = rotated_covariance(tom1, theta, interpolate)
    r2 = rotated_covariance(tom2, theta, interpolate)
    lhs = _extended_lhs(r1, r2)
    inputs = (f"{tom1.source}@theta={theta:g}", f"{tom2.source}@theta={theta:g}")
    return _report("Trifonov", theta, lhs, inputs)
