"""Means, variances, and the quadrature covariance extracted from tomogram rows.

The covariance at angle theta uses the three-angle identity

    cov(theta) = Var(theta + pi/4) - Var(theta)/2 - Var(theta + pi/2)/2,

which follows from Var((q'+p')/sqrt(2)) = (Var q' + Var p')/2 + Cov(q', p').
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .errors import TailMass, TomocheckError
from .grids import Tomogram

VARIANCE_CLAMP = 1e-9
TAIL_LIMIT = 1e-6


@dataclass(frozen=True)
class MomentTriple:
    """Mean, raw second moment, and variance of one tomogram row."""

    theta: float
    mean: float
    second_moment: float
    variance: float

    def __post_init__(self):
        if self.variance < -VARIANCE_CLAMP:
            raise TomocheckError(f"variance {self.variance} below -1e-9")
        if self.variance < 0.0:
            object.__setattr__(self, "variance", 0.0)


@dataclass(frozen=True)
class RotatedCovariance:
    """Second moments of the rotated quadrature pair at angle theta.

    var_q is the variance at theta, var_p the variance at theta + pi/2, and
    cov the covariance at theta.
    """

    theta: float
    var_q: float
    var_p: float
    cov: float

    def __post_init__(self):
        for name in ("var_q", "var_p"):
            v = getattr(self, name)
            if v < -VARIANCE_CLAMP:
                raise TomocheckError(f"{name} = {v} below -1e-9")
            if v < 0.0:
                object.__setattr__(self, name, 0.0)
        bound = math.sqrt(self.var_q * self.var_p) + 1e-9
        if abs(self.cov) > bound:
            raise TomocheckError(f"|cov| = {abs(self.cov)} violates Cauchy-Schwarz bound {bound}")


def _edge_tail_second_moment(x: np.ndarray, w: np.ndarray, side: int) -> float:
    """Estimate of int x^2 w beyond one grid edge by Gaussian extrapolation.

    Fits ln w = ln A - beta x^2 over the last decade of the row (edge value
    up to 10x the edge value) and integrates the fitted tail. A non-decaying
    edge is reported as infinite so the caller raises TailMass.
    """
    if side < 0:
        x = -x[::-1]
        w = w[::-1]
    pos = np.nonzero(w > 0.0)[0]
    if pos.size == 0:
        return 0.0
    j_edge = pos[-1]
    w_edge = w[j_edge]
    if w_edge < 1e-20:
        return 0.0
    lo = j_edge
    while lo > 0 and w[lo - 1] > 0.0 and w[lo - 1] <= 10.0 * w_edge and x[lo - 1] > 0.0:
        lo -= 1
    xs = x[lo:j_edge + 1]
    ws = w[lo:j_edge + 1]
    if xs.size >= 3:
        coef = np.polyfit(xs * xs, np.log(ws), 1)
        beta, log_a = -coef[0], coef[1]
    elif xs.size == 2 and xs[1] > xs[0]:
        beta = (math.log(ws[0]) - math.log(ws[1])) / (xs[0] ** 2 - xs[1] ** 2)
        log_a = math.log(ws[1]) + beta * xs[1] ** 2
    else:
        return math.inf
    if beta <= 0.0:
        return math.inf
    a = math.exp(min(log_a, 300.0))
    xe = x[j_edge]
    rb = math.sqrt(beta)
    # int_xe^inf A e^(-beta x^2) x^2 dx
    return a * (xe * math.exp(-beta * xe * xe) / (2.0 * beta)
                + math.sqrt(math.pi) * erfc(rb * xe) / (4.0 * beta * rb))


def _tail_guard(x: np.ndarray, w: np.ndarray, theta: float):
    tail = _edge_tail_second_moment(x, w, +1) + _edge_tail_second_moment(x, w, -1)
    if tail > TAIL_LIMIT:
        raise TailMass(f"estimated x^2 mass {tail:g} outside the grid at theta={theta:g}")


def angle_moments(tom: Tomogram, theta: float, interpolate: bool = False) -> MomentTriple:
    """Mean and second moment of the row at ``theta`` by trapezoid quadrature."""
    row = tom.row_at(theta, interpolate=interpolate)
    x = tom.grid.x
    _tail_guard(x, row, theta)
    mean = float(np.trapezoid(row * x, x))
    second = float(np.trapezoid(row * x * x, x))
    return MomentTriple(theta, mean, second, second - mean * mean)


def variance_at(tom: Tomogram, theta: float, interpolate: bool = False) -> float:
    return angle_moments(tom, theta, interpolate=interpolate).variance


def rotated_covariance(tom: Tomogram, theta: float, interpolate: bool = False) -> RotatedCovariance:
    """Three-angle extraction of (Var(theta), Var(theta+pi/2), Cov(theta))."""
    vq = variance_at(tom, theta, interpolate)
    vp = variance_at(tom, theta + math.pi / 2.0, interpolate)
    vd = variance_at(tom, theta + math.pi / 4.0, interpolate)
    return RotatedCovariance(theta, vq, vp, vd - 0.5 * vq - 0.5 * vp)
