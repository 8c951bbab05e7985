"""Qubit portraits of probability distributions and the CHSH Bell analyzer.

A portrait coarse-grains a distribution into two outcomes through a kernel
pair K_+(X), K_-(X) with K_+ + K_- = 1. The canonical dichotomic choice is
the sign kernel with threshold c (K_+ = 1 for X >= c), which makes the joint
two-mode portrait a genuine two-outcome measurement per mode and the Bell
number a bona fide CHSH expression. Smooth kernels with values in [0, 1] are
supported but off by default.

Gaussian sign-kernel joint portraits use the bivariate-normal orthant
probability; for standardized thresholds (h, k) and correlation rho,

    P(Z1 >= h, Z2 >= k) = Phi(-h) Phi(-k)
        + (1/2pi) int_0^{asin rho} exp(-(h^2 + k^2 - 2 h k sin u) / (2 cos^2 u)) du,

which reduces to 1/4 + asin(rho)/(2pi) at h = k = 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.special import ndtr

from .errors import (
    DimensionMismatch,
    NonFactorizedKernel,
    NotStochastic,
    TomocheckError,
)
from .grids import Tomogram
from .tomography import AnalyticGaussianTwoMode, GriddedProductMixture, TwoModeTomogram

PROB_TOL = 1e-9
BELL_CLASSICAL_BOUND = 2.0
BELL_VERDICT_TOL = 1e-6


class PortraitKernel:
    """Kernel pair mapping outcomes to [0, 1]; k_minus = 1 - k_plus."""

    name = "kernel"

    def k_plus(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def k_minus(self, x: np.ndarray) -> np.ndarray:
        return 1.0 - self.k_plus(x)


@dataclass(frozen=True)
class SignKernel(PortraitKernel):
    """Dichotomic threshold kernel: K_+ = 1 for X >= threshold, else 0."""

    threshold: float = 0.0
    name: str = field(init=False, default="sign")

    def k_plus(self, x):
        return (np.asarray(x, dtype=float) >= self.threshold).astype(float)


class FunctionKernel(PortraitKernel):
    """Smooth kernel wrapping a callable with values in [0, 1]."""

    def __init__(self, fn: Callable, name: str = "smooth"):
        self._fn = fn
        self.name = name

    def k_plus(self, x):
        vals = np.asarray(self._fn(np.asarray(x, dtype=float)), dtype=float)
        if vals.min(initial=0.0) < -1e-12 or vals.max(initial=0.0) > 1.0 + 1e-12:
            raise TomocheckError("kernel values must lie in [0, 1]")
        return np.clip(vals, 0.0, 1.0)


@dataclass(frozen=True)
class QubitDistribution:
    """Two-outcome distribution (p_plus, p_minus)."""

    p_plus: float
    p_minus: float

    def __post_init__(self):
        for name, p in (("p_plus", self.p_plus), ("p_minus", self.p_minus)):
            if p < -PROB_TOL or p > 1.0 + PROB_TOL:
                raise TomocheckError(f"{name} = {p} outside [0, 1]")
            object.__setattr__(self, name, min(max(p, 0.0), 1.0))
        if abs(self.p_plus + self.p_minus - 1.0) > PROB_TOL:
            raise TomocheckError(f"portrait sums to {self.p_plus + self.p_minus}, expected 1")


@dataclass(frozen=True)
class JointPortrait:
    """Four-outcome joint portrait at angles (theta1, theta2)."""

    theta1: float
    theta2: float
    p_pp: float
    p_pm: float
    p_mp: float
    p_mm: float

    def __post_init__(self):
        total = 0.0
        for name in ("p_pp", "p_pm", "p_mp", "p_mm"):
            p = getattr(self, name)
            if p < -PROB_TOL or p > 1.0 + PROB_TOL:
                raise TomocheckError(f"{name} = {p} outside [0, 1]")
            object.__setattr__(self, name, min(max(p, 0.0), 1.0))
            total += getattr(self, name)
        if abs(total - 1.0) > PROB_TOL:
            raise TomocheckError(f"joint portrait sums to {total}, expected 1")

    def marginal_mode1(self) -> QubitDistribution:
        return QubitDistribution(self.p_pp + self.p_pm, self.p_mp + self.p_mm)

    def marginal_mode2(self) -> QubitDistribution:
        return QubitDistribution(self.p_pp + self.p_mp, self.p_pm + self.p_mm)


def portrait_discrete(P, M) -> QubitDistribution:
    """Qubit portrait of a discrete distribution through a 2 x N stochastic map."""
    P = np.asarray(P, dtype=float)
    M = np.asarray(M, dtype=float)
    if P.ndim != 1 or M.ndim != 2 or M.shape[0] != 2:
        raise DimensionMismatch(f"need P of shape (N,) and M of shape (2, N), got {P.shape} and {M.shape}")
    if M.shape[1] != P.size:
        raise DimensionMismatch(f"M has {M.shape[1]} columns for a length-{P.size} distribution")
    if P.min(initial=0.0) < -PROB_TOL or abs(P.sum() - 1.0) > PROB_TOL:
        raise NotStochastic(f"P must be nonnegative and sum to 1, got sum {P.sum()!r}")
    col_sums = M.sum(axis=0)
    if M.min(initial=0.0) < -PROB_TOL or np.any(np.abs(col_sums - 1.0) > PROB_TOL):
        raise NotStochastic("each column of M must be nonnegative and sum to 1")
    out = M @ P
    return QubitDistribution(float(out[0]), float(out[1]))


def _integral_above(x: np.ndarray, w: np.ndarray, c: float) -> float:
    """Exact integral of the piecewise-linear row above threshold c."""
    if c <= x[0]:
        return float(np.trapezoid(w, x))
    if c >= x[-1]:
        return 0.0
    i = int(np.searchsorted(x, c, side="right")) - 1
    h = x[i + 1] - x[i]
    wc = w[i] + (w[i + 1] - w[i]) * (c - x[i]) / h
    part = 0.5 * (wc + w[i + 1]) * (x[i + 1] - c)
    rest = float(np.trapezoid(w[i + 1:], x[i + 1:]))
    return part + rest


def portrait_continuous(tom: Tomogram, kernel: PortraitKernel, theta: float,
                        interpolate: bool = False) -> QubitDistribution:
    """p_m(theta) = int K_m(X) w(X, theta) dX.

    Sign kernels integrate the piecewise-linear row exactly, splitting the
    threshold cell; smooth kernels use the trapezoid rule.
    """
    row = tom.row_at(theta, interpolate=interpolate)
    x = tom.grid.x
    total = float(np.trapezoid(row, x))
    if isinstance(kernel, SignKernel):
        above = _integral_above(x, row, kernel.threshold)
    else:
        above = float(np.trapezoid(kernel.k_plus(x) * row, x))
    p_plus = above / total
    return QubitDistribution(p_plus, 1.0 - p_plus)


# ---------------------------------------------------------------------------
# Bivariate-normal orthants
# ---------------------------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(64)


def bvn_upper(h: float, k: float, rho: float) -> float:
    """P(Z1 >= h, Z2 >= k) for standard bivariate normal with correlation rho."""
    rho = min(max(rho, -1.0), 1.0)
    if rho == 1.0:
        return float(ndtr(-max(h, k)))
    if rho == -1.0:
        return float(max(0.0, ndtr(-k) - ndtr(h)))
    base = float(ndtr(-h) * ndtr(-k))
    if rho == 0.0:
        return base
    a = math.asin(rho)
    u = 0.5 * a * (_GL_NODES + 1.0)
    cos2 = np.cos(u) ** 2
    integrand = np.exp(-(h * h + k * k - 2.0 * h * k * np.sin(u)) / (2.0 * cos2))
    corr = 0.5 * a * float(np.dot(_GL_WEIGHTS, integrand)) / (2.0 * math.pi)
    return base + corr


_GH_NODES, _GH_WEIGHTS = np.polynomial.hermite.hermgauss(64)


def _gaussian_smooth_joint(mean, cov, k1: PortraitKernel, k2: PortraitKernel):
    # E[g(X)] = (1/pi) sum_ij w_i w_j g(mean + sqrt(2) L z_ij), L = chol(cov)
    L = np.linalg.cholesky(np.asarray(cov, dtype=float))
    z1, z2 = np.meshgrid(_GH_NODES, _GH_NODES, indexing="ij")
    pts = math.sqrt(2.0) * np.tensordot(L, np.array([z1.ravel(), z2.ravel()]), axes=1)
    x1 = mean[0] + pts[0]
    x2 = mean[1] + pts[1]
    w2d = np.outer(_GH_WEIGHTS, _GH_WEIGHTS).ravel() / math.pi
    a1 = k1.k_plus(x1)
    a2 = k2.k_plus(x2)
    p_pp = float(np.dot(w2d, a1 * a2))
    p_pm = float(np.dot(w2d, a1 * (1.0 - a2)))
    p_mp = float(np.dot(w2d, (1.0 - a1) * a2))
    p_mm = float(np.dot(w2d, (1.0 - a1) * (1.0 - a2)))
    return p_pp, p_pm, p_mp, p_mm


def _check_kernels(kernels) -> Tuple[PortraitKernel, PortraitKernel]:
    if isinstance(kernels, PortraitKernel) or not isinstance(kernels, (tuple, list)) \
            or len(kernels) != 2:
        raise NonFactorizedKernel("two-mode portraits need a factorized (kernel1, kernel2) pair")
    k1, k2 = kernels
    if not isinstance(k1, PortraitKernel) or not isinstance(k2, PortraitKernel):
        raise NonFactorizedKernel("both entries must be single-mode portrait kernels")
    return k1, k2


def joint_portrait(tm: TwoModeTomogram, kernels, theta1: float, theta2: float,
                   interpolate: bool = False) -> JointPortrait:
    """p(m1, m2, theta1, theta2) for a factorized kernel pair."""
    k1, k2 = _check_kernels(kernels)
    if isinstance(tm, AnalyticGaussianTwoMode):
        mean = np.asarray(tm.mean(theta1, theta2), dtype=float)
        cov = np.asarray(tm.cov(theta1, theta2), dtype=float)
        if isinstance(k1, SignKernel) and isinstance(k2, SignKernel):
            s1 = math.sqrt(cov[0, 0])
            s2 = math.sqrt(cov[1, 1])
            h = (k1.threshold - mean[0]) / s1
            k = (k2.threshold - mean[1]) / s2
            rho = cov[0, 1] / (s1 * s2)
            if abs(h) < 1e-14 and abs(k) < 1e-14:
                p_pp = 0.25 + math.asin(min(max(rho, -1.0), 1.0)) / (2.0 * math.pi)
            else:
                p_pp = bvn_upper(h, k, rho)
            p1 = float(ndtr(-h))
            p2 = float(ndtr(-k))
            p_pm = p1 - p_pp
            p_mp = p2 - p_pp
            p_mm = 1.0 - p1 - p2 + p_pp
        else:
            p_pp, p_pm, p_mp, p_mm = _gaussian_smooth_joint(mean, cov, k1, k2)
        return JointPortrait(theta1, theta2, p_pp, p_pm, p_mp, p_mm)
    if isinstance(tm, GriddedProductMixture):
        p_pp = p_pm = p_mp = p_mm = 0.0
        for w, t1, t2 in tm.components:
            q1 = portrait_continuous(t1, k1, theta1, interpolate=interpolate)
            q2 = portrait_continuous(t2, k2, theta2, interpolate=interpolate)
            p_pp += w * q1.p_plus * q2.p_plus
            p_pm += w * q1.p_plus * q2.p_minus
            p_mp += w * q1.p_minus * q2.p_plus
            p_mm += w * q1.p_minus * q2.p_minus
        return JointPortrait(theta1, theta2, p_pp, p_pm, p_mp, p_mm)
    raise TomocheckError(f"unsupported two-mode tomogram {type(tm).__name__}")


def correlation(jp: JointPortrait) -> float:
    """E = p_pp - p_pm - p_mp + p_mm, the signed four-term combination."""
    return jp.p_pp - jp.p_pm - jp.p_mp + jp.p_mm


# ---------------------------------------------------------------------------
# Bell number
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SearchConfig:
    """Deterministic CHSH angle search: coarse grid then coordinate descent."""

    grid_points: int = 16
    full_circle: bool = False
    tol: float = 1e-6
    min_step: float = 1e-7
    max_rounds: int = 200


@dataclass(frozen=True)
class BellResult:
    """Maximized CHSH combination and the angles achieving it."""

    B: float
    angles: tuple
    correlations: dict
    verdict: str

    def to_dict(self) -> dict:
        return {
            "B": float(self.B),
            "angles": [float(a) for a in self.angles],
            "correlations": {k: float(v) for k, v in self.correlations.items()},
            "verdict": self.verdict,
        }


def _chsh(e12: float, e13: float, e42: float, e43: float) -> float:
    return abs(e12 + e13 + e42 - e43)


def bell_number(tm: TwoModeTomogram, kernels=None,
                search: SearchConfig = SearchConfig()) -> BellResult:
    """max |E(t1,t2) + E(t1,t3) + E(t4,t2) - E(t4,t3)| over four angles.

    Coarse grid over [0, pi)^4 by default (opt-in [0, 2pi) sweep), followed
    by coordinate descent with shrinking step; ties at the grid stage break
    to the lexicographically smallest quadruple. Verdict "violation" iff
    B > 2 + 1e-6.
    """
    if kernels is None:
        kernels = (SignKernel(0.0), SignKernel(0.0))
    k1, k2 = _check_kernels(kernels)
    domain = 2.0 * math.pi if search.full_circle else math.pi

    cache = {}

    def E(a: float, b: float) -> float:
        key = (round(a, 12), round(b, 12))
        if key not in cache:
            cache[key] = correlation(joint_portrait(tm, (k1, k2), key[0], key[1],
                                                    interpolate=True))
        return cache[key]

    P = search.grid_points
    grid = np.arange(P) * (domain / P)
    Eg = np.array([[E(a, b) for b in grid] for a in grid])

    # axes: (i1, j2, j3, i4)
    comb = (Eg[:, :, None, None]                      # E(t1, t2)
            + Eg[:, None, :, None]                    # E(t1, t3)
            + Eg.T[None, :, None, :]                  # E(t4, t2) -> Eg[i4, j2]
            - Eg.T[None, None, :, :])                 # E(t4, t3) -> Eg[i4, j3]
    Bgrid = np.abs(comb)
    flat = int(np.argmax(Bgrid))
    i1, j2, j3, i4 = np.unravel_index(flat, Bgrid.shape)
    angles = [grid[i1], grid[j2], grid[j3], grid[i4]]
    best = float(Bgrid[i1, j2, j3, i4])

    def B_of(a) -> float:
        return _chsh(E(a[0], a[1]), E(a[0], a[2]), E(a[3], a[1]), E(a[3], a[2]))

    hi = domain - 1e-12
    step = (domain / P) / 2.0
    rounds = 0
    while step > search.min_step and rounds < search.max_rounds:
        improved = True
        while improved and rounds < search.max_rounds:
            improved = False
            rounds += 1
            for axis in range(4):
                for delta in (step, -step):
                    cand = list(angles)
                    if search.full_circle:
                        cand[axis] = (cand[axis] + delta) % domain
                    else:
                        cand[axis] = min(max(cand[axis] + delta, 0.0), hi)
                    val = B_of(cand)
                    if val > best + 1e-15:
                        best = val
                        angles = cand
                        improved = True
        step *= 0.5

    e12 = E(angles[0], angles[1])
    e13 = E(angles[0], angles[2])
    e42 = E(angles[3], angles[1])
    e43 = E(angles[3], angles[2])
    verdict = "violation" if best > BELL_CLASSICAL_BOUND + BELL_VERDICT_TOL else "no_violation"
    return BellResult(best, tuple(angles),
                      {"E12": e12, "E13": e13, "E42": e42, "E43": e43}, verdict)
