"""Optical tomograms of pure and mixed states, plus two-mode families.

A pure-state row at angle theta is the squared modulus of a chirped Fourier
integral,

    w(X, theta) = |int psi(y) exp(i y^2 / (2 tan theta) - i X y / sin theta) dy|^2
                  / (2 pi |sin theta|),

evaluated on the grid by a chirp-and-discrete-Fourier (Bluestein) scheme.
Angles are reduced so the oscillatory kernel only runs with sin >= sin(pi/4):
the unitary Fourier transform F acts as a phase-space rotation by pi/2, so

    w_psi(X, theta) = w_{F^dag psi}(X, theta + pi/2)   for theta < pi/4,
    w_psi(X, theta) = w_{F psi}(X, theta - pi/2)       for theta > 3 pi/4.

Within |sin theta| < EPS_ANGLE the exact limit branch evaluates the rotated
state profile directly (closed-form rotation for every catalog family;
|psi(+-X)|^2 for custom evaluators).

Mixed-state tomograms are convex combinations of the pure rows. Two-mode
support covers products, separable mixtures (gridded), and the two-mode
squeezed vacuum (analytic Gaussian).
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.signal import fftconvolve

from .errors import (
    GridError,
    StateSpecError,
    UnnormalizedState,
    UnsupportedTwoModeFamily,
    WeightSumMismatch,
)
from .grids import Grid, Tomogram, reduce_theta
from .states import (
    MixedState,
    Mixture,
    PureState,
    State,
    StateSpec,
    describe,
    make_state,
    rotate_spec,
    spec_from_dict,
    spec_to_dict,
)

EPS_ANGLE = 1e-3
_QUARTER = math.pi / 4.0


def worker_count() -> int:
    """Row-level parallelism cap from TOMOCHECK_THREADS (0 = auto, unset = 1)."""
    raw = os.environ.get("TOMOCHECK_THREADS")
    if raw is None or raw.strip() == "":
        return 1
    n = int(raw)
    if n == 0:
        return os.cpu_count() or 1
    if n < 0:
        raise GridError("TOMOCHECK_THREADS must be >= 0")
    return n


def _trapezoid_weights(n: int, h: float) -> np.ndarray:
    w = np.full(n, h)
    w[0] = w[-1] = 0.5 * h
    return w


def _chirped_dft(g: np.ndarray, x: np.ndarray, s: float) -> np.ndarray:
    """I_k = sum_j g_j exp(-i x_k x_j / s) for all k, via Bluestein.

    With x_k = x0 + k h the phase splits into per-index chirps and a linear
    convolution, so the full quadratic-phase sum costs three FFTs. The result
    is algebraically identical to the direct O(n^2) sum.
    """
    n = x.size
    h = x[1] - x[0]
    x0 = x[0]
    j = np.arange(n)
    quad = h * h / (2.0 * s)
    a = g * np.exp(1j * quad * j * j)
    m = np.arange(2 * n - 1)
    b = np.exp(-1j * (x0 * h * m / s + quad * m * m))
    conv = fftconvolve(a[::-1], b)
    core = conv[n - 1:3 * n - 1 - n]  # entries k + n - 1, k = 0 .. n-1
    return np.exp(-1j * x0 * x0 / s) * np.exp(1j * quad * j * j) * core


def _chirped_dft_direct(g: np.ndarray, x: np.ndarray, s: float) -> np.ndarray:
    """Reference O(n^2) evaluation of the same sum (cross-check path)."""
    kernel = np.exp(-1j * np.outer(x, x) / s)
    return kernel @ g


def _unitary_fourier(values: np.ndarray, x: np.ndarray, sign: int) -> np.ndarray:
    """(2 pi)^(-1/2) int psi(y) exp(-i sign k y) dy on the grid (sign = +-1)."""
    tw = _trapezoid_weights(x.size, x[1] - x[0])
    return _chirped_dft(values * tw, x, float(sign)) / math.sqrt(2.0 * math.pi)


class _Profile:
    """Wavefunction samples on a grid with lazily computed Fourier partners."""

    def __init__(self, state: PureState, grid: Grid):
        self.state = state
        self.grid = grid
        self.psi = state.psi(grid.x)
        self._ft = None
        self._ift = None

    @property
    def ft(self) -> np.ndarray:
        if self._ft is None:
            self._ft = _unitary_fourier(self.psi, self.grid.x, +1)
        return self._ft

    @property
    def ift(self) -> np.ndarray:
        if self._ift is None:
            self._ift = _unitary_fourier(self.psi, self.grid.x, -1)
        return self._ift


def _limit_row(state: PureState, grid: Grid, theta: float) -> np.ndarray:
    # Exact rotated profile where the spec is known; plain +-X profile otherwise.
    if state.spec is not None:
        rotated = make_state(rotate_spec(state.spec, theta))
        return np.abs(rotated.psi(grid.x)) ** 2
    amp = state.psi(grid.x)
    th, flip = reduce_theta(theta)
    near_pi = th > math.pi / 2.0
    row = np.abs(amp) ** 2
    if near_pi != flip:
        row = row[::-1]
    return row


def _reduced_base(profile: _Profile, theta: float):
    """Pick the wavefunction and effective angle with sin >= sin(pi/4)."""
    if theta < _QUARTER:
        return profile.ift, theta + math.pi / 2.0
    if theta > 3.0 * _QUARTER:
        return profile.ft, theta - math.pi / 2.0
    return profile.psi, theta


def _pure_row(profile: _Profile, theta: float, method: str = "chirp") -> np.ndarray:
    grid = profile.grid
    if abs(math.sin(theta)) < EPS_ANGLE:
        return _limit_row(profile.state, grid, theta)
    base, ang = _reduced_base(profile, theta)
    x = grid.x
    s = math.sin(ang)
    cot = math.cos(ang) / s
    g = base * np.exp(0.5j * cot * x * x) * _trapezoid_weights(x.size, grid.h)
    transform = _chirped_dft if method == "chirp" else _chirped_dft_direct
    amp = transform(g, x, s)
    return np.abs(amp) ** 2 / (2.0 * math.pi * s)


def _pure_rows(state: PureState, grid: Grid, method: str) -> np.ndarray:
    profile = _Profile(state, grid)
    thetas = grid.thetas
    workers = worker_count()
    if workers > 1 and thetas.size > 4:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda t: _pure_row(profile, t, method), thetas))
    else:
        rows = [_pure_row(profile, t, method) for t in thetas]
    return np.asarray(rows)


def optical_tomogram(state: State, grid: Optional[Grid] = None,
                     method: str = "chirp") -> Tomogram:
    """Tomogram of a catalog state on ``grid`` (auto-sized when omitted).

    Raises UnnormalizedState for an evaluator that failed its norm
    certificate and GridTooCoarse when a row misses unit mass by more than
    1e-4 before renormalization.
    """
    if grid is None:
        grid = Grid.for_states([state])
    if isinstance(state, MixedState):
        rows = np.zeros((grid.thetas.size, grid.n_x))
        for w, comp in state.components:
            rows += w * _pure_rows(comp, grid, method)
        return Tomogram(grid, rows, source=describe(state.spec))
    if not isinstance(state, PureState):
        raise StateSpecError(f"expected a state evaluator, got {type(state).__name__}")
    if state.norm_error > 1e-6:
        raise UnnormalizedState(f"state norm off by {state.norm_error:g}")
    return Tomogram(grid, _pure_rows(state, grid, method), source=describe(state.spec))


def tomogram_value(state: State, X, theta: float, grid: Optional[Grid] = None):
    """Single-point (or vector-in-X) density w(X, theta).

    Same branch logic as the gridded engine; X may be scalar or array.
    """
    if grid is None:
        grid = Grid.for_states([state])
    X_arr = np.atleast_1d(np.asarray(X, dtype=float))
    th, flip = reduce_theta(theta)
    if flip:
        X_arr = -X_arr
    if isinstance(state, MixedState):
        out = np.zeros(X_arr.shape)
        for w, comp in state.components:
            out += w * _value_pure(comp, X_arr, th, grid)
    else:
        out = _value_pure(state, X_arr, th, grid)
    return float(out[0]) if np.isscalar(X) or np.asarray(X).ndim == 0 else out


def _value_pure(state: PureState, X_arr: np.ndarray, th: float, grid: Grid) -> np.ndarray:
    if abs(math.sin(th)) < EPS_ANGLE:
        if state.spec is not None:
            rotated = make_state(rotate_spec(state.spec, th))
            return np.abs(rotated.psi(X_arr)) ** 2
        pts = -X_arr if th > math.pi / 2 else X_arr
        return np.abs(state.psi(pts)) ** 2
    profile = _Profile(state, grid)
    base, ang = _reduced_base(profile, th)
    x = grid.x
    s = math.sin(ang)
    cot = math.cos(ang) / s
    g = base * np.exp(0.5j * cot * x * x) * _trapezoid_weights(x.size, grid.h)
    amp = np.exp(-1j * np.outer(X_arr, x) / s) @ g
    return np.abs(amp) ** 2 / (2.0 * math.pi * s)


# ---------------------------------------------------------------------------
# Two-mode tomograms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TwoModeSqueezedVacuum:
    """Two-mode squeezed vacuum with squeezing parameter r."""

    r: float

    def __post_init__(self):
        object.__setattr__(self, "r", float(self.r))


@dataclass(frozen=True)
class Product:
    """Product of two single-mode specifications."""

    mode1: StateSpec
    mode2: StateSpec


@dataclass(frozen=True)
class SeparableMixture:
    """Convex combination of product states: sum_k w_k rho1_k x rho2_k."""

    components: tuple

    def __post_init__(self):
        comps = tuple((float(w), s1, s2) for w, s1, s2 in self.components)
        if not comps:
            raise WeightSumMismatch("separable mixture needs at least one component")
        for w, _, _ in comps:
            if not (0.0 < w <= 1.0):
                raise WeightSumMismatch(f"weight {w} outside (0, 1]")
        total = sum(w for w, _, _ in comps)
        if abs(total - 1.0) > 1e-12:
            raise WeightSumMismatch(f"weights sum to {total!r}, expected 1")
        object.__setattr__(self, "components", comps)


TwoModeStateSpec = Union[TwoModeSqueezedVacuum, Product, SeparableMixture]


class AnalyticGaussianTwoMode:
    """Zero-or-known-mean bivariate Gaussian tomogram given by angle maps.

    ``mean(theta1, theta2)`` returns the 2-vector of row means and
    ``cov(theta1, theta2)`` the 2x2 covariance of (X1, X2). Validation checks
    symmetry, positive definiteness, and the purity floor det >= 1/4 on a
    small angle mesh.
    """

    def __init__(self, mean: Callable, cov: Callable, source: str,
                 det_floor: float = 0.25):
        self.mean = mean
        self.cov = cov
        self.source = source
        for t1 in np.linspace(0.0, math.pi, 5, endpoint=False):
            for t2 in np.linspace(0.0, math.pi, 5, endpoint=False):
                sigma = np.asarray(cov(t1, t2), dtype=float)
                if sigma.shape != (2, 2) or abs(sigma[0, 1] - sigma[1, 0]) > 1e-12:
                    raise GridError("two-mode covariance must be symmetric 2x2")
                det = sigma[0, 0] * sigma[1, 1] - sigma[0, 1] * sigma[1, 0]
                if sigma[0, 0] <= 0.0 or det <= 0.0:
                    raise GridError("two-mode covariance must be positive definite")
                if det < det_floor * (1.0 - 1e-9):
                    raise GridError(f"det Sigma = {det:g} below floor {det_floor:g}")


class GriddedProductMixture:
    """Separable two-mode tomogram sum_k w_k w1_k(X1, theta1) w2_k(X2, theta2)."""

    def __init__(self, components):
        comps = [(float(w), t1, t2) for w, t1, t2 in components]
        total = sum(w for w, _, _ in comps)
        if abs(total - 1.0) > 1e-12:
            raise WeightSumMismatch(f"weights sum to {total!r}, expected 1")
        for _, t1, t2 in comps:
            if not isinstance(t1, Tomogram) or not isinstance(t2, Tomogram):
                raise GridError("components must be (weight, Tomogram, Tomogram)")
        self.components = comps
        self.source = "mixture(" + "+".join(
            f"{w:g}*[{t1.source}]x[{t2.source}]" for w, t1, t2 in comps) + ")"


TwoModeTomogram = Union[AnalyticGaussianTwoMode, GriddedProductMixture]


def tmsv_tomogram(r: float) -> AnalyticGaussianTwoMode:
    """Analytic TMSV tomogram: Var = cosh(2r)/2 per mode and
    Cov(theta1, theta2) = sinh(2r)/2 cos(theta1 + theta2)."""
    var = 0.5 * math.cosh(2.0 * r)
    amp = 0.5 * math.sinh(2.0 * r)

    def mean(t1, t2):
        return np.zeros(2)

    def cov(t1, t2):
        c = amp * math.cos(t1 + t2)
        return np.array([[var, c], [c, var]])

    return AnalyticGaussianTwoMode(mean, cov, source=f"tmsv(r={r:g})")


def two_mode_tomogram(spec: TwoModeStateSpec, grid: Optional[Grid] = None) -> TwoModeTomogram:
    """Build the two-mode tomogram for a product / separable-mixture / TMSV spec."""
    if isinstance(spec, TwoModeSqueezedVacuum):
        return tmsv_tomogram(spec.r)
    if isinstance(spec, Product):
        return separable_mixture_tomogram([(1.0, spec.mode1, spec.mode2)], grid=grid)
    if isinstance(spec, SeparableMixture):
        return separable_mixture_tomogram(list(spec.components), grid=grid)
    raise UnsupportedTwoModeFamily(f"unsupported two-mode spec {type(spec).__name__}")


def separable_mixture_tomogram(components: Sequence, grid: Optional[Grid] = None) -> GriddedProductMixture:
    """Gridded tomogram of sum_k w_k |s1_k><s1_k| x |s2_k><s2_k|.

    ``components`` is a sequence of (weight, spec1, spec2); the guaranteed
    separable negative control for the Bell analyzer.
    """
    comps = [(float(w), s1, s2) for w, s1, s2 in components]
    total = sum(w for w, _, _ in comps)
    if abs(total - 1.0) > 1e-12:
        raise WeightSumMismatch(f"weights sum to {total!r}, expected 1")
    states = []
    for _, s1, s2 in comps:
        states.append(make_state(s1))
        states.append(make_state(s2))
    if grid is None:
        grid = Grid.for_states(states)
    built = []
    it = iter(states)
    for (w, _, _), st1, st2 in zip(comps, it, it):
        built.append((w, optical_tomogram(st1, grid), optical_tomogram(st2, grid)))
    return GriddedProductMixture(built)


# ---------------------------------------------------------------------------
# Two-mode JSON forms
# ---------------------------------------------------------------------------

def two_mode_to_dict(spec: TwoModeStateSpec) -> dict:
    if isinstance(spec, TwoModeSqueezedVacuum):
        return {"type": "tmsv", "r": float(spec.r)}
    if isinstance(spec, Product):
        return {"type": "product", "mode1": spec_to_dict(spec.mode1),
                "mode2": spec_to_dict(spec.mode2)}
    if isinstance(spec, SeparableMixture):
        return {"type": "separable_mixture",
                "components": [{"weight": float(w), "mode1": spec_to_dict(s1),
                                "mode2": spec_to_dict(s2)}
                               for w, s1, s2 in spec.components]}
    raise UnsupportedTwoModeFamily(f"unsupported two-mode spec {type(spec).__name__}")


def two_mode_from_dict(d: dict) -> TwoModeStateSpec:
    if not isinstance(d, dict) or "type" not in d:
        raise StateSpecError("two-mode spec must be an object with a 'type' field")
    t = d["type"]
    if t == "tmsv":
        unknown = sorted(set(d) - {"type", "r"})
        if unknown:
            raise StateSpecError(f"tmsv: unknown field(s) {', '.join(unknown)}")
        return TwoModeSqueezedVacuum(float(d["r"]))
    if t == "product":
        unknown = sorted(set(d) - {"type", "mode1", "mode2"})
        if unknown:
            raise StateSpecError(f"product: unknown field(s) {', '.join(unknown)}")
        return Product(spec_from_dict(d["mode1"]), spec_from_dict(d["mode2"]))
    if t == "separable_mixture":
        unknown = sorted(set(d) - {"type", "components"})
        if unknown:
            raise StateSpecError(f"separable_mixture: unknown field(s) {', '.join(unknown)}")
        comps = []
        for item in d.get("components", []):
            extra = sorted(set(item) - {"weight", "mode1", "mode2"})
            if extra:
                raise StateSpecError(f"separable_mixture component: unknown field(s) {', '.join(extra)}")
            comps.append((float(item["weight"]), spec_from_dict(item["mode1"]),
                          spec_from_dict(item["mode2"])))
        return SeparableMixture(tuple(comps))
    raise UnsupportedTwoModeFamily(f"unknown two-mode type {t!r}")
