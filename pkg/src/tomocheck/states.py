"""Single-mode state catalog: wavefunctions and analytic moments.

Families: Fock number states |n>, coherent states D(alpha)|0>, rotated
squeezed states D(alpha) R(phi) S(r) |0>, even/odd cat superpositions of
+-alpha, finite Fock superpositions, and finite convex mixtures of the pure
families.

Conventions: hbar = 1, [q, p] = i, vacuum variances sigma_qq = sigma_pp = 1/2,
<q> = sqrt(2) Re(alpha) and <p> = sqrt(2) Im(alpha) for a coherent state.
With these choices the uncertainty bounds downstream are exactly 1/4 and the
ground-state wavefunction is pi^(-1/4) exp(-y^2/2).

S(r) squeezes the position quadrature (sigma_qq = e^(-2r)/2 at phi = 0) and
R(phi) = exp(-i phi n_hat) rotates the squeezing ellipse so that the minor
axis points along the quadrature at angle phi.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .errors import (
    EmptySuperposition,
    NegativePhotonNumber,
    NoClosedForm,
    StateSpecError,
    UnnormalizedState,
    WeightSumMismatch,
)

_PI_QUARTER = math.pi ** -0.25
NORM_TOL = 1e-9
WEIGHT_TOL = 1e-12


# ---------------------------------------------------------------------------
# Specifications
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Fock:
    """Number state |n>."""

    n: int

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or isinstance(self.n, bool):
            raise NegativePhotonNumber(f"photon number must be an integer, got {self.n!r}")
        if self.n < 0:
            raise NegativePhotonNumber(f"photon number must be >= 0, got {self.n}")


@dataclass(frozen=True)
class Coherent:
    """Displaced vacuum D(alpha)|0>."""

    alpha: complex

    def __post_init__(self):
        object.__setattr__(self, "alpha", complex(self.alpha))
        if not np.isfinite(self.alpha.real) or not np.isfinite(self.alpha.imag):
            raise StateSpecError("coherent amplitude must be finite")


@dataclass(frozen=True)
class Squeezed:
    """Squeezed, rotated, displaced Gaussian D(alpha) R(phi) S(r) |0>."""

    r: float
    phi: float = 0.0
    alpha: complex = 0j

    def __post_init__(self):
        object.__setattr__(self, "r", float(self.r))
        object.__setattr__(self, "phi", float(self.phi))
        object.__setattr__(self, "alpha", complex(self.alpha))
        if not (np.isfinite(self.r) and np.isfinite(self.phi)):
            raise StateSpecError("squeezing parameters must be finite")


@dataclass(frozen=True)
class Cat:
    """Normalized superposition |alpha> + parity |-alpha>, parity = +-1."""

    alpha: complex
    parity: int = 1

    def __post_init__(self):
        object.__setattr__(self, "alpha", complex(self.alpha))
        if self.parity not in (1, -1):
            raise StateSpecError(f"cat parity must be +1 or -1, got {self.parity!r}")
        if self.parity == -1 and abs(self.alpha) < 1e-8:
            raise StateSpecError("odd cat with alpha ~ 0 is the zero vector")


@dataclass(frozen=True)
class FockSuperposition:
    """Finite superposition sum_n c_n |n>.

    Coefficients are normalized to unit Euclidean norm on construction;
    ``renormalized`` records whether a rescaling was required.
    """

    coeffs: tuple
    renormalized: bool = False

    def __post_init__(self):
        coeffs = tuple(complex(c) for c in self.coeffs)
        if len(coeffs) == 0:
            raise EmptySuperposition("empty coefficient vector")
        norm = math.sqrt(sum(abs(c) ** 2 for c in coeffs))
        if norm < 1e-300:
            raise EmptySuperposition("all superposition coefficients are zero")
        rescaled = abs(norm - 1.0) > WEIGHT_TOL
        if rescaled:
            coeffs = tuple(c / norm for c in coeffs)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "renormalized", bool(rescaled))

    @property
    def n_max(self) -> int:
        return len(self.coeffs) - 1


PureSpec = Union[Fock, Coherent, Squeezed, Cat, FockSuperposition]


@dataclass(frozen=True)
class Mixture:
    """Finite convex mixture of pure specifications."""

    components: tuple

    def __post_init__(self):
        comps = tuple((float(w), s) for w, s in self.components)
        if len(comps) == 0:
            raise WeightSumMismatch("mixture needs at least one component")
        for w, s in comps:
            if isinstance(s, Mixture):
                raise StateSpecError("nested mixtures are forbidden")
            if not isinstance(s, (Fock, Coherent, Squeezed, Cat, FockSuperposition)):
                raise StateSpecError(f"mixture component must be a pure spec, got {type(s).__name__}")
            if not (0.0 < w <= 1.0):
                raise WeightSumMismatch(f"mixture weight {w} outside (0, 1]")
        total = sum(w for w, _ in comps)
        if abs(total - 1.0) > WEIGHT_TOL:
            raise WeightSumMismatch(f"mixture weights sum to {total!r}, expected 1")
        object.__setattr__(self, "components", comps)


StateSpec = Union[PureSpec, Mixture]


@dataclass(frozen=True)
class AnalyticMoments:
    """First and second quadrature moments at theta = 0."""

    mean_q: float
    mean_p: float
    var_q: float
    var_p: float
    cov: float


# ---------------------------------------------------------------------------
# Hermite functions
# ---------------------------------------------------------------------------

def hermite_functions(n_max: int, y) -> np.ndarray:
    """Normalized Hermite functions psi_0 .. psi_n_max at points ``y``.

    psi_n(y) = (2^n n! sqrt(pi))^(-1/2) H_n(y) exp(-y^2/2) evaluated with the
    normalized two-term recurrence

        psi_n = sqrt(2/n) y psi_(n-1) - sqrt((n-1)/n) psi_(n-2),

    which avoids factorials and stays stable well past n = 60.

    Returns an array of shape (n_max + 1, len(y)).
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    out = np.empty((n_max + 1,) + y.shape)
    out[0] = _PI_QUARTER * np.exp(-0.5 * y * y)
    if n_max >= 1:
        out[1] = math.sqrt(2.0) * y * out[0]
    for n in range(2, n_max + 1):
        out[n] = math.sqrt(2.0 / n) * y * out[n - 1] - math.sqrt((n - 1.0) / n) * out[n - 2]
    return out


# ---------------------------------------------------------------------------
# Wavefunction builders
# ---------------------------------------------------------------------------

def _coherent_psi(alpha: complex) -> Callable:
    # <y|D(alpha)|0> = pi^(-1/4) exp(-y^2/2 + sqrt(2) alpha y - alpha^2/2 - |alpha|^2/2)
    c0 = -0.5 * alpha * alpha - 0.5 * abs(alpha) ** 2

    def psi(y):
        y = np.asarray(y, dtype=float)
        return _PI_QUARTER * np.exp(-0.5 * y * y + math.sqrt(2.0) * alpha * y + c0)

    return psi


def _gaussian_psi(mean_q: float, mean_p: float, var_q: float, cov: float) -> Callable:
    # General pure Gaussian, fixed by (q0, p0, sigma_qq, sigma_qp); global phase free.
    a = 1.0 / (2.0 * var_q) - 1j * cov / var_q
    norm = (2.0 * math.pi * var_q) ** -0.25

    def psi(y):
        y = np.asarray(y, dtype=float)
        u = y - mean_q
        return norm * np.exp(-0.5 * a * u * u + 1j * mean_p * y)

    return psi


def _squeezed_moments(spec: Squeezed) -> AnalyticMoments:
    ch = math.cosh(2.0 * spec.r)
    sh = math.sinh(2.0 * spec.r)
    c2 = math.cos(2.0 * spec.phi)
    s2 = math.sin(2.0 * spec.phi)
    return AnalyticMoments(
        mean_q=math.sqrt(2.0) * spec.alpha.real,
        mean_p=math.sqrt(2.0) * spec.alpha.imag,
        var_q=0.5 * (ch - c2 * sh),
        var_p=0.5 * (ch + c2 * sh),
        cov=0.5 * s2 * sh,
    )


def _superposition_psi(coeffs) -> Callable:
    coeffs = np.asarray(coeffs, dtype=complex)
    n_max = len(coeffs) - 1

    def psi(y):
        basis = hermite_functions(n_max, y)
        return np.tensordot(coeffs, basis.astype(complex), axes=1)

    return psi


# ---------------------------------------------------------------------------
# Evaluators
# ---------------------------------------------------------------------------

def support_half_width(spec: StateSpec) -> float:
    """Half-width of the auto-selected support grid for ``spec``.

    max(8, sqrt(2 n_max + 1) + 6 + sqrt(2)|alpha| + 4 e^|r|); keeps truncated
    tails below ~1e-14 for every catalog family.
    """
    n_max, a_max, r_max = _extent(spec)
    return max(8.0, math.sqrt(2.0 * n_max + 1.0) + 6.0 + math.sqrt(2.0) * a_max + 4.0 * math.exp(r_max))


def _extent(spec: StateSpec):
    if isinstance(spec, Fock):
        return spec.n, 0.0, 0.0
    if isinstance(spec, Coherent):
        return 0, abs(spec.alpha), 0.0
    if isinstance(spec, Squeezed):
        return 0, abs(spec.alpha), abs(spec.r)
    if isinstance(spec, Cat):
        return 0, abs(spec.alpha), 0.0
    if isinstance(spec, FockSuperposition):
        return spec.n_max, 0.0, 0.0
    if isinstance(spec, Mixture):
        parts = [_extent(s) for _, s in spec.components]
        return (max(p[0] for p in parts), max(p[1] for p in parts), max(p[2] for p in parts))
    raise StateSpecError(f"unknown state spec {type(spec).__name__}")


class PureState:
    """Evaluator for a pure catalog state.

    Carries the position-representation wavefunction, the auto-selected
    support half-width, and analytic moments where the family admits a
    closed form (Fock, Coherent, Squeezed).
    """

    def __init__(self, spec: Optional[PureSpec], psi: Callable,
                 analytic: Optional[AnalyticMoments] = None,
                 half_width: Optional[float] = None, check_norm: bool = True):
        self.spec = spec
        self._psi = psi
        self.analytic = analytic
        self.half_width = float(half_width if half_width is not None
                                else support_half_width(spec) if spec is not None else 12.0)
        self.norm_error = 0.0
        if check_norm:
            y = np.linspace(-self.half_width, self.half_width, 4097)
            amp = self.psi(y)
            norm = np.trapezoid(np.abs(amp) ** 2, y)
            self.norm_error = abs(norm - 1.0)
            if self.norm_error > NORM_TOL:
                raise UnnormalizedState(
                    f"|psi|^2 integrates to {norm!r} on [-{self.half_width}, {self.half_width}]")

    def psi(self, ys) -> np.ndarray:
        """Pointwise complex amplitudes at positions ``ys``."""
        return np.asarray(self._psi(np.asarray(ys, dtype=float)), dtype=complex)


class MixedState:
    """Finite convex mixture of pure-state evaluators."""

    def __init__(self, spec: Mixture, components):
        self.spec = spec
        self.components = list(components)  # (weight, PureState)
        self.half_width = max(s.half_width for _, s in self.components)
        self.analytic = _mixture_moments(self.components)


def _mixture_moments(components):
    if any(s.analytic is None for _, s in components):
        return None
    mq = sum(w * s.analytic.mean_q for w, s in components)
    mp = sum(w * s.analytic.mean_p for w, s in components)
    eq2 = sum(w * (s.analytic.var_q + s.analytic.mean_q ** 2) for w, s in components)
    ep2 = sum(w * (s.analytic.var_p + s.analytic.mean_p ** 2) for w, s in components)
    eqp = sum(w * (s.analytic.cov + s.analytic.mean_q * s.analytic.mean_p) for w, s in components)
    return AnalyticMoments(mq, mp, eq2 - mq * mq, ep2 - mp * mp, eqp - mq * mp)


State = Union[PureState, MixedState]


def make_state(spec: StateSpec) -> State:
    """Build a normalized evaluator for ``spec``.

    Raises NegativePhotonNumber / WeightSumMismatch / EmptySuperposition on
    invalid specifications (the dataclass constructors enforce the same
    invariants, so malformed specs fail as early as possible).
    """
    if isinstance(spec, Fock):
        n = spec.n

        def psi(y, n=n):
            return hermite_functions(n, y)[n].astype(complex)

        half = 0.5 + n
        return PureState(spec, psi, AnalyticMoments(0.0, 0.0, half, half, 0.0))
    if isinstance(spec, Coherent):
        m = AnalyticMoments(math.sqrt(2.0) * spec.alpha.real, math.sqrt(2.0) * spec.alpha.imag,
                            0.5, 0.5, 0.0)
        return PureState(spec, _coherent_psi(spec.alpha), m)
    if isinstance(spec, Squeezed):
        m = _squeezed_moments(spec)
        return PureState(spec, _gaussian_psi(m.mean_q, m.mean_p, m.var_q, m.cov), m)
    if isinstance(spec, Cat):
        # Norm includes the <alpha|-alpha> = exp(-2|alpha|^2) cross term.
        n2 = 2.0 * (1.0 + spec.parity * math.exp(-2.0 * abs(spec.alpha) ** 2))
        scale = 1.0 / math.sqrt(n2)
        plus = _coherent_psi(spec.alpha)
        minus = _coherent_psi(-spec.alpha)

        def psi(y):
            return scale * (plus(y) + spec.parity * minus(y))

        return PureState(spec, psi, None)
    if isinstance(spec, FockSuperposition):
        return PureState(spec, _superposition_psi(spec.coeffs), None)
    if isinstance(spec, Mixture):
        comps = [(w, make_state(s)) for w, s in spec.components]
        return MixedState(spec, comps)
    raise StateSpecError(f"unknown state spec {type(spec).__name__}")


def wavefunction(state: PureState, ys) -> np.ndarray:
    """Position-representation amplitudes of a pure state at points ``ys``."""
    if not isinstance(state, PureState):
        raise StateSpecError("wavefunction is defined for pure states only")
    return state.psi(ys)


def analytic_covariance(state: State):
    """Closed-form (var_q, var_p, cov) at theta = 0, as a RotatedCovariance.

    Raises NoClosedForm for families without attached analytic moments
    (cat states, Fock superpositions, mixtures containing them); callers
    fall back to tomographic moments.
    """
    from .moments import RotatedCovariance

    if state.analytic is None:
        raise NoClosedForm(f"no closed-form moments for {describe(state.spec)}")
    a = state.analytic
    return RotatedCovariance(0.0, a.var_q, a.var_p, a.cov)


def rotate_spec(spec: StateSpec, theta: float) -> StateSpec:
    """Specification of exp(-i theta n_hat) |spec>, closed for every family.

    Phase-space rotation maps each catalog family onto itself:
    coherent amplitudes pick up e^(-i theta), the squeezing ellipse angle
    advances by theta, Fock states are invariant, and superposition
    coefficients acquire e^(-i n theta).
    """
    ph = complex(math.cos(theta), -math.sin(theta))
    if isinstance(spec, Fock):
        return spec
    if isinstance(spec, Coherent):
        return Coherent(spec.alpha * ph)
    if isinstance(spec, Squeezed):
        return Squeezed(spec.r, spec.phi + theta, spec.alpha * ph)
    if isinstance(spec, Cat):
        return Cat(spec.alpha * ph, spec.parity)
    if isinstance(spec, FockSuperposition):
        coeffs = tuple(c * ph ** n for n, c in enumerate(spec.coeffs))
        return FockSuperposition(coeffs, spec.renormalized)
    if isinstance(spec, Mixture):
        return Mixture(tuple((w, rotate_spec(s, theta)) for w, s in spec.components))
    raise StateSpecError(f"unknown state spec {type(spec).__name__}")


# ---------------------------------------------------------------------------
# Descriptions and JSON forms
# ---------------------------------------------------------------------------

def _fmt_c(z: complex) -> str:
    return f"{z.real:g}{z.imag:+g}j"


def describe(spec) -> str:
    """Short stable provenance string for report embedding."""
    if spec is None:
        return "custom"
    if isinstance(spec, Fock):
        return f"fock(n={spec.n})"
    if isinstance(spec, Coherent):
        return f"coherent(alpha={_fmt_c(spec.alpha)})"
    if isinstance(spec, Squeezed):
        return f"squeezed(r={spec.r:g},phi={spec.phi:g},alpha={_fmt_c(spec.alpha)})"
    if isinstance(spec, Cat):
        return f"cat(alpha={_fmt_c(spec.alpha)},parity={spec.parity:+d})"
    if isinstance(spec, FockSuperposition):
        return "superposition(" + ",".join(_fmt_c(c) for c in spec.coeffs) + ")"
    if isinstance(spec, Mixture):
        return "mixture(" + "+".join(f"{w:g}*{describe(s)}" for w, s in spec.components) + ")"
    return type(spec).__name__


def _complex_pair(z: complex):
    return [float(z.real), float(z.imag)]


def _pair_complex(v, where: str) -> complex:
    if not isinstance(v, (list, tuple)) or len(v) != 2:
        raise StateSpecError(f"{where}: complex values are [re, im] pairs, got {v!r}")
    return complex(float(v[0]), float(v[1]))


def _check_keys(d: dict, allowed, where: str):
    unknown = sorted(set(d) - set(allowed))
    if unknown:
        raise StateSpecError(f"{where}: unknown field(s) {', '.join(unknown)}")


def spec_to_dict(spec: StateSpec) -> dict:
    """JSON form of a single-mode specification (complex as [re, im])."""
    if isinstance(spec, Fock):
        return {"type": "fock", "n": int(spec.n)}
    if isinstance(spec, Coherent):
        return {"type": "coherent", "alpha": _complex_pair(spec.alpha)}
    if isinstance(spec, Squeezed):
        return {"type": "squeezed", "r": float(spec.r), "phi": float(spec.phi),
                "alpha": _complex_pair(spec.alpha)}
    if isinstance(spec, Cat):
        return {"type": "cat", "alpha": _complex_pair(spec.alpha), "parity": int(spec.parity)}
    if isinstance(spec, FockSuperposition):
        return {"type": "superposition", "coeffs": [_complex_pair(c) for c in spec.coeffs]}
    if isinstance(spec, Mixture):
        return {"type": "mixture",
                "components": [{"weight": float(w), "state": spec_to_dict(s)}
                               for w, s in spec.components]}
    raise StateSpecError(f"unknown state spec {type(spec).__name__}")


def spec_from_dict(d: dict) -> StateSpec:
    """Parse a single-mode specification; unknown fields are rejected."""
    if not isinstance(d, dict) or "type" not in d:
        raise StateSpecError(f"state spec must be an object with a 'type' field, got {d!r}")
    t = d["type"]
    if t == "fock":
        _check_keys(d, {"type", "n"}, "fock")
        if "n" not in d:
            raise StateSpecError("fock: missing field 'n'")
        n = d["n"]
        if not isinstance(n, int) or isinstance(n, bool):
            raise NegativePhotonNumber(f"fock: 'n' must be an integer, got {n!r}")
        return Fock(n)
    if t == "coherent":
        _check_keys(d, {"type", "alpha"}, "coherent")
        return Coherent(_pair_complex(d.get("alpha", [0.0, 0.0]), "coherent.alpha"))
    if t == "squeezed":
        _check_keys(d, {"type", "r", "phi", "alpha"}, "squeezed")
        if "r" not in d:
            raise StateSpecError("squeezed: missing field 'r'")
        return Squeezed(float(d["r"]), float(d.get("phi", 0.0)),
                        _pair_complex(d.get("alpha", [0.0, 0.0]), "squeezed.alpha"))
    if t == "cat":
        _check_keys(d, {"type", "alpha", "parity"}, "cat")
        if "alpha" not in d:
            raise StateSpecError("cat: missing field 'alpha'")
        return Cat(_pair_complex(d["alpha"], "cat.alpha"), int(d.get("parity", 1)))
    if t == "superposition":
        _check_keys(d, {"type", "coeffs"}, "superposition")
        coeffs = d.get("coeffs", [])
        return FockSuperposition(tuple(_pair_complex(c, "superposition.coeffs") for c in coeffs))
    if t == "mixture":
        _check_keys(d, {"type", "components"}, "mixture")
        comps = []
        for item in d.get("components", []):
            _check_keys(item, {"weight", "state"}, "mixture.components")
            if "weight" not in item or "state" not in item:
                raise StateSpecError("mixture component needs 'weight' and 'state'")
            comps.append((float(item["weight"]), spec_from_dict(item["state"])))
        return Mixture(tuple(comps))
    raise StateSpecError(f"unknown state type {t!r}")
