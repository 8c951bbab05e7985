"""Truncated-Fock density matrices and the tomogram transform pair.

Forward direction: w(X, theta) = sum_mn rho_mn e^{i(n-m)theta} psi_m(X) psi_n(X),
the quadratic form of the density matrix in angle-phased Hermite functions
(phase convention fixed by agreement with the pure-state chirped integral).

Inverse direction: the kernel exp(i eta (X - q cos theta - p sin theta))
integrated over theta in [0, pi), eta, and X. The operator factor is the
displacement D(beta) with beta = -i eta e^{i theta} / sqrt(2), whose matrix
elements have the associated-Laguerre closed form

    <m|D(beta)|n> = sqrt(n!/m!) beta^(m-n) e^(-|beta|^2/2) L_n^(m-n)(|beta|^2),

so each element costs O(n_theta n_eta) with an analytically bounded
e^(-eta^2/4) tail. The symmetric |eta| kernel on a symmetric grid makes the
reconstruction Hermitian by construction.
"""
from __future__ import annotations

import math
from typing import Optional

import numpy as np
from scipy.special import eval_genlaguerre

from .errors import (
    GridError,
    InsufficientAngles,
    NonConvergentEta,
    TomocheckError,
    TruncationLoss,
)
from .grids import Grid, Tomogram
from .states import hermite_functions

ETA_MAX = 12.0
N_ETA = 481
ETA_TAIL_LIMIT = 1e-6
MIN_ANGLES = 32


class DensityMatrix:
    """Hermitian trace-one matrix on the Fock ladder 0..n_max."""

    def __init__(self, n_max: int, matrix):
        matrix = np.asarray(matrix, dtype=complex)
        if matrix.shape != (n_max + 1, n_max + 1):
            raise GridError(f"matrix shape {matrix.shape} does not match n_max={n_max}")
        self.n_max = int(n_max)
        self.matrix = matrix

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def hermiticity_error(self) -> float:
        return float(np.abs(self.matrix - self.matrix.conj().T).max())

    def min_eigenvalue(self) -> float:
        sym = 0.5 * (self.matrix + self.matrix.conj().T)
        return float(np.linalg.eigvalsh(sym).min())

    def validate(self, hermitian_tol: float = 1e-10, trace_tol: float = 1e-6,
                 eig_tol: float = 1e-6) -> None:
        if self.hermiticity_error() > hermitian_tol:
            raise TomocheckError(f"density matrix Hermiticity off by {self.hermiticity_error():g}")
        if abs(self.trace - 1.0) > trace_tol:
            raise TomocheckError(f"density matrix trace is {self.trace!r}")
        if self.min_eigenvalue() < -eig_tol:
            raise TomocheckError(f"density matrix has eigenvalue {self.min_eigenvalue():g}")

    def to_dict(self) -> dict:
        return {"n_max": self.n_max,
                "re": [[float(v) for v in row] for row in self.matrix.real],
                "im": [[float(v) for v in row] for row in self.matrix.imag]}

    @classmethod
    def from_dict(cls, d: dict) -> "DensityMatrix":
        unknown = sorted(set(d) - {"n_max", "re", "im"})
        if unknown:
            raise GridError(f"density: unknown field(s) {', '.join(unknown)}")
        return cls(int(d["n_max"]), np.asarray(d["re"], dtype=float)
                   + 1j * np.asarray(d["im"], dtype=float))

    @classmethod
    def from_pure(cls, coeffs) -> "DensityMatrix":
        c = np.asarray(coeffs, dtype=complex)
        c = c / np.linalg.norm(c)
        return cls(c.size - 1, np.outer(c, c.conj()))


def tomogram_from_density(rho: DensityMatrix, grid: Optional[Grid] = None,
                          validate: bool = True) -> Tomogram:
    """Rows w(X, theta) of the truncated density matrix on ``grid``."""
    if validate:
        rho.validate()
    if rho.trace < 1.0 - 1e-6:
        raise TruncationLoss(f"represented trace {rho.trace!r} < 1 - 1e-6")
    if grid is None:
        half = max(10.0, math.sqrt(2.0 * rho.n_max + 1.0) + 6.0)
        grid = Grid(-half, half, max(1024, grid_points_for(half)), None)
    basis = hermite_functions(rho.n_max, grid.x)  # (n_max+1, n_x)
    ns = np.arange(rho.n_max + 1)
    rows = np.empty((grid.thetas.size, grid.n_x))
    for i, theta in enumerate(grid.thetas):
        phased = np.exp(1j * ns * theta)[:, None] * basis
        rows[i] = np.einsum("mx,mn,nx->x", phased.conj(), rho.matrix, phased).real
    return Tomogram(grid, rows, source=f"density(n_max={rho.n_max})")


def grid_points_for(half: float, spacing: float = 0.02) -> int:
    return 1 << math.ceil(math.log2(2.0 * half / spacing))


def density_from_tomogram(tom: Tomogram, n_max: int, eta_max: float = ETA_MAX,
                          n_eta: int = N_ETA) -> DensityMatrix:
    """Inverse transform of a tomogram into the truncated Fock basis.

    Requires >= 32 reasonably uniform angles on [0, pi). The eta integral is
    truncated at |eta| <= eta_max on a symmetric grid with a node at zero
    (the |eta| kink is integrated exactly by the trapezoid rule there).
    """
    thetas = tom.grid.thetas
    if thetas.size < MIN_ANGLES:
        raise InsufficientAngles(f"need >= {MIN_ANGLES} angles, got {thetas.size}")
    d_theta = np.diff(thetas)
    if d_theta.size and (d_theta.max() - d_theta.min()) > 1e-9:
        raise GridError("density reconstruction expects uniformly spaced angles")
    dt = math.pi / thetas.size
    if n_eta % 2 == 0:
        n_eta += 1  # keep a node exactly at eta = 0
    eta = np.linspace(-eta_max, eta_max, n_eta)
    w_eta = np.full(n_eta, eta[1] - eta[0])
    w_eta[0] *= 0.5
    w_eta[-1] *= 0.5

    x = tom.grid.x
    tw = np.full(x.size, tom.grid.h)
    tw[0] *= 0.5
    tw[-1] *= 0.5
    # W~(eta, theta) = int w(X, theta) e^{i eta X} dX, one row per stored angle
    kernel = np.exp(1j * np.outer(x, eta)) * tw[:, None]
    wt = tom.values @ kernel  # (n_theta, n_eta)

    # theta Fourier components T_k(eta) = sum_theta dtheta e^{i k theta} W~
    ks = np.arange(-n_max, n_max + 1)
    phases = np.exp(1j * np.outer(ks, thetas)) * dt
    T = phases @ wt  # (2 n_max + 1, n_eta)

    envelope = np.exp(-0.25 * eta * eta)
    eta_sq_half = 0.5 * eta * eta

    # eta-tail estimate: the integrand magnitude at |eta| = eta_max decays as
    # e^(-eta^2/4); bound the remainder by edge * 2/(eta_max/2) per side.
    edge_mag = 0.0

    m_dim = n_max + 1
    out = np.empty((m_dim, m_dim), dtype=complex)
    abs_eta = np.abs(eta)
    for m in range(m_dim):
        for n in range(m_dim):
            k = abs(m - n)
            low = min(m, n)
            ratio = 1.0
            for j in range(low + 1, low + k + 1):
                ratio /= j
            coef = math.sqrt(ratio)
            c = coef * (-1j * eta / math.sqrt(2.0)) ** k * envelope \
                * eval_genlaguerre(low, k, eta_sq_half)
            integrand = abs_eta * c * T[m - n + n_max]
            out[m, n] = np.dot(w_eta, integrand) / (2.0 * math.pi)
            edge_mag = max(edge_mag, abs(integrand[0]), abs(integrand[-1]))

    tail = edge_mag * 2.0 * 2.0 / eta_max
    if tail > ETA_TAIL_LIMIT:
        raise NonConvergentEta(f"eta tail estimate {tail:g} above {ETA_TAIL_LIMIT:g}; raise eta_max")
    return DensityMatrix(n_max, out)
