"""Quadrature grids and gridded tomograms.

A tomogram stores one nonnegative density row w(., theta) per stored angle,
with angles kept on the half-range [0, pi). Angles outside are reduced with
the reflection identity w(X, theta + pi) = w(-X, theta), which on a symmetric
x-grid is a row reversal.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .errors import GridError, GridMismatch, GridTooCoarse, ThetaNotOnGrid, TomocheckError

THETA_TOL = 1e-9
ROW_MASS_GATE = 1e-4     # pre-renormalization |mass - 1| beyond this signals aliasing
NEGATIVE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform x-grid plus a sorted vector of angles in [0, pi)."""

    x_min: float
    x_max: float
    n_x: int
    thetas: np.ndarray = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "x_min", float(self.x_min))
        object.__setattr__(self, "x_max", float(self.x_max))
        object.__setattr__(self, "n_x", int(self.n_x))
        thetas = self.thetas if self.thetas is not None else default_thetas()
        thetas = np.array(sorted(float(t) for t in np.atleast_1d(thetas)), dtype=float)
        if self.n_x < 64:
            raise GridError(f"n_x must be >= 64, got {self.n_x}")
        if not self.x_max > self.x_min:
            raise GridError("x_max must exceed x_min")
        if thetas.size == 0:
            raise GridError("at least one angle is required")
        if thetas[0] < -THETA_TOL or thetas[-1] >= math.pi:
            raise GridError("stored angles must lie in [0, pi)")
        if np.any(np.diff(thetas) < THETA_TOL):
            raise GridError("angles must be distinct")
        object.__setattr__(self, "thetas", thetas)
        object.__setattr__(self, "_x", np.linspace(self.x_min, self.x_max, self.n_x))

    @property
    def x(self) -> np.ndarray:
        return self._x

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / (self.n_x - 1)

    @property
    def symmetric(self) -> bool:
        return abs(self.x_min + self.x_max) <= 1e-12 * max(1.0, self.x_max - self.x_min)

    def same_axes(self, other: "Grid") -> bool:
        return (self.n_x == other.n_x and self.x_min == other.x_min
                and self.x_max == other.x_max and self.thetas.size == other.thetas.size
                and bool(np.all(np.abs(self.thetas - other.thetas) <= THETA_TOL)))

    @classmethod
    def default(cls, n_theta: int = 64) -> "Grid":
        """x in [-10, 10], 1024 points, n_theta equally spaced angles."""
        return cls(-10.0, 10.0, 1024, default_thetas(n_theta))

    @classmethod
    def for_states(cls, states: Iterable, n_theta: int = 64,
                   target_spacing: float = 0.02) -> "Grid":
        """Auto-sized symmetric grid covering the supports of ``states``."""
        half = 0.0
        for s in states:
            half = max(half, _half_width_of(s))
        half = max(half, 10.0)
        n = max(1024, 1 << math.ceil(math.log2(2.0 * half / target_spacing)))
        return cls(-half, half, n, default_thetas(n_theta))

    def to_dict(self) -> dict:
        return {"x_min": self.x_min, "x_max": self.x_max, "n_x": self.n_x,
                "thetas": [float(t) for t in self.thetas]}

    @classmethod
    def from_dict(cls, d: dict) -> "Grid":
        unknown = sorted(set(d) - {"x_min", "x_max", "n_x", "thetas"})
        if unknown:
            raise GridError(f"grid: unknown field(s) {', '.join(unknown)}")
        return cls(d["x_min"], d["x_max"], d["n_x"], np.asarray(d["thetas"], dtype=float))


def default_thetas(n_theta: int = 64) -> np.ndarray:
    """n_theta equally spaced angles k pi / n_theta, k = 0 .. n_theta - 1."""
    if n_theta < 1:
        raise GridError("n_theta must be >= 1")
    return np.arange(n_theta) * (math.pi / n_theta)


def _half_width_of(s) -> float:
    from .states import MixedState, PureState, support_half_width

    if isinstance(s, (PureState, MixedState)):
        return s.half_width
    return support_half_width(s)


def reduce_theta(theta: float):
    """Map theta to ([0, pi), flip) using w(X, theta + pi) = w(-X, theta)."""
    k = math.floor(theta / math.pi)
    th = theta - k * math.pi
    if th >= math.pi - 1e-12:
        th = 0.0
        k += 1
    if th < 0.0:
        th = 0.0
    return th, bool(k & 1)


class Tomogram:
    """Gridded homodyne density w[theta-index][x-index].

    Construction validates nonnegativity (values above -1e-12 are clamped to
    zero), renormalizes every row by its trapezoid mass, and records the
    pre-renormalization deviation |mass - 1| per row as a certificate. A row
    missing unit mass by more than 1e-4 raises GridTooCoarse.
    """

    def __init__(self, grid: Grid, values, source: str = "unknown"):
        values = np.array(values, dtype=float)
        if values.shape != (grid.thetas.size, grid.n_x):
            raise GridError(f"values shape {values.shape} does not match grid "
                            f"({grid.thetas.size}, {grid.n_x})")
        if values.min(initial=0.0) < -NEGATIVE_TOL:
            raise TomocheckError(f"negative density {values.min()} below -1e-12")
        values = np.clip(values, 0.0, None)
        mass = np.trapezoid(values, grid.x, axis=1)
        err = np.abs(mass - 1.0)
        bad = int(np.argmax(err))
        if err[bad] > ROW_MASS_GATE:
            raise GridTooCoarse(
                f"row at theta={grid.thetas[bad]:.6f} integrates to {mass[bad]:.6f}; "
                "widen or refine the grid")
        self.grid = grid
        self.values = values / mass[:, None]
        self.source = str(source)
        self.row_norm_error = err

    # -- angle lookup -------------------------------------------------------

    def theta_index(self, theta: float) -> Optional[int]:
        th, _ = reduce_theta(theta)
        idx = int(np.argmin(np.abs(self.grid.thetas - th)))
        if abs(self.grid.thetas[idx] - th) <= THETA_TOL:
            return idx
        # wrap: theta just below pi may match the first stored angle reflected
        if abs(th - math.pi) <= THETA_TOL and abs(self.grid.thetas[0]) <= THETA_TOL:
            return 0
        return None

    def has_theta(self, theta: float, interpolate: bool = False) -> bool:
        if interpolate:
            return True
        return self.theta_index(theta) is not None

    def _flip(self, row: np.ndarray) -> np.ndarray:
        if not self.grid.symmetric:
            raise GridMismatch("angle reflection requires a symmetric x-grid")
        return row[::-1]

    def row_at(self, theta: float, interpolate: bool = False) -> np.ndarray:
        """Density row at ``theta`` (any real angle; reflection applied).

        With ``interpolate`` the row is linear in theta between stored
        neighbors, wrapping across the pi boundary through the reflection
        identity.
        """
        th, flip = reduce_theta(theta)
        thetas = self.grid.thetas
        idx = int(np.argmin(np.abs(thetas - th)))
        if abs(thetas[idx] - th) <= THETA_TOL:
            row = self.values[idx]
            return self._flip(row) if flip else row.copy()
        if abs(th - math.pi) <= THETA_TOL and abs(thetas[0]) <= THETA_TOL:
            row = self.values[0]
            return row.copy() if flip else self._flip(row)
        if not interpolate:
            raise ThetaNotOnGrid(f"theta={theta!r} is not a stored angle")
        j = int(np.searchsorted(thetas, th))
        if j == 0:
            lo_t, lo_row = thetas[-1] - math.pi, self._flip(self.values[-1])
            hi_t, hi_row = thetas[0], self.values[0]
        elif j == thetas.size:
            lo_t, lo_row = thetas[-1], self.values[-1]
            hi_t, hi_row = thetas[0] + math.pi, self._flip(self.values[0])
        else:
            lo_t, lo_row = thetas[j - 1], self.values[j - 1]
            hi_t, hi_row = thetas[j], self.values[j]
        frac = (th - lo_t) / (hi_t - lo_t)
        row = (1.0 - frac) * lo_row + frac * hi_row
        return self._flip(row) if flip else row

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "grid": self.grid.to_dict(),
            "source": self.source,
            "rows": [{"theta": float(t), "w": [float(v) for v in row]}
                     for t, row in zip(self.grid.thetas, self.values)],
            "row_norm_error": [float(e) for e in self.row_norm_error],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Tomogram":
        unknown = sorted(set(d) - {"grid", "source", "rows", "row_norm_error"})
        if unknown:
            raise GridError(f"tomogram: unknown field(s) {', '.join(unknown)}")
        grid = Grid.from_dict(d["grid"])
        rows = d["rows"]
        thetas = [r["theta"] for r in rows]
        if not np.allclose(thetas, grid.thetas, atol=THETA_TOL):
            raise GridMismatch("row angles disagree with grid metadata")
        values = np.array([r["w"] for r in rows], dtype=float)
        return cls(grid, values, source=d.get("source", "loaded"))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("theta,x,w\n")
        for t, row in zip(self.grid.thetas, self.values):
            ts = repr(float(t))
            for x, v in zip(self.grid.x, row):
                buf.write(f"{ts},{x!r},{v!r}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, source: str = "loaded") -> "Tomogram":
        lines = [ln for ln in text.strip().splitlines() if ln]
        if not lines or lines[0].strip() != "theta,x,w":
            raise GridError("CSV tomogram must start with header 'theta,x,w'")
        thetas, xs, ws = [], [], []
        for ln in lines[1:]:
            t, x, w = ln.split(",")
            thetas.append(float(t))
            xs.append(float(x))
            ws.append(float(w))
        thetas = np.asarray(thetas)
        xs = np.asarray(xs)
        ws = np.asarray(ws)
        uniq_t = np.unique(thetas)
        n_t = uniq_t.size
        if thetas.size % n_t:
            raise GridError("CSV rows are not a complete theta x grid product")
        n_x = thetas.size // n_t
        x0 = xs[:n_x]
        values = np.empty((n_t, n_x))
        for i, t in enumerate(uniq_t):
            sel = thetas == t
            if not np.array_equal(xs[sel], x0):
                raise GridError("CSV x-columns differ between theta rows")
            values[i] = ws[sel]
        grid = Grid(x0[0], x0[-1], n_x, uniq_t)
        return cls(grid, values, source=source)
