"""Statistical homodyne simulation: seeded quadrature draws, moment
estimates with standard errors, and the bootstrap state-extended check.

RNG contract: every batch is drawn from numpy's counter-based Philox4x64-10
bit generator keyed with the 128-bit pair (seed, stream). Streams are
numbered deterministically (0..5 for the six angle batches of the empirical
check, 6 for bootstrap resampling), so identical inputs reproduce identical
reports and independently seeded sub-streams never overlap.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import EmptyBatch, InsufficientSamples
from .grids import Tomogram
from .inequalities import BOUND, InequalityReport, _report
from .moments import RotatedCovariance

BOOTSTRAP_DEFAULT = 1000
GUARD_CAP = 0.05
_MASK64 = (1 << 64) - 1


def _generator(seed: int, stream: int) -> np.random.Generator:
    key = np.array([seed & _MASK64, stream & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class SampleBatch:
    """Quadrature outcomes drawn at one angle; reproducible from (seed, stream)."""

    theta: float
    seed: int
    values: np.ndarray
    stream: int = 0

    @property
    def n(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class EstimatedMoments:
    """Sample moments with delta-method standard errors."""

    theta: float
    mean: float
    second_moment: float
    variance: float
    se_mean: float
    se_variance: float
    n: int


def sample_quadratures(tom: Tomogram, theta: float, n: int, seed: int,
                       stream: int = 0) -> SampleBatch:
    """Inverse-CDF draws against the cumulative trapezoid of the theta row.

    The cumulative mass is linear inside each grid cell, so a uniform draw
    maps to x by linear interpolation between cell boundaries. Deterministic
    for fixed (tomogram, theta, n, seed, stream).
    """
    if n < 1:
        raise EmptyBatch(f"need n >= 1 draws, got {n}")
    row = tom.row_at(theta)
    x = tom.grid.x
    h = tom.grid.h
    cell = 0.5 * (row[:-1] + row[1:]) * h
    cum = np.concatenate(([0.0], np.cumsum(cell)))
    total = cum[-1]
    rng = _generator(seed, stream)
    u = rng.random(n) * total
    idx = np.clip(np.searchsorted(cum, u, side="right") - 1, 0, cell.size - 1)
    width = cell[idx]
    frac = np.divide(u - cum[idx], width, out=np.zeros_like(u), where=width > 0)
    return SampleBatch(theta, seed, x[idx] + frac * h, stream)


def estimate_moments(batch: SampleBatch) -> EstimatedMoments:
    """Unbiased mean/variance; SE(mean) = s/sqrt(n), SE(variance) from the
    fourth central moment via the delta method."""
    v = batch.values
    n = v.size
    if n < 2:
        raise InsufficientSamples(f"need n >= 2 samples, got {n}")
    mean = float(v.mean())
    second = float(np.mean(v * v))
    var = float(v.var(ddof=1))
    d = v - mean
    m4 = float(np.mean(d ** 4))
    se_var = math.sqrt(max(m4 - var * var * (n - 3.0) / (n - 1.0), 0.0) / n)
    return EstimatedMoments(batch.theta, mean, second, var, math.sqrt(var / n), se_var, n)


def _plugin_lhs(v1, v2) -> float:
    # v = (Var(theta), Var(theta+pi/4), Var(theta+pi/2)) per state
    c1 = v1[1] - 0.5 * (v1[0] + v1[2])
    c2 = v2[1] - 0.5 * (v2[0] + v2[2])
    return 0.5 * (v1[0] * v2[2] + v2[0] * v1[2]) - c1 * c2


@dataclass(frozen=True)
class EmpiricalTrifonovResult:
    """Plug-in state-extended check with a bootstrap confidence interval.

    verdict is "pass" when the CI lower bound clears 1/4 - guard with
    guard = min(CI width, 0.05), "violation" when the whole CI sits below
    1/4, and "inconclusive" otherwise (wide CI straddling the bound).
    """

    report: InequalityReport
    ci_low: float
    ci_high: float
    verdict: str
    n: int
    seed: int
    n_boot: int
    level: float
    estimates: tuple

    def to_dict(self) -> dict:
        return {
            "report": self.report.to_dict(),
            "ci": [float(self.ci_low), float(self.ci_high)],
            "verdict": self.verdict,
            "n": int(self.n),
            "seed": int(self.seed),
            "n_boot": int(self.n_boot),
            "level": float(self.level),
        }


def empirical_trifonov(tom1: Tomogram, tom2: Tomogram, theta: float, n: int,
                       seed: int, n_boot: int = BOOTSTRAP_DEFAULT,
                       level: float = 0.95,
                       guard_cap: float = GUARD_CAP) -> EmpiricalTrifonovResult:
    """Estimate the state-extended lhs from six sampled batches.

    Streams 0..2 sample tomogram 1 at theta, theta+pi/4, theta+pi/2 and
    streams 3..5 tomogram 2; stream 6 feeds the nonparametric bootstrap
    (n_boot resamples, percentile interval).
    """
    angles = (theta, theta + math.pi / 4.0, theta + math.pi / 2.0)
    batches = []
    for block, tom in enumerate((tom1, tom2)):
        for j, ang in enumerate(angles):
            batches.append(sample_quadratures(tom, ang, n, seed, stream=3 * block + j))
    estimates = tuple(estimate_moments(b) for b in batches)
    v1 = [estimates[j].variance for j in range(3)]
    v2 = [estimates[3 + j].variance for j in range(3)]
    lhs = _plugin_lhs(v1, v2)

    rng = _generator(seed, 6)
    boot_vars = np.empty((6, n_boot))
    chunk = max(1, min(n_boot, int(5_000_000 // max(n, 1)) or 1))
    for b, batch in enumerate(batches):
        vals = batch.values
        done = 0
        while done < n_boot:
            m = min(chunk, n_boot - done)
            idx = rng.integers(0, n, size=(m, n))
            boot_vars[b, done:done + m] = vals[idx].var(axis=1, ddof=1)
            done += m
    boot_lhs = _plugin_lhs(boot_vars[0:3], boot_vars[3:6])
    tail = 100.0 * (1.0 - level) / 2.0
    ci_low, ci_high = np.percentile(boot_lhs, [tail, 100.0 - tail])

    width = ci_high - ci_low
    guard = min(width, guard_cap)
    if ci_high < BOUND:
        verdict = "violation"
    elif ci_low >= BOUND - guard:
        verdict = "pass"
    else:
        verdict = "inconclusive"

    inputs = tuple(f"empirical({t.source}@theta={a:g},n={n})"
                   for t in (tom1, tom2) for a in angles)
    stat_tol = 0.5 * width
    report = _report("Trifonov", theta, lhs, inputs, tolerance=stat_tol)
    return EmpiricalTrifonovResult(report, float(ci_low), float(ci_high), verdict,
                                   n, seed, n_boot, level, estimates)


def batch_to_csv(batch: SampleBatch) -> str:
    lines = ["theta,x"]
    t = repr(float(batch.theta))
    lines.extend(f"{t},{v!r}" for v in batch.values)
    return "\n".join(lines) + "\n"
