"""Scaling maps, complex interlacing, and band/shift/divergence metrics."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.optimize import curve_fit

from .errors import CountMismatch, DegenerateFit
from .wkb import PowerLawFit, fit_power_law


@dataclass(frozen=True)
class LargeN:
    """z = (x E^(-1/N) + i) N / pi; turning points tend to +-1 as N grows."""

    N: int
    E: float

    def __post_init__(self):
        if not self.E > 0 or self.N < 2:
            raise ValueError(f"LargeN needs E > 0 and N >= 2, got {self}")

    def __call__(self, x):
        return (x * self.E ** (-1.0 / self.N) + 1j) * self.N / math.pi


@dataclass(frozen=True)
class TurningMagnitude:
    """z = x / r with r = |x_TP|."""

    r: float

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError(f"TurningMagnitude needs r > 0, got {self.r}")

    def __call__(self, x):
        return x / self.r


@dataclass(frozen=True)
class CubicScale:
    """z = x E^(-1/3), the turning-point scaling of ix^3."""

    E: float

    def __post_init__(self):
        if not self.E > 0:
            raise ValueError(f"CubicScale needs E > 0, got {self.E}")

    def __call__(self, x):
        return x * self.E ** (-1.0 / 3.0)

    def as_turning_magnitude(self) -> TurningMagnitude:
        return TurningMagnitude(self.E ** (1.0 / 3.0))


ScalingMap = Union[LargeN, TurningMagnitude, CubicScale]


def apply_scaling(scaling: ScalingMap, zeros) -> list[complex]:
    return [complex(scaling(complex(z))) for z in zeros]


def order_zeros(zeros) -> list[complex]:
    """Order along the arch: by Re, ties broken by Im."""
    return sorted((complex(z) for z in zeros), key=lambda z: (z.real, z.imag))


@dataclass
class InterlaceReport:
    pair: tuple[int, int]
    gap_counts: list[int]
    passed: bool
    shift: float
    # zeros of the lower state left of / right of the outermost upper pair
    outside: int = 0
    count_mismatch: bool = False


def check_interlacing(zeros_k, zeros_k1, pair: tuple[int, int] = (0, 1)) -> InterlaceReport:
    """Count zeros of psi_k strictly between consecutive zeros of psi_{k+1}.

    Only interior gaps are judged; zeros outside the outermost pair are
    counted in ``outside``.  A cardinality mismatch is reported, not raised.
    """
    a = order_zeros(zeros_k)
    b = order_zeros(zeros_k1)
    mismatch = len(b) != len(a) + 1
    if mismatch:
        warnings.warn(f"pair {pair}: {len(a)} and {len(b)} zeros, expected n and n+1", CountMismatch)
    gaps = [sum(1 for z in a if lo.real < z.real < hi.real) for lo, hi in zip(b, b[1:])]
    outside = len(a) - sum(gaps)
    passed = (not mismatch) and all(g == 1 for g in gaps)
    if a and b:
        shift = float(np.mean([z.imag for z in a]) - np.mean([z.imag for z in b]))
    else:
        shift = math.nan
    return InterlaceReport(tuple(pair), gaps, passed, shift, outside, mismatch)


@dataclass
class ShiftMetric:
    ks: list[int]
    means: list[float]  # mean Im of the zeros of each state
    shifts: list[float]  # means[i] - means[i+1]
    scaled: bool
    strictly_decreasing: bool | None  # verdict for unscaled inputs only


def _k_and_zeros(item):
    if hasattr(item, "zeros"):
        return item.k, list(item.zeros)
    k, zs = item
    return k, list(zs)


def shift_metric(zero_sets, scaled: bool = False) -> ShiftMetric:
    """Mean Im per state and the downward-drift verdict.

    ``zero_sets`` holds ZeroSet-like objects or (k, zeros) pairs; states
    without zeros are skipped.
    """
    items = [_k_and_zeros(s) for s in zero_sets]
    if len(items) < 2:
        raise ValueError("shift_metric needs at least two zero sets")
    items = [(k, zs) for k, zs in sorted(items, key=lambda t: t[0]) if zs]
    ks = [k for k, _ in items]
    means = [float(np.mean([complex(z).imag for z in zs])) for _, zs in items]
    shifts = [m0 - m1 for m0, m1 in zip(means, means[1:])]
    verdict = None if scaled else all(s > 0 for s in shifts)
    return ShiftMetric(ks, means, shifts, scaled, verdict)


@dataclass
class BandMetric:
    alpha: float
    beta: float
    gamma: float
    rms_deviation: float
    max_deviation: float
    band_width: float
    n_points: int


def band_metric(zeros) -> BandMetric:
    """Quadratic arch Im = alpha + beta Re + gamma Re^2 through all points and
    the vertical scatter about it."""
    z = np.array([complex(v) for v in zeros])
    if len(z) < 10:
        raise ValueError("band_metric needs at least 10 zeros")
    x, y = z.real, z.imag
    if len(np.unique(np.round(x, 12))) < 3:
        raise DegenerateFit("fewer than three distinct Re values; the arch fit is degenerate")
    A = np.column_stack([np.ones_like(x), x, x * x])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    dev = y - A @ coef
    return BandMetric(
        float(coef[0]), float(coef[1]), float(coef[2]),
        float(np.sqrt(np.mean(dev**2))), float(np.max(np.abs(dev))), float(dev.max() - dev.min()), len(z),
    )


def arch_intercept(zeros, turning_pair=()) -> float:
    """Im-axis intercept alpha of Im = alpha + gamma Re^2 fitted through the
    zeros of one state together with its turning points."""
    pts = [complex(v) for v in zeros] + [complex(v) for v in turning_pair]
    x = np.array([p.real for p in pts])
    y = np.array([p.imag for p in pts])
    if len(pts) < 2 or len(np.unique(np.round(x * x, 12))) < 2:
        raise DegenerateFit("need two distinct |Re| values for the arch intercept")
    A = np.column_stack([np.ones_like(x), x * x])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(coef[0])


@dataclass
class DivergenceResult:
    fit: PowerLawFit  # gaps ~ C k^p
    cumulative_exponent: float  # q in sum_{j<=k} gaps ~ A k^q + B
    cumulative_amplitude: float
    verdict: str  # "divergent-trend" or "convergent"
    ks: list[float] = field(default_factory=list)


def divergence_check(gaps, ks=None) -> DivergenceResult:
    """Does the distance accumulated by successive gaps grow without bound?

    The gap exponent p comes from fit_power_law; the cumulative distances
    are fitted with A k^q + B (the constant absorbs the start of the sum).
    """
    g = np.asarray(gaps, dtype=float)
    if np.any(g <= 0):
        raise ValueError("gaps must be positive")
    k = np.asarray(ks if ks is not None else np.arange(1, len(g) + 1), dtype=float)
    fit = fit_power_law(list(zip(k, g)))
    # trapezoid-corrected sums: subtracting half the last gap removes the
    # leading Euler-Maclaurin term, which otherwise biases q
    S = np.cumsum(g) - 0.5 * g

    def model(kk, A, q, B):
        return A * kk**q + B

    q0 = fit.p + 1 if fit.p > -1 else -0.5
    A0 = fit.C / q0 if q0 != 0 else 1.0
    try:
        (A, q, B), _ = curve_fit(model, k, S, p0=(A0, q0, S[0] - A0), maxfev=20000)
    except RuntimeError:
        # fall back to a plain power law on the sums
        cf = fit_power_law(list(zip(k, S)))
        A, q = cf.C, cf.p
    verdict = "divergent-trend" if (fit.p > -1 and q > 0 and A > 0) else "convergent"
    return DivergenceResult(fit, float(q), float(A), verdict, [float(v) for v in k])
