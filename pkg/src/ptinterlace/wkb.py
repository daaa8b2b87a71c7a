"""WKB quantization, Stokes-line tracing and asymptotic growth laws."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import BranchFailure, DegenerateFit, LostPath
from .potentials import Monomial, turning_points

REALNESS_TOL = 1e-6


@dataclass
class ActionIntegral:
    E: float
    value: float
    imag_residual: float


@dataclass
class StokesPath:
    samples: np.ndarray
    phase: float  # accumulated real phase along the path
    phase_imag: float
    x_plus: complex
    x_minus: complex


@dataclass
class PowerLawFit:
    C: float
    p: float
    rms_residual: float
    window: tuple[float, float]
    n_points: int = 0


@dataclass
class RichardsonResult:
    table: list[list[float]]
    value: float
    stability: float
    unstable: bool = False
    ks: list[float] = field(default_factory=list)


def _continuous_sqrt(values: np.ndarray, start: int) -> np.ndarray:
    """Square roots of ``values`` with the sign chosen for continuity from index ``start``."""
    roots = np.sqrt(values.astype(complex))
    out = roots.copy()
    for i in range(start + 1, len(values)):
        if abs(out[i] - out[i - 1]) > abs(out[i] + out[i - 1]):
            out[i] = -out[i]
    for i in range(start - 1, -1, -1):
        if abs(out[i] - out[i + 1]) > abs(out[i] + out[i + 1]):
            out[i] = -out[i]
    return out


def segment_action(spec, E: float, x_a: complex, x_b: complex, order: int = 64) -> complex:
    """Integral of sqrt(E - V) over the straight segment x_a -> x_b.

    Uses x = mid + half*sin(theta), which turns the square-root endpoint
    behaviour at simple turning points into a smooth integrand.  The branch is
    continuous along the segment and fixed by the principal root at the midpoint.
    """
    nodes, weights = np.polynomial.legendre.leggauss(order)
    theta = nodes * (math.pi / 2)
    mid = 0.5 * (x_a + x_b)
    half = 0.5 * (x_b - x_a)
    x = mid + half * np.sin(theta)
    f = _continuous_sqrt(E - spec(x), order // 2)
    return complex(np.sum(weights * f * half * np.cos(theta)) * (math.pi / 2))


def action_integral(spec, E: float, order: int = 64) -> ActionIntegral:
    tp = turning_points(spec, E)
    val = segment_action(spec, E, tp.x_minus, tp.x_plus, order)
    if val.real < 0:
        val = -val
    if abs(val.imag) > REALNESS_TOL * abs(val.real):
        raise BranchFailure(f"action between turning points is not real: {val} at E={E}")
    return ActionIntegral(E, val.real, abs(val.imag))


def wkb_eigenvalue(spec, k: int, rtol: float = 1e-10) -> float:
    """Solve action(E) = (k + 1/2) pi."""
    if k < 0:
        raise ValueError("k must be non-negative")
    target = (k + 0.5) * math.pi
    if isinstance(spec, Monomial):
        # action scales as E^((N+2)/(2N)); use it for the bracket
        N = spec.N
        expo = (N + 2) / (2 * N)
        guess = (target / action_integral(spec, 1.0).value) ** (1 / expo)
        lo, hi = 0.5 * guess, 2.0 * guess
    else:
        lo, hi = 1.0, 2.0
        while action_integral(spec, hi).value < target:
            lo, hi = hi, 2 * hi

    def g(E):
        return action_integral(spec, E).value - target

    while g(lo) > 0:
        lo *= 0.5
    while g(hi) < 0:
        hi *= 2.0
    return brentq(g, lo, hi, xtol=1e-14, rtol=max(rtol * 1e-2, 4.5e-16))


def monomial_wkb_closed_form(N: int, k: int) -> float:
    """Leading-order WKB level of -(ix)^N in closed form (Gamma functions)."""
    num = math.gamma(1.5 + 1 / N) * math.sqrt(math.pi) * (k + 0.5)
    den = math.sin(math.pi / N) * math.gamma(1 + 1 / N)
    return (num / den) ** (2 * N / (N + 2))


def _phase_step(spec, E, xa, xb, fa):
    # 3-point Gauss-Legendre along the chord; branch tied to fa
    nodes = np.array([-math.sqrt(0.6), 0.0, math.sqrt(0.6)])
    w = np.array([5 / 9, 8 / 9, 5 / 9])
    mid, half = 0.5 * (xa + xb), 0.5 * (xb - xa)
    xs = mid + half * nodes
    vals = np.sqrt((E - spec(xs)).astype(complex))
    prev = fa
    out = []
    for v in vals:
        if abs(v - prev) > abs(v + prev):
            v = -v
        out.append(v)
        prev = v
    return complex(np.dot(w, out) * half)


def _branch(spec, E, x, ref):
    f = cmath.sqrt(E - spec(x))
    return f if abs(f - ref) <= abs(f + ref) else -f


def trace_stokes_line(spec, E: float, step: float = 1e-2, max_steps: int | None = None) -> StokesPath:
    """Curve from x_plus to x_minus along which sqrt(E - V) dx is real.

    Advances along u = conj(sqrt(E - V)) / |.|, projecting each new point back
    onto Im(phase) = 0 with a Newton correction.
    """
    tp = turning_points(spec, E)
    xp, xm = tp.x_plus, tp.x_minus
    r = max(abs(xp), abs(xm))
    end_tol = 1e-3 * r
    box = 3.0 * r + 1.0
    if max_steps is None:
        max_steps = int(50 * math.pi * r / step) + 1000

    alpha = -spec.derivative(xp)
    candidates = [cmath.exp(1j * (-cmath.phase(alpha) + 2 * math.pi * n) / 3) for n in range(3)]
    # try the direction that heads most directly to x_minus first
    target_dir = (xm - xp) / abs(xm - xp)
    candidates.sort(key=lambda d: -(d * target_dir.conjugate()).real)

    eps = 0.5 * end_tol
    for d0 in candidates:
        x = xp + eps * d0
        # f with f*d0 real positive near the turning point
        f = cmath.sqrt(E - spec(x))
        if (f * d0).real < 0:
            f = -f
        phase = (2 / 3) * f * eps * d0
        samples = [x]
        ok = False
        for _ in range(max_steps):
            dist = abs(x - xm)
            if dist < end_tol:
                ok = True
                break
            h = min(step, 0.5 * dist) if dist < 4 * step else step

            def direction(y, fref):
                fy = _branch(spec, E, y, fref)
                return fy.conjugate() / abs(fy), fy

            k1, f1 = direction(x, f)
            k2, f2 = direction(x + 0.5 * h * k1, f1)
            k3, f3 = direction(x + 0.5 * h * k2, f2)
            k4, _ = direction(x + h * k3, f3)
            x_new = x + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6
            phase += _phase_step(spec, E, x, x_new, f)
            f = _branch(spec, E, x_new, f)
            # pull back onto the level curve Im(phase) = 0
            for _ in range(2):
                if phase.imag == 0 or abs(f) == 0:
                    break
                dx = -1j * phase.imag * f.conjugate() / abs(f) ** 2
                phase += _phase_step(spec, E, x_new, x_new + dx, f)
                x_new += dx
                f = _branch(spec, E, x_new, f)
            x = x_new
            samples.append(x)
            if abs(x) > box:
                break
        if ok:
            return StokesPath(np.asarray(samples), phase.real, phase.imag, xp, xm)
    raise LostPath(f"Stokes line from {xp} did not reach {xm} at E={E}")


def fit_power_law(points) -> PowerLawFit:
    """Least-squares fit of y = C k^p on (ln k, ln y)."""
    pts = [(float(k), float(y)) for k, y in points]
    if len(pts) < 5:
        raise DegenerateFit("power-law fit needs at least 5 points")
    k = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    if np.any(k <= 0) or np.any(y <= 0):
        raise ValueError("power-law fit needs positive k and y")
    if np.ptp(k) == 0:
        raise DegenerateFit("all k equal")
    lk, ly = np.log(k), np.log(y)
    A = np.column_stack([np.ones_like(lk), lk])
    (c0, p), *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - (c0 + p * lk)
    return PowerLawFit(math.exp(c0), float(p), float(np.sqrt(np.mean(resid**2))), (k.min(), k.max()), len(k))


def richardson_extrapolate(seq, ks=None, model: str = "inverse-k") -> RichardsonResult:
    """Neville-style table eliminating successive powers of 1/k.

    R[j][i] = (k_{i+j} R[j-1][i+1] - k_i R[j-1][i]) / (k_{i+j} - k_i)
    """
    if model != "inverse-k":
        raise ValueError(f"unknown error model {model!r}")
    seq = [float(s) for s in seq]
    if len(seq) < 3:
        raise ValueError("need at least 3 terms")
    ks = [float(k) for k in (ks if ks is not None else range(1, len(seq) + 1))]
    table = [seq]
    for j in range(1, len(seq)):
        prev = table[-1]
        row = [
            (ks[i + j] * prev[i + 1] - ks[i] * prev[i]) / (ks[i + j] - ks[i])
            for i in range(len(prev) - 1)
        ]
        table.append(row)

    # spread between the last two entries of each level
    spreads = [abs(r[-1] - r[-2]) if len(r) >= 2 else math.inf for r in table]
    best = min(range(len(table) - 1), key=lambda j: spreads[j])
    value = table[best][-1]
    # deepest level still shrinking its spread wins over earlier ones
    for j in range(best + 1, len(table) - 1):
        if spreads[j] <= spreads[j - 1]:
            best, value = j, table[j][-1]
        else:
            break
    stability = spreads[best]
    last = [s for s in spreads if math.isfinite(s)]
    unstable = len(last) >= 2 and last[-1] > last[-2]
    return RichardsonResult(table, value, stability, unstable, ks)


def local_exponents(ks, values):
    """ln(s_k / s_{k+1}) / ln(k / (k+1)) for consecutive entries."""
    out = []
    for (k0, s0), (k1, s1) in zip(zip(ks, values), zip(ks[1:], values[1:])):
        out.append(math.log(s0 / s1) / math.log(k0 / k1))
    return out


@dataclass
class DriftResult:
    drift: PowerLawFit
    magnitude: PowerLawFit
    energies: dict[int, float]


def turning_point_drift(spec: Monomial, k_max: int = 40, k_min: int = 10) -> DriftResult:
    """Power laws for |x_TP(E_k)| and |x_TP(E_{k+1}) - x_TP(E_k)| using WKB levels."""
    if k_max < 12:
        raise ValueError("k_max must be at least 12")
    ks = list(range(k_min, k_max + 2))
    energies = {k: wkb_eigenvalue(spec, k) for k in ks}
    xtp = {k: turning_points(spec, energies[k]).x_plus for k in ks}
    diffs = [(k, abs(xtp[k + 1] - xtp[k])) for k in ks[:-1]]
    mags = [(k, abs(xtp[k])) for k in ks[:-1]]
    return DriftResult(fit_power_law(diffs), fit_power_law(mags), energies)
