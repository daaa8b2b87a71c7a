"""Two-sided shooting for the real spectrum of H = p^2 - (ix)^N.

Decaying WKB seeds are placed in the right Stokes wedge and in its PT image
in the left wedge.  Both solutions are carried to a matching point on the
negative imaginary axis, where their Wronskian is real for real E because
the left solution is the PT conjugate of the right one.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

from scipy.optimize import brentq

from .complex_ode import Contour, ODEState, Tolerances, integrate_schrodinger, propagate, wkb_seed
from .errors import MissedLevel, PTViolation
from .potentials import Monomial
from .wkb import action_integral, trace_stokes_line

# WKB action between the seed and the turning-point radius; e^-2A bounds the
# admixture of the wrong solution at the matching point
SEED_ACTION = 15.0
PT_REL_TOL = 1e-6


@dataclass(frozen=True)
class WedgePair:
    N: int
    start_radius: float | None = None  # None: chosen per energy from SEED_ACTION
    angle_offset: float = 0.0  # rotation of the right ray inside its wedge
    # x_m = -i * match_scale * E^(1/N); None puts x_m where the Stokes arch
    # crosses the imaginary axis, the best-conditioned place to match
    match_scale: float | None = None

    @property
    def opening(self) -> float:
        return 2 * math.pi / (self.N + 2)

    @property
    def theta_right(self) -> float:
        return -math.pi / 2 + 2 * math.pi / (self.N + 2) + self.angle_offset

    @property
    def theta_left(self) -> float:
        return -math.pi - self.theta_right

    def seed_radius(self, E: float) -> float:
        r0 = E ** (1 / self.N)
        m = self.N / 2 + 1
        auto = (r0**m + m * SEED_ACTION) ** (1 / m)
        if self.start_radius is None:
            return auto
        return max(self.start_radius, auto)

    def matching_point(self, E: float) -> complex:
        scale = self.match_scale if self.match_scale is not None else arch_crossing(self.N)
        return -1j * scale * E ** (1 / self.N)

    def normalization_point(self, E: float) -> complex:
        """Point below the arch where psi is dominant; psi is set to 1 there."""
        half_gap = math.sin(math.pi / self.N)  # |x_+ - x_-| / (2 E^(1/N))
        return -1j * (arch_crossing(self.N) + half_gap) * E ** (1 / self.N)

    def right_contour(self, E: float) -> Contour:
        """Seed point -> ray point at the turning radius -> matching point."""
        u = complex(math.cos(self.theta_right), math.sin(self.theta_right))
        r0 = E ** (1 / self.N)
        return Contour([self.seed_radius(E) * u, r0 * u, self.matching_point(E)])


@lru_cache(maxsize=None)
def unit_stokes_path(N: int):
    """Stokes arch of -(ix)^N at E = 1; at energy E it is scaled by E^(1/N)."""
    return trace_stokes_line(Monomial(N), 1.0, step=min(1e-2, 0.05 / N))


@lru_cache(maxsize=None)
def arch_crossing(N: int) -> float:
    """Depth c such that the E = 1 Stokes arch meets the imaginary axis at -ic."""
    z = unit_stokes_path(N).samples
    for a, b in zip(z, z[1:]):
        if a.real >= 0 > b.real or a.real > 0 >= b.real:
            w = a.real / (a.real - b.real)
            return -(a.imag + w * (b.imag - a.imag))
    raise RuntimeError(f"Stokes arch for N={N} never crosses the imaginary axis")


@dataclass
class ShotResult:
    E: float
    W: complex  # normalized Wronskian psi_L psi_R' - psi_L' psi_R
    raw_W: complex
    psi_R: complex
    dpsi_R: complex
    psi_L: complex
    dpsi_L: complex
    x_m: complex


@dataclass
class Eigenpair:
    k: int
    E: float
    residual: float
    samples: list[ODEState] = field(default_factory=list, repr=False)
    # psi(x_norm) = 1 and psi'(x_norm) = dpsi_norm
    x_norm: complex = 0j
    dpsi_norm: complex = 0j
    x_m: complex = 0j


def _validate(spec):
    if not isinstance(spec, Monomial):
        raise TypeError("shooting handles the Monomial family only")


def shoot(spec: Monomial, E: float, wedges: WedgePair | None = None, tol: Tolerances = Tolerances()) -> ShotResult:
    _validate(spec)
    wedges = wedges or WedgePair(spec.N)
    right = wedges.right_contour(E)
    left = right.mirrored()
    seed = wkb_seed(spec, E, right.start, right.anchors[1] - right.start)
    psi_R, dpsi_R = propagate(spec, E, right.anchors, seed.psi, seed.dpsi, tol)
    psi_L, dpsi_L = propagate(
        spec, E, left.anchors, seed.psi.conjugate(), -seed.dpsi.conjugate(), tol
    )
    raw = psi_L * dpsi_R - dpsi_L * psi_R
    # |raw| <= kappa * amp_L * amp_R, so W lies in the unit disc
    kappa = max(1.0, abs(spec(right.end) - E) ** 0.5)
    amp_L = math.hypot(abs(psi_L), abs(dpsi_L) / kappa)
    amp_R = math.hypot(abs(psi_R), abs(dpsi_R) / kappa)
    scale = kappa * amp_L * amp_R
    W = raw / scale if scale > 0 else 0j
    if abs(W.imag) > PT_REL_TOL * (abs(W) + 1) + 1e-12:
        raise PTViolation(f"Im W = {W.imag:.3e} at E={E} (|W|={abs(W):.3e})")
    return ShotResult(E, W, raw, psi_R, dpsi_R, psi_L, dpsi_L, right.end)


def mismatch(spec: Monomial, E: float, wedges: WedgePair | None = None, tol: Tolerances = Tolerances()) -> float:
    """Real part of the normalized Wronskian; zero at an eigenvalue."""
    return shoot(spec, E, wedges, tol).W.real


def wkb_energy_of(spec: Monomial, nu: float) -> float:
    """Energy where the WKB action equals (nu + 1/2) pi."""
    N = spec.N
    c = action_integral(spec, 1.0).value
    return ((nu + 0.5) * math.pi / c) ** (2 * N / (N + 2))


def find_eigenvalues(
    spec: Monomial,
    E_max: float,
    wedges: WedgePair | None = None,
    tol: Tolerances = Tolerances(),
    per_level: int = 6,
    executor=None,
) -> list[Eigenpair]:
    """All real eigenvalues below E_max, bracketed on a WKB-spaced scan."""
    _validate(spec)
    if not E_max > 0:
        raise ValueError("E_max must be positive")
    wedges = wedges or WedgePair(spec.N)

    grid = []
    nu = -0.45
    while True:
        E = wkb_energy_of(spec, nu)
        grid.append(E)
        if E > E_max:
            break
        nu += 1.0 / per_level
    grid[-1] = max(grid[-1], E_max)

    def f(E):
        return mismatch(spec, E, wedges, tol)

    vals = list(executor.map(f, grid)) if executor is not None else [f(E) for E in grid]

    roots = []
    for (e0, v0), (e1, v1) in zip(zip(grid, vals), zip(grid[1:], vals[1:])):
        if v0 == 0:
            roots.append(e0)
        elif v0 * v1 < 0:
            roots.append(brentq(f, e0, e1, xtol=1e-13 * (1 + e0), rtol=4 * 2.3e-16))
    roots = [E for E in roots if E <= E_max]

    predicted = 0
    while wkb_energy_of(spec, predicted) <= E_max:
        predicted += 1
    if abs(predicted - len(roots)) > 1:
        warnings.warn(
            f"found {len(roots)} levels below {E_max} but WKB predicts {predicted}", MissedLevel
        )

    return [make_eigenpair(spec, k, E, wedges, tol) for k, E in enumerate(roots)]


def make_eigenpair(spec: Monomial, k: int, E: float, wedges: WedgePair | None = None, tol: Tolerances = Tolerances()) -> Eigenpair:
    """Reference samples along seed -> x_m -> x_norm, scaled to psi(x_norm) = 1."""
    wedges = wedges or WedgePair(spec.N)
    shot = shoot(spec, E, wedges, tol)
    right = wedges.right_contour(E)
    x_norm = wedges.normalization_point(E)
    path = Contour(right.anchors + [x_norm])
    seed = wkb_seed(spec, E, right.start, right.anchors[1] - right.start)
    states = integrate_schrodinger(spec, E, path, seed, tol)
    norm = states[-1].psi
    for s in states:
        s.psi /= norm
        s.dpsi /= norm
    return Eigenpair(k, E, abs(shot.W), states, x_norm, states[-1].dpsi, shot.x_m)


def eigenfunction_samples(spec: Monomial, eigenpair: Eigenpair, contour: Contour, tol: Tolerances = Tolerances()) -> list[ODEState]:
    """Eigenfunction along ``contour``, normalized so psi(x_norm) = 1.

    The state at x_norm is carried along a straight line to the contour start
    and then along the contour.
    """
    x0 = eigenpair.x_norm
    psi, dpsi = 1.0 + 0j, eigenpair.dpsi_norm
    if contour.start != x0:
        psi, dpsi = propagate(spec, eigenpair.E, [x0, contour.start], psi, dpsi, tol)
    return integrate_schrodinger(spec, eigenpair.E, contour, ODEState(contour.start, psi, dpsi), tol)
