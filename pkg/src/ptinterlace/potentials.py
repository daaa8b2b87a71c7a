"""PT-symmetric potential families and their classical turning points.

Two families are supported:

* ``Monomial(N)``:  V(x) = -(i x)^N, N >= 2
* ``QESQuartic(a, b, J)``:  V(x) = -x^4 + 2iax^3 + (a^2 - 2b)x^2 + 2i(ab - J)x

Both satisfy V(-conj(x)) = conj(V(x)).  Complex coordinates are plain Python
``complex`` (or numpy complex arrays where vectorized evaluation is useful).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import DegeneratePair

ROOT_RESIDUAL_TOL = 1e-10
MIRROR_TOL = 1e-8


@dataclass(frozen=True)
class Monomial:
    N: int

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise ValueError(f"Monomial requires integer N >= 2, got {self.N!r}")

    def __call__(self, x):
        return -((1j * x) ** self.N)

    def derivative(self, x):
        return -1j * self.N * (1j * x) ** (self.N - 1)

    def poly_coeffs(self) -> np.ndarray:
        """Coefficients of V in ascending powers of x."""
        c = np.zeros(self.N + 1, dtype=complex)
        c[self.N] = -(1j**self.N)
        return c

    @property
    def label(self) -> str:
        return f"monomial-N{self.N}"


@dataclass(frozen=True)
class QESQuartic:
    a: float
    b: float
    J: int

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError(f"QESQuartic requires a > 0, got {self.a!r}")
        if int(self.J) != self.J or self.J < 1:
            raise ValueError(f"QESQuartic requires integer J >= 1, got {self.J!r}")

    def poly_coeffs(self) -> np.ndarray:
        a, b, J = self.a, self.b, self.J
        return np.array([0.0, 2j * (a * b - J), a * a - 2 * b, 2j * a, -1.0], dtype=complex)

    def __call__(self, x):
        c = self.poly_coeffs()
        # Horner; works for scalars and arrays alike
        return (((c[4] * x + c[3]) * x + c[2]) * x + c[1]) * x

    def derivative(self, x):
        c = self.poly_coeffs()
        return ((4 * c[4] * x + 3 * c[3]) * x + 2 * c[2]) * x + c[1]

    @property
    def k_criterion(self) -> float:
        return self.a**2 + 4 * self.b

    @property
    def label(self) -> str:
        return f"qes-a{self.a:g}-b{self.b:g}-J{self.J}"


PotentialSpec = Union[Monomial, QESQuartic]


def evaluate_potential(spec: PotentialSpec, x):
    return spec(x)


@dataclass
class TurningPointSet:
    energy: float
    all_roots: list[complex]
    pt_pair: tuple[complex, complex]
    # every PT-mirror pair found, outermost first; pt_pair is other_pairs[0]
    mirror_pairs: list[tuple[complex, complex]] = field(default_factory=list)

    @property
    def x_minus(self) -> complex:
        return self.pt_pair[0]

    @property
    def x_plus(self) -> complex:
        return self.pt_pair[1]

    @property
    def magnitude(self) -> float:
        return abs(self.pt_pair[1])


def _quartic_roots(spec: QESQuartic, E: float) -> np.ndarray:
    c = spec.poly_coeffs().copy()
    c[0] -= E
    # companion matrix of the monic polynomial, highest power last
    monic = c[:-1] / c[-1]
    n = len(monic)
    comp = np.zeros((n, n), dtype=complex)
    comp[1:, :-1] = np.eye(n - 1)
    comp[:, -1] = -monic
    roots = np.linalg.eigvals(comp)
    # one Newton polish per root
    dV = spec.derivative(roots)
    good = np.abs(dV) > 0
    roots[good] -= (spec(roots[good]) - E) / dV[good]
    return roots


def _mirror_pairs(roots, tol: float) -> list[tuple[complex, complex]]:
    """Group roots r, s with s = -conj(r) and Re(r) > 0."""
    pairs = []
    used = set()
    order = sorted(range(len(roots)), key=lambda i: -roots[i].real)
    for i in order:
        r = complex(roots[i])
        if i in used or r.real <= 0:
            continue
        target = -r.conjugate()
        best, best_d = None, math.inf
        for j in range(len(roots)):
            if j == i or j in used:
                continue
            d = abs(roots[j] - target)
            if d < best_d:
                best, best_d = j, d
        if best is not None and best_d <= tol * max(1.0, abs(r)):
            used.update((i, best))
            pairs.append((complex(roots[best]), r))
    return pairs


def turning_points(spec: PotentialSpec, E: float, mirror_tol: float = MIRROR_TOL) -> TurningPointSet:
    """Roots of V(x) = E, with the PT-mirror pair bounding the oscillatory arch.

    For a monomial the pair sits at angles -pi/2 +- pi/N.  For the QES quartic
    the pair with the largest |Re| is chosen; any other mirror pairs are kept
    in ``mirror_pairs`` for diagnostics.
    """
    if isinstance(spec, Monomial):
        if not E > 0:
            raise ValueError("monomial turning points need E > 0")
        N = spec.N
        r = E ** (1.0 / N)
        roots = [r * cmath.exp(1j * (math.pi * (2 * k + 1) / N - math.pi / 2)) for k in range(N)]
        x_plus = r * cmath.exp(1j * (-math.pi / 2 + math.pi / N))
        x_minus = r * cmath.exp(1j * (-math.pi / 2 - math.pi / N))
        return TurningPointSet(E, roots, (x_minus, x_plus), [(x_minus, x_plus)])

    roots = _quartic_roots(spec, E)
    pairs = _mirror_pairs(roots, mirror_tol)
    if not pairs:
        raise DegeneratePair(f"no PT-mirror pair among turning points {roots} at E={E}")
    pairs.sort(key=lambda p: -abs(p[1].real))
    return TurningPointSet(E, [complex(r) for r in roots], pairs[0], pairs)
