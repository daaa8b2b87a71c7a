"""Quasi-exactly-solvable sector of the quartic PT potential.

For V(x) = -x^4 + 2iax^3 + (a^2 - 2b)x^2 + 2i(ab - J)x the J functions

    psi(x) = P(x) exp(-ix^3/3 - ax^2/2 - ibx),   deg P = J - 1

are exact eigenfunctions.  Substituting into -psi'' + V psi = E psi gives a
banded recursion for the coefficients of P, written here as an eigenproblem
M c = E c with

    M[m, m]   = a + b^2 + 2am
    M[m, m+1] = 2ib(m+1)
    M[m, m+2] = -(m+2)(m+1)
    M[m, m-1] = -2i(J-m)
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import mpmath
import numpy as np

from .errors import ComplexSpectrum, IllConditioned
from .potentials import QESQuartic

REALNESS_TOL = 1e-9
# working precision for the coefficient/zero refinement; the branch-cut zeros
# of low-lying states form a tight cluster that double precision cannot resolve
QES_DPS = 50


def build_qes_matrix(a: float, b: float, J: int) -> np.ndarray:
    if J < 1:
        raise ValueError("J must be at least 1")
    M = np.zeros((J, J), dtype=complex)
    for m in range(J):
        M[m, m] = a + b * b + 2 * a * m
        if m + 1 < J:
            M[m, m + 1] = 2j * b * (m + 1)
        if m + 2 < J:
            M[m, m + 2] = -(m + 2) * (m + 1)
        if m >= 1:
            M[m, m - 1] = -2j * (J - m)
    return M


def recursion_residual(a: float, b: float, J: int, E: complex, c: np.ndarray) -> float:
    """Largest recursion row, scaled by the size of the terms in play."""
    M = build_qes_matrix(a, b, J)
    row = M @ c - E * c
    scale = (np.abs(M).sum(axis=1).max() + abs(E)) * np.abs(c).max()
    return float(np.abs(row).max() / scale)


@dataclass
class QESEigenfunction:
    k: int  # 1..J in order of increasing Re(E)
    E: float
    coeffs: np.ndarray  # ascending powers, c[0] + c[1] x + ...
    a: float
    b: float
    J: int
    E_imag: float = 0.0
    residual: float = 0.0

    @property
    def k_criterion(self) -> float:
        return self.a**2 + 4 * self.b

    def exponent(self, x):
        a, b = self.a, self.b
        return -1j * x**3 / 3 - a * x**2 / 2 - 1j * b * x

    def polynomial(self, x):
        return np.polynomial.polynomial.polyval(x, self.coeffs)

    def __call__(self, x):
        return self.polynomial(x) * np.exp(self.exponent(x))

    def ode_residual(self, x) -> np.ndarray:
        """|-psi'' + V psi - E psi| / (|V psi| + |E psi| + |psi''|), from P and phi directly."""
        P = np.polynomial.polynomial
        c = self.coeffs
        p0 = P.polyval(x, c)
        p1 = P.polyval(x, P.polyder(c)) if len(c) > 1 else 0 * x
        p2 = P.polyval(x, P.polyder(c, 2)) if len(c) > 2 else 0 * x
        a, b = self.a, self.b
        f1 = -1j * x**2 - a * x - 1j * b
        f2 = -2j * x - a
        e = np.exp(self.exponent(x))
        psi = p0 * e
        d2 = (p2 + 2 * p1 * f1 + p0 * (f2 + f1 * f1)) * e
        V = QESQuartic(a, b, self.J)(x)
        res = -d2 + V * psi - self.E * psi
        return np.abs(res) / (np.abs(V * psi) + np.abs(self.E * psi) + np.abs(d2))


def _pt_phase(c: np.ndarray) -> np.ndarray:
    """Rotate c so that P(iy) has (nearly) real coefficients in y."""
    n = np.arange(len(c))
    y_coeffs = c * (1j**n)
    big = np.argmax(np.abs(y_coeffs))
    phase = y_coeffs[big] / abs(y_coeffs[big])
    return c / phase


def qes_spectrum(a: float, b: float, J: int) -> list[QESEigenfunction]:
    if J > 64:
        raise ValueError("dense solve limited to J <= 64")
    M = build_qes_matrix(a, b, J)
    evals, evecs = np.linalg.eig(M)
    order = np.lexsort((evals.imag, evals.real))
    out = []
    complex_pairs = []
    for k, idx in enumerate(order, start=1):
        E = evals[idx]
        c = _pt_phase(evecs[:, idx])
        c = c / np.abs(c).max()
        if abs(E.imag) > REALNESS_TOL * max(1.0, abs(E)):
            complex_pairs.append(complex(E))
            E_use = complex(E)
        else:
            E_use = float(E.real)
        res = recursion_residual(a, b, J, E_use, c)
        out.append(QESEigenfunction(k, float(E.real), c, a, b, J, float(E.imag), res))
    if complex_pairs:
        warnings.warn(
            f"non-real QES eigenvalues (a^2+4b={a * a + 4 * b:g} below the reality threshold?): {complex_pairs}",
            ComplexSpectrum,
        )
    return out


def companion_matrix(coeffs) -> np.ndarray:
    """Companion matrix of the polynomial with ascending coefficients."""
    c = np.trim_zeros(np.asarray(coeffs, dtype=complex), "b")
    n = len(c) - 1
    if n < 1:
        raise ValueError("polynomial degree must be at least 1")
    comp = np.zeros((n, n), dtype=complex)
    comp[1:, :-1] = np.eye(n - 1)
    comp[:, -1] = -c[:-1] / c[-1]
    return comp


def polynomial_zeros(coeffs, warn: bool = True) -> list[complex]:
    """All roots from companion eigenvalues, each polished by one Newton step."""
    P = np.polynomial.polynomial
    c = np.trim_zeros(np.asarray(coeffs, dtype=complex), "b")
    roots = np.linalg.eigvals(companion_matrix(c))
    dc = P.polyder(c)
    out = []
    n = len(c) - 1
    cmax = np.abs(c).max()
    for r in roots:
        d = P.polyval(r, dc)
        if d != 0:
            step = P.polyval(r, c) / d
            # keep the polish only if it helps
            r2 = r - step
            if abs(P.polyval(r2, c)) <= abs(P.polyval(r, c)):
                r = r2
        bound = 1e-9 * cmax * max(1.0, abs(r)) ** n
        if warn and abs(P.polyval(r, c)) > bound:
            warnings.warn(f"root {r} residual {abs(P.polyval(r, c)):.3e} exceeds {bound:.3e}", IllConditioned)
        out.append(complex(r))
    return out


def _context(dps: int):
    """Private mpmath context; the global one is shared across threads."""
    ctx = mpmath.MPContext()
    ctx.dps = dps
    return ctx


def _backsolve(ctx, a, b, J, E):
    """Coefficients with c[J-1] = 1 from rows J-1..1, plus the row-0 residual
    and its derivative in E."""
    zero = ctx.mpc(0)
    c = [zero] * (J + 2)
    d = [zero] * (J + 2)
    c[J - 1] = ctx.mpc(1)
    two_i = ctx.mpc(0, 2)
    for m in range(J - 1, 0, -1):
        diag = a + b * b + 2 * a * m - E
        den = two_i * (J - m)
        c[m - 1] = (diag * c[m] + two_i * b * (m + 1) * c[m + 1] - (m + 2) * (m + 1) * c[m + 2]) / den
        d[m - 1] = (diag * d[m] - c[m] + two_i * b * (m + 1) * d[m + 1] - (m + 2) * (m + 1) * d[m + 2]) / den
    r0 = (a + b * b - E) * c[0] + two_i * b * c[1] - 2 * c[2]
    dr0 = (a + b * b - E) * d[0] - c[0] + two_i * b * d[1] - 2 * d[2]
    return c[:J], r0, dr0


def refine_qes_state(a: float, b: float, J: int, E_guess: complex, dps: int = QES_DPS, max_step: float = 1.0, ctx=None):
    """Newton refinement of E on the row-0 residual, in extended precision.

    Returns (E, c, relative residual) as mpmath numbers of ``ctx`` (a fresh
    context at ``dps`` digits by default).  Steps are capped at ``max_step``
    so the iteration cannot hop to a neighbouring level.
    """
    ctx = ctx or _context(dps)
    a_, b_ = ctx.mpf(a), ctx.mpf(b)
    E = ctx.mpc(E_guess)
    stop = ctx.mpf(10) ** (-ctx.dps + 6)
    for _ in range(60):
        c, r0, dr0 = _backsolve(ctx, a_, b_, J, E)
        if r0 == 0 or dr0 == 0:
            break
        step = r0 / dr0
        if abs(step) > max_step:
            step *= max_step / abs(step)
        E -= step
        if abs(step) <= stop * abs(E):
            break
    c, r0, _ = _backsolve(ctx, a_, b_, J, E)
    return E, c, r0 / max(abs(v) for v in c)


def _aberth(ctx, c, guesses, maxit: int = 200):
    """Simultaneous Aberth-Ehrlich iteration for all roots (ascending coeffs)."""
    n = len(c) - 1
    dc = [c[i] * i for i in range(1, n + 1)]

    def horner(cs, x):
        r = ctx.mpc(0)
        for v in reversed(cs):
            r = r * x + v
        return r

    z = [ctx.mpc(g) for g in guesses]
    # split exact duplicates so the pairwise sums stay finite
    for i in range(n):
        for j in range(i):
            if z[i] == z[j]:
                z[i] += ctx.mpc(1e-6, 1e-6) * (1 + abs(z[i]))
    # clustered roots cannot be resolved much beyond half the working digits
    stop = ctx.mpf(10) ** (-(ctx.dps // 2))
    floor = ctx.mpf(10) ** -8
    history = []
    for _ in range(maxit):
        biggest = 0
        for i in range(n):
            p = horner(c, z[i])
            if p == 0:
                continue
            ratio = p / horner(dc, z[i])
            s = ctx.fsum(1 / (z[i] - z[j]) for j in range(n) if j != i)
            w = ratio / (1 - ratio * s)
            z[i] -= w
            biggest = max(biggest, abs(w) / max(1, abs(z[i])))
        if biggest < stop:
            break
        # past quadratic convergence the corrections only bounce on the
        # rounding floor set by the cluster conditioning
        history.append(biggest)
        if len(history) >= 3 and biggest < floor and biggest > history[-3] / 4:
            break
    return z


def qes_zeros(ef: "QESEigenfunction", dps: int = QES_DPS) -> list[complex]:
    """Zeros of the polynomial factor, resolved in extended precision.

    Works with Q(y) = P(iy), whose coefficients are real by PT symmetry, so
    simple zeros on the imaginary x axis stay exactly on it.
    """
    J = ef.J
    if J == 1:
        return []
    ctx = _context(dps)
    eps = ctx.mpf(10) ** (-(dps // 2))
    E, c, _ = refine_qes_state(ef.a, ef.b, J, ef.E + 1j * ef.E_imag, ctx=ctx)
    unit = ctx.mpc(0, 1)
    y = [c[n] * unit**n for n in range(J)]
    big = max(y, key=abs)
    y = [v / big for v in y]
    pt_real = max(abs(ctx.im(v)) for v in y) < eps
    if pt_real:
        y = [ctx.mpf(ctx.re(v)) for v in y]
    guesses = np.roots(np.array([complex(v) for v in y[::-1]]))
    roots = _aberth(ctx, y, guesses)
    out = []
    for r in roots:
        if pt_real and abs(ctx.im(r)) < eps * max(1, abs(r)):
            r = ctx.mpc(ctx.re(r), 0)
        out.append(complex(unit * r))
    return sorted(out, key=lambda z: (z.real, z.imag))


@dataclass
class ZeroClassification:
    relevant: list[complex] = field(default_factory=list)
    irrelevant: list[complex] = field(default_factory=list)


def classify_zeros(zeros, axis_tol: float | None = None) -> ZeroClassification:
    """Zeros on the positive imaginary axis (the branch cut) are irrelevant."""
    zeros = [complex(z) for z in zeros]
    if axis_tol is None:
        scale = max((abs(z) for z in zeros), default=1.0)
        axis_tol = 1e-6 * scale
    if axis_tol <= 0:
        raise ValueError("axis_tol must be positive")
    out = ZeroClassification()
    for z in zeros:
        if abs(z.real) < axis_tol and z.imag > 0:
            out.irrelevant.append(z)
        else:
            out.relevant.append(z)
    return out
