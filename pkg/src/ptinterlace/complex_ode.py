"""Adaptive Runge-Kutta integration of psi'' = (V(x) - E) psi along complex paths.

Paths are piecewise-linear.  On a segment x = x0 + t*delta, t in [0, 1], the
system integrated is

    d psi/dt  = delta * psi'
    d psi'/dt = delta * (V(x) - E) * psi

with the Dormand-Prince 5(4) pair and a PI step-size controller.  The same
stepping code runs on Python complex scalars (one path) and on numpy arrays
(a batch of parallel, equally long segments such as the rows of a grid).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import BranchAmbiguity, IntegrationOverflow, StepUnderflow

OVERFLOW_CEILING = 1e150

# Dormand-Prince 5(4) tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B = _A[6] + (0.0,)
# difference between 5th and embedded 4th order weights
_E = (
    71 / 57600,
    0.0,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
)

_SAFETY = 0.9
_BETA = 0.04
_ALPHA = 0.2 - 0.75 * _BETA
_FAC_MIN, _FAC_MAX = 0.2, 10.0


@dataclass(frozen=True)
class Tolerances:
    rel: float = 1e-11
    abs: float = 1e-300
    max_step: float = math.inf
    min_step: float = 1e-13

    def __post_init__(self):
        if not (self.rel > 0 and self.abs > 0):
            raise ValueError("rel and abs tolerances must be positive")
        if not 0 < self.min_step <= self.max_step:
            raise ValueError("need 0 < min_step <= max_step")


@dataclass
class ODEState:
    x: complex
    psi: complex
    dpsi: complex


class Contour:
    """Oriented piecewise-linear path through the given anchors."""

    def __init__(self, anchors: Sequence[complex]):
        anchors = [complex(a) for a in anchors]
        if len(anchors) < 2:
            raise ValueError("a contour needs at least two anchors")
        for a, b in zip(anchors, anchors[1:]):
            if a == b:
                raise ValueError(f"consecutive anchors coincide at {a}")
        for a in anchors:
            if not cmath.isfinite(a):
                raise ValueError(f"non-finite anchor {a}")
        self.anchors = anchors

    @property
    def start(self) -> complex:
        return self.anchors[0]

    @property
    def end(self) -> complex:
        return self.anchors[-1]

    @property
    def segments(self):
        return list(zip(self.anchors, self.anchors[1:]))

    @property
    def length(self) -> float:
        return sum(abs(b - a) for a, b in self.segments)

    def __call__(self, t: float) -> complex:
        """Point at arc-length fraction t in [0, 1]."""
        target = t * self.length
        for a, b in self.segments:
            seg = abs(b - a)
            if target <= seg:
                return a + (b - a) * (target / seg)
            target -= seg
        return self.end

    def reversed(self) -> "Contour":
        return Contour(self.anchors[::-1])

    def mirrored(self) -> "Contour":
        """PT image x -> -conj(x)."""
        return Contour([-a.conjugate() for a in self.anchors])

    def __repr__(self):
        return f"Contour({self.anchors!r})"


@dataclass
class SegmentResult:
    t: np.ndarray
    x: np.ndarray
    psi: np.ndarray
    dpsi: np.ndarray
    # rows that hit the overflow ceiling (batch mode with mask_overflow only)
    masked: np.ndarray | None = None
    n_steps: int = 0


def _amplitude(psi, dpsi, kappa):
    return np.maximum(np.abs(psi), np.abs(dpsi) / kappa)


def integrate_segment(
    V,
    E: float,
    x0,
    delta: complex,
    psi0,
    dpsi0,
    tol: Tolerances = Tolerances(),
    stops: Sequence[float] | None = None,
    dense: bool = True,
    mask_overflow: bool = False,
) -> SegmentResult:
    """Advance (psi, psi') from x0 to x0 + delta.

    ``x0``, ``psi0`` and ``dpsi0`` may be arrays (a batch sharing ``delta``).
    ``stops`` are t-values in (0, 1] where a state is always recorded; steps
    are clipped to land on them exactly.  With ``dense`` every accepted step
    is recorded as well.
    """
    batch = np.ndim(x0) > 0 or np.ndim(psi0) > 0
    if batch:
        x0 = np.asarray(x0, dtype=complex)
        psi = np.array(np.broadcast_to(psi0, x0.shape), dtype=complex)
        dpsi = np.array(np.broadcast_to(dpsi0, x0.shape), dtype=complex)
        alive = np.ones(x0.shape, dtype=bool)
    else:
        x0, psi, dpsi = complex(x0), complex(psi0), complex(dpsi0)
        alive = None
    delta = complex(delta)
    length = abs(delta)
    if length == 0:
        raise ValueError("zero-length segment")

    stop_list = sorted({float(s) for s in (() if stops is None else stops) if 0 < s <= 1} | {1.0})
    if not batch:
        return _integrate_scalar(V, E, x0, delta, psi, dpsi, tol, stop_list, dense)
    max_dt = min(1.0, tol.max_step / length)
    min_dt = tol.min_step / length

    def rhs(t, p, dp):
        x = x0 + t * delta
        return delta * dp, delta * (V(x) - E) * p

    def kappa_at(t):
        q = np.abs(V(x0 + t * delta) - E)
        return np.maximum(1.0, np.sqrt(q))

    ts, psis, dpsis = [0.0], [psi], [dpsi]
    t = 0.0
    k0 = float(np.max(kappa_at(0.0))) * length
    dt_ctrl = min(max_dt, 0.01 / k0)
    err_old = 1e-4
    f0 = rhs(0.0, psi, dpsi)
    n_steps = 0
    stop_idx = 0

    while stop_idx < len(stop_list):
        target = stop_list[stop_idx]
        clipped = t + dt_ctrl >= target - 1e-15
        dt = target - t if clipped else dt_ctrl
        if dt < min_dt and not clipped:
            raise StepUnderflow(
                f"step {dt * length:.3e} below min_step at x={x0 + t * delta} (E={E})"
            )

        kp, kd = [f0[0]], [f0[1]]
        for i in range(1, 7):
            p = psi
            d = dpsi
            for j, aij in enumerate(_A[i]):
                if aij:
                    p = p + dt * aij * kp[j]
                    d = d + dt * aij * kd[j]
            fp, fd = rhs(t + _C[i] * dt, p, d)
            kp.append(fp)
            kd.append(fd)
        # A[6] equals the 5th-order weights, so (p, d) is the new solution (FSAL)
        p_new, d_new = p, d
        ep = sum(dt * e * k for e, k in zip(_E, kp) if e)
        ed = sum(dt * e * k for e, k in zip(_E, kd) if e)

        kap = kappa_at(t + dt)
        scale = tol.abs + tol.rel * np.maximum(
            _amplitude(psi, dpsi, kap), _amplitude(p_new, d_new, kap)
        )
        ratio = np.maximum(np.abs(ep), np.abs(ed) / kap) / scale
        if batch:
            ratio = ratio[alive]
        err = float(np.max(ratio)) if np.size(ratio) else 0.0
        if not math.isfinite(err):
            err = 1e10

        if err <= 1.0:
            t = target if clipped else t + dt
            psi, dpsi = p_new, d_new
            f0 = (kp[6], kd[6])
            n_steps += 1
            if batch:
                over = alive & ~(np.abs(psi) <= OVERFLOW_CEILING)
                if over.any():
                    if not mask_overflow:
                        raise IntegrationOverflow(_overflow_msg(x0, delta, t, E))
                    alive &= ~over
                    psi = np.where(alive, psi, 0)
                    dpsi = np.where(alive, dpsi, 0)
                    f0 = rhs(t, psi, dpsi)
            elif not abs(psi) <= OVERFLOW_CEILING:
                raise IntegrationOverflow(_overflow_msg(x0, delta, t, E))
            if clipped:
                stop_idx += 1
            if dense or clipped:
                ts.append(t)
                psis.append(psi)
                dpsis.append(dpsi)
            fac = _SAFETY * max(err, 1e-10) ** (-_ALPHA) * err_old**_BETA
            err_old = max(err, 1e-4)
            if not clipped:
                dt_ctrl = min(max_dt, dt * min(_FAC_MAX, max(_FAC_MIN, fac)))
        else:
            dt_ctrl = dt * max(_FAC_MIN, _SAFETY * err ** (-_ALPHA))
            if dt_ctrl < min_dt:
                raise StepUnderflow(
                    f"step {dt_ctrl * length:.3e} below min_step at x={x0 + t * delta} (E={E})"
                )

    t_arr = np.asarray(ts)
    if batch:
        psi_arr = np.stack(psis)
        dpsi_arr = np.stack(dpsis)
        x_arr = x0[None, :] + t_arr[:, None] * delta
        masked = ~alive
        if masked.any():
            psi_arr[:, masked] = np.nan
            dpsi_arr[:, masked] = np.nan
    else:
        psi_arr = np.asarray(psis)
        dpsi_arr = np.asarray(dpsis)
        x_arr = x0 + t_arr * delta
        masked = None
    return SegmentResult(t_arr, x_arr, psi_arr, dpsi_arr, masked, n_steps)


def _integrate_scalar(V, E, x0, delta, psi, dpsi, tol, stop_list, dense):
    """Pure-Python twin of the batch loop with the stages unrolled."""
    length = abs(delta)
    max_dt = min(1.0, tol.max_step / length)
    min_dt = tol.min_step / length
    rel, atol = tol.rel, tol.abs
    sqrt = math.sqrt
    a21 = 1 / 5
    a31, a32 = 3 / 40, 9 / 40
    a41, a42, a43 = 44 / 45, -56 / 15, 32 / 9
    a51, a52, a53, a54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
    a61, a62, a63, a64, a65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
    b1, b3, b4, b5, b6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
    e1, e3, e4, e5, e6, e7 = _E[0], _E[2], _E[3], _E[4], _E[5], _E[6]

    def g(x):
        return delta * (V(x) - E)

    ts, psis, dpsis = [0.0], [psi], [dpsi]
    t = 0.0
    q0 = sqrt(abs(V(x0) - E))
    dt_ctrl = min(max_dt, 0.01 / (max(q0, 1.0) * length))
    err_old = 1e-4
    gp = g(x0)
    kp1, kd1 = delta * dpsi, gp * psi
    n_steps = 0
    stop_idx = 0
    n_stops = len(stop_list)
    while stop_idx < n_stops:
        target = stop_list[stop_idx]
        clipped = t + dt_ctrl >= target - 1e-15
        h = target - t if clipped else dt_ctrl
        if h < min_dt and not clipped:
            raise StepUnderflow(
                f"step {h * length:.3e} below min_step at x={x0 + t * delta} (E={E})"
            )
        xs = x0 + t * delta
        hd = h * delta

        p = psi + h * a21 * kp1
        d = dpsi + h * a21 * kd1
        kp2, kd2 = delta * d, g(xs + 0.2 * hd) * p
        p = psi + h * (a31 * kp1 + a32 * kp2)
        d = dpsi + h * (a31 * kd1 + a32 * kd2)
        kp3, kd3 = delta * d, g(xs + 0.3 * hd) * p
        p = psi + h * (a41 * kp1 + a42 * kp2 + a43 * kp3)
        d = dpsi + h * (a41 * kd1 + a42 * kd2 + a43 * kd3)
        kp4, kd4 = delta * d, g(xs + 0.8 * hd) * p
        p = psi + h * (a51 * kp1 + a52 * kp2 + a53 * kp3 + a54 * kp4)
        d = dpsi + h * (a51 * kd1 + a52 * kd2 + a53 * kd3 + a54 * kd4)
        kp5, kd5 = delta * d, g(xs + (8 / 9) * hd) * p
        p = psi + h * (a61 * kp1 + a62 * kp2 + a63 * kp3 + a64 * kp4 + a65 * kp5)
        d = dpsi + h * (a61 * kd1 + a62 * kd2 + a63 * kd3 + a64 * kd4 + a65 * kd5)
        x_end = xs + hd
        kp6, kd6 = delta * d, g(x_end) * p
        p = psi + h * (b1 * kp1 + b3 * kp3 + b4 * kp4 + b5 * kp5 + b6 * kp6)
        d = dpsi + h * (b1 * kd1 + b3 * kd3 + b4 * kd4 + b5 * kd5 + b6 * kd6)
        g7 = g(x_end)
        kp7, kd7 = delta * d, g7 * p

        ep = h * (e1 * kp1 + e3 * kp3 + e4 * kp4 + e5 * kp5 + e6 * kp6 + e7 * kp7)
        ed = h * (e1 * kd1 + e3 * kd3 + e4 * kd4 + e5 * kd5 + e6 * kd6 + e7 * kd7)
        kap = sqrt(abs(g7) / length)
        if kap < 1.0:
            kap = 1.0
        amp = max(abs(psi), abs(dpsi) / kap, abs(p), abs(d) / kap)
        err = max(abs(ep), abs(ed) / kap) / (atol + rel * amp)
        if err != err:
            err = 1e10
        if err <= 1.0:
            t = target if clipped else t + h
            psi, dpsi = p, d
            kp1, kd1 = kp7, kd7
            n_steps += 1
            if not abs(psi) <= OVERFLOW_CEILING:
                raise IntegrationOverflow(_overflow_msg(x0, delta, t, E))
            if clipped:
                stop_idx += 1
            if dense or clipped:
                ts.append(t)
                psis.append(psi)
                dpsis.append(dpsi)
            fac = _SAFETY * max(err, 1e-10) ** (-_ALPHA) * err_old**_BETA
            err_old = max(err, 1e-4)
            if not clipped:
                dt_ctrl = min(max_dt, h * min(_FAC_MAX, max(_FAC_MIN, fac)))
        else:
            dt_ctrl = h * max(_FAC_MIN, _SAFETY * err ** (-_ALPHA))
            if dt_ctrl < min_dt:
                raise StepUnderflow(
                    f"step {dt_ctrl * length:.3e} below min_step at x={x0 + t * delta} (E={E})"
                )
    t_arr = np.asarray(ts)
    return SegmentResult(t_arr, x0 + t_arr * delta, np.asarray(psis), np.asarray(dpsis), None, n_steps)


def _overflow_msg(x0, delta, t, E):
    where = x0 + t * delta
    return f"|psi| exceeded {OVERFLOW_CEILING:g} near x={where} (E={E}); integrating into a growth region"


def integrate_schrodinger(
    spec, E: float, contour: Contour, init: ODEState, tol: Tolerances = Tolerances(), dense: bool = True
) -> list[ODEState]:
    """Integrate along every segment of ``contour`` starting from ``init``.

    Returns the state at each accepted step (``dense``) or only at the
    anchors; the last element is the state at the contour end.
    """
    if abs(init.x - contour.start) > 1e-12 * max(1.0, abs(contour.start)):
        raise ValueError(f"initial state at {init.x} but contour starts at {contour.start}")
    psi, dpsi = init.psi, init.dpsi
    out = [ODEState(contour.start, psi, dpsi)]
    for a, b in contour.segments:
        res = integrate_segment(spec, E, a, b - a, psi, dpsi, tol, dense=dense)
        for x, p, d in zip(res.x[1:], res.psi[1:], res.dpsi[1:]):
            out.append(ODEState(complex(x), complex(p), complex(d)))
        out[-1].x = b
        psi, dpsi = complex(res.psi[-1]), complex(res.dpsi[-1])
    return out


def propagate(spec, E: float, anchors: Sequence[complex], psi: complex, dpsi: complex, tol: Tolerances = Tolerances()):
    """(psi, psi') at the last anchor; no samples kept."""
    for a, b in zip(anchors, anchors[1:]):
        if a == b:
            continue
        res = integrate_segment(spec, E, a, b - a, psi, dpsi, tol, dense=False)
        psi, dpsi = complex(res.psi[-1]), complex(res.dpsi[-1])
    return psi, dpsi


def decay_root(Q: complex, inward: complex, ambiguity_tol: float = 1e-8) -> complex:
    """Branch of sqrt(Q) that makes psi grow toward ``inward``.

    The decaying-outward solution has psi'/psi = kappa with
    Re(kappa * d) > 0 for the unit inward direction d.
    """
    d = inward / abs(inward)
    kappa = cmath.sqrt(Q)
    proj = (kappa * d).real
    if abs(proj) <= ambiguity_tol * abs(kappa):
        raise BranchAmbiguity(
            f"Re(sqrt(Q)*d) ~ 0 (Q={Q}, d={d}); seed point lies on an anti-Stokes direction"
        )
    return kappa if proj > 0 else -kappa


def wkb_seed(spec, E: float, x0: complex, inward_direction: complex) -> ODEState:
    """Leading-order WKB initial data for the solution decaying away from x0's wedge."""
    Q = spec(x0) - E
    kappa = decay_root(Q, inward_direction)
    psi = Q ** -0.25
    return ODEState(x0, psi, kappa * psi)
