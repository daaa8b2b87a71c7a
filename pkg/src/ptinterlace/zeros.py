"""Complex zeros of numerically integrated eigenfunctions.

The eigenfunction is tabulated on a rectangular grid: first down (or up) a
vertical spine through the matching point, then outward along each row.
Cells in which both Re psi and Im psi change sign are intersected
bilinearly, and every candidate is polished by Newton's method with short
re-integrations from the nearest grid sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .complex_ode import ODEState, Tolerances, integrate_segment, propagate, wkb_seed
from .errors import DerivativeVanishes, IntegrationOverflow, NoConvergence
from .potentials import Monomial, turning_points
from .shooting import Eigenpair, WedgePair, unit_stokes_path

MAX_NEWTON = 30
DEFAULT_NX = 201
DEFAULT_NY = 101
DEFAULT_PAD = 0.2


@dataclass(frozen=True)
class GridRegion:
    re_min: float
    re_max: float
    im_min: float
    im_max: float
    nx: int = DEFAULT_NX
    ny: int = DEFAULT_NY

    def __post_init__(self):
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise ValueError(f"empty region {self}")
        if self.nx < 8 or self.ny < 8:
            raise ValueError("grid needs at least 8 points per direction")

    @property
    def re(self) -> np.ndarray:
        return np.linspace(self.re_min, self.re_max, self.nx)

    @property
    def im(self) -> np.ndarray:
        return np.linspace(self.im_min, self.im_max, self.ny)

    @property
    def cell(self) -> tuple[float, float]:
        return (self.re_max - self.re_min) / (self.nx - 1), (self.im_max - self.im_min) / (self.ny - 1)

    @property
    def cell_size(self) -> float:
        return min(self.cell)

    def contains(self, z: complex) -> bool:
        return self.re_min <= z.real <= self.re_max and self.im_min <= z.imag <= self.im_max

    def refined(self, factor: int = 2) -> "GridRegion":
        """Same box with the spacing divided by ``factor``."""
        return GridRegion(
            self.re_min, self.re_max, self.im_min, self.im_max,
            factor * (self.nx - 1) + 1, factor * (self.ny - 1) + 1,
        )


@dataclass
class FieldSample:
    region: GridRegion
    psi: np.ndarray  # shape (ny, nx), row j at Im = region.im[j]
    dpsi: np.ndarray
    masked_rows: np.ndarray = None  # bool per row; masked rows hold NaN
    # relative mismatch of the two wedge solutions along the spine (two-sided fields)
    seam_residual: float = math.nan

    def __post_init__(self):
        shape = (self.region.ny, self.region.nx)
        if self.psi.shape != shape or self.dpsi.shape != shape:
            raise ValueError(f"field arrays must have shape {shape}")
        if self.masked_rows is None:
            self.masked_rows = np.zeros(self.region.ny, dtype=bool)

    @classmethod
    def from_function(cls, region: GridRegion, f, df=None) -> "FieldSample":
        X, Y = np.meshgrid(region.re, region.im)
        Z = X + 1j * Y
        psi = np.asarray(f(Z), dtype=complex)
        dpsi = np.asarray(df(Z), dtype=complex) if df is not None else np.zeros_like(psi)
        return cls(region, psi, dpsi)

    def point(self, j: int, i: int) -> complex:
        return complex(self.region.re[i], self.region.im[j])

    def nearest_state(self, z: complex) -> ODEState:
        """Grid sample closest to z among unmasked rows."""
        re, im = self.region.re, self.region.im
        i = int(np.argmin(np.abs(re - z.real)))
        rows = np.flatnonzero(~self.masked_rows)
        if rows.size == 0:
            raise ValueError("every row of the field is masked")
        j = int(rows[np.argmin(np.abs(im[rows] - z.imag))])
        return ODEState(self.point(j, i), complex(self.psi[j, i]), complex(self.dpsi[j, i]))


@dataclass
class ZeroSet:
    k: int
    zeros: list[complex]
    newton_residuals: list[float]
    E: float = math.nan
    # True for zeros strictly between the turning points in Re (the arch strip)
    in_arch: list[bool] = field(default_factory=list)
    candidates: list[complex] = field(default_factory=list)
    # candidates outside the arch strip on which Newton gave up
    unconverged: list[complex] = field(default_factory=list)
    masked_rows: int = 0

    def __len__(self):
        return len(self.zeros)

    @property
    def arch_zeros(self) -> list[complex]:
        flags = self.in_arch or [True] * len(self.zeros)
        return [z for z, a in zip(self.zeros, flags) if a]


def arch_strip(spec, E: float):
    """(lo, hi) in Re between the PT turning-point pair."""
    tp = turning_points(spec, E)
    lo, hi = sorted((tp.x_minus.real, tp.x_plus.real))
    return lo, hi


def default_region(spec, E: float, pad: float = DEFAULT_PAD, nx: int = DEFAULT_NX, ny: int = DEFAULT_NY) -> GridRegion:
    """Bounding box of the Stokes arch padded by ``pad * |x_+ - x_-|`` on every side.

    Padding by the turning-point separation keeps the box proportional to the
    arch; for large N the arch is a thin sliver of width ~ 2 pi |x_TP| / N and
    a pad tied to |x_TP| would reach deep into the growth regions.
    """
    if isinstance(spec, Monomial):
        arch = unit_stokes_path(spec.N).samples * E ** (1 / spec.N)
    else:
        from .wkb import trace_stokes_line

        arch = trace_stokes_line(spec, E).samples
    tp = turning_points(spec, E)
    margin = pad * abs(tp.x_plus - tp.x_minus)
    pts = np.concatenate([arch, [tp.x_minus, tp.x_plus]])
    return GridRegion(
        float(pts.real.min() - margin), float(pts.real.max() + margin),
        float(pts.imag.min() - margin), float(pts.imag.max() + margin),
        nx, ny,
    )


def _reference_state(spec: Monomial, E: float, tol: Tolerances, wedges: WedgePair | None) -> ODEState:
    """Right-wedge solution at the matching point, scaled to unit amplitude."""
    wedges = wedges or WedgePair(spec.N)
    right = wedges.right_contour(E)
    seed = wkb_seed(spec, E, right.start, right.anchors[1] - right.start)
    psi, dpsi = propagate(spec, E, right.anchors, seed.psi, seed.dpsi, tol)
    kappa = max(1.0, abs(spec(right.end) - E) ** 0.5)
    amp = math.hypot(abs(psi), abs(dpsi) / kappa)
    return ODEState(right.end, psi / amp, dpsi / amp)


def _sweep(spec, E, x0, delta, psi0, dpsi0, positions, tol):
    """States at x0 + positions (positions along ``delta``, each in (0, |delta|])."""
    t = np.asarray(positions) / abs(delta)
    res = integrate_segment(spec, E, x0, delta, psi0, dpsi0, tol, stops=t, dense=False, mask_overflow=np.ndim(x0) > 0)
    return res.psi[1:], res.dpsi[1:], res.masked


def evaluate_on_grid(
    spec,
    E: float,
    region: GridRegion | None = None,
    tol: Tolerances = Tolerances(),
    init: ODEState | None = None,
    wedges: WedgePair | None = None,
) -> FieldSample:
    """Tabulate psi and psi' on ``region``.

    With ``init`` the solution through that state is tabulated by a vertical
    spine through Re(init.x) and outward row sweeps.  Without it (monomials)
    the eigenfunction is assembled from both wedge solutions: see
    ``_two_sided_field``.
    """
    region = region or default_region(spec, E)
    if init is None:
        if not isinstance(spec, Monomial):
            raise TypeError("an initial state is required for non-monomial potentials")
        return _two_sided_field(spec, E, region, tol, wedges or WedgePair(spec.N))
    return _spine_field(spec, E, region, tol, init)


def _spine_field(spec, E, region, tol, init) -> FieldSample:
    re, im = region.re, region.im
    spine_x = min(max(init.x.real, region.re_min), region.re_max)
    base = complex(spine_x, init.x.imag)
    psi0, dpsi0 = init.psi, init.dpsi
    if base != init.x:
        psi0, dpsi0 = propagate(spec, E, [init.x, base], psi0, dpsi0, tol)

    # spine: values at (spine_x, im[j]) for every row
    spine_psi = np.empty(region.ny, dtype=complex)
    spine_dpsi = np.empty(region.ny, dtype=complex)
    up = im > base.imag
    down = im < base.imag
    same = ~(up | down)
    spine_psi[same], spine_dpsi[same] = psi0, dpsi0
    if up.any():
        span = im[up].max() - base.imag
        p, d, _ = _sweep(spec, E, base, 1j * span, psi0, dpsi0, im[up] - base.imag, tol)
        spine_psi[up], spine_dpsi[up] = p, d
    if down.any():
        offs = base.imag - im[down]
        span = offs.max()
        # stops must be increasing along the sweep
        order = np.argsort(offs)
        p, d, _ = _sweep(spec, E, base, -1j * span, psi0, dpsi0, offs[order], tol)
        idx = np.flatnonzero(down)[order]
        spine_psi[idx], spine_dpsi[idx] = p, d

    psi = np.empty((region.ny, region.nx), dtype=complex)
    dpsi = np.empty_like(psi)
    masked = np.zeros(region.ny, dtype=bool)
    starts = spine_x + 1j * im
    right = re > spine_x
    left = re < spine_x
    centre = ~(right | left)
    psi[:, centre] = spine_psi[:, None]
    dpsi[:, centre] = spine_dpsi[:, None]
    if right.any():
        offs = re[right] - spine_x
        p, d, m = _sweep(spec, E, starts, offs.max(), spine_psi, spine_dpsi, offs, tol)
        psi[:, right], dpsi[:, right] = p.T, d.T
        masked |= m
    if left.any():
        offs = spine_x - re[left]
        order = np.argsort(offs)
        p, d, m = _sweep(spec, E, starts, -offs.max(), spine_psi, spine_dpsi, offs[order], tol)
        cols = np.flatnonzero(left)[order]
        psi[:, cols], dpsi[:, cols] = p.T, d.T
        masked |= m
    psi[masked] = np.nan
    dpsi[masked] = np.nan
    return FieldSample(region, psi, dpsi, masked)


def _half_field(spec, E, region, tol, seed: ODEState, edge: float, spine_x: float):
    """Rows started by direct integration from ``seed`` (a state on the wedge
    ray) to (edge, im_j) and
    swept toward the spine.  Returns column indices, psi, dpsi, masked rows
    and the state at the spine of every row."""
    re, im = region.re, region.im
    ny = region.ny
    start_psi = np.empty(ny, dtype=complex)
    start_dpsi = np.empty(ny, dtype=complex)
    masked = np.zeros(ny, dtype=bool)
    for j in range(ny):
        try:
            start_psi[j], start_dpsi[j] = propagate(spec, E, [seed.x, complex(edge, im[j])], seed.psi, seed.dpsi, tol)
        except IntegrationOverflow:
            masked[j] = True
            start_psi[j] = start_dpsi[j] = 0
    span = spine_x - edge
    if edge > spine_x:
        cols = np.flatnonzero((re >= spine_x) & (re < edge))[::-1]
    else:
        cols = np.flatnonzero((re <= spine_x) & (re > edge))
    edge_col = np.flatnonzero(re == edge)
    offs = np.abs(re[cols] - edge)
    stops = np.append(offs, abs(span)) if not offs.size or offs[-1] < abs(span) else offs
    p, d, m = _sweep(spec, E, edge + 1j * im, span, start_psi, start_dpsi, stops, tol)
    masked |= m
    all_cols = np.concatenate([edge_col, cols])
    P = np.concatenate([start_psi[None, :], p[: len(cols)]])
    D = np.concatenate([start_dpsi[None, :], d[: len(cols)]])
    return all_cols, P.T, D.T, masked, p[-1], d[-1]


def _two_sided_field(spec: Monomial, E: float, region: GridRegion, tol: Tolerances, wedges: WedgePair) -> FieldSample:
    """Eigenfunction on the grid from its two wedge solutions.

    Columns right of the spine (Re x = Re x_m, clamped into the region) come
    from the right-wedge solution, the others from its PT image in the left
    wedge.  Every row is entered from the wedge side and swept toward the
    spine, so no integration runs in the direction in which the eigenfunction
    is exponentially subdominant.  The left solution is scaled onto the right
    one at the matching point and both are normalized to unit amplitude
    there.  The seam mismatch along the spine is kept as a diagnostic: it is
    tiny only at an eigenvalue and when the tabulation is path independent.
    """
    right = wedges.right_contour(E)
    left = right.mirrored()
    seed_R = wkb_seed(spec, E, right.start, right.anchors[1] - right.start)
    seed_L = ODEState(left.start, seed_R.psi.conjugate(), -seed_R.dpsi.conjugate())
    x_m = right.end
    kappa = max(1.0, abs(spec(x_m) - E) ** 0.5)
    pR, dR = propagate(spec, E, right.anchors, seed_R.psi, seed_R.dpsi, tol)
    pL, dL = propagate(spec, E, left.anchors, seed_L.psi, seed_L.dpsi, tol)
    amp = math.hypot(abs(pR), abs(dR) / kappa)
    # least-squares scale taking the left solution onto the right at x_m
    c = (pR * pL.conjugate() + dR * dL.conjugate() / kappa**2) / (abs(pL) ** 2 + abs(dL) ** 2 / kappa**2)
    # rows share the leg from the seed to the ray point at the turning radius
    ray = right.anchors[1]
    qR, qdR = propagate(spec, E, right.anchors[:2], seed_R.psi, seed_R.dpsi, tol)
    qL, qdL = propagate(spec, E, left.anchors[:2], seed_L.psi, seed_L.dpsi, tol)
    seed_R = ODEState(ray, qR / amp, qdR / amp)
    seed_L = ODEState(-ray.conjugate(), qL * c / amp, qdL * c / amp)

    spine_x = min(max(x_m.real, region.re_min), region.re_max)
    psi = np.full((region.ny, region.nx), np.nan, dtype=complex)
    dpsi = np.full_like(psi, np.nan)
    cr, PR, DR, mR, sR, sdR = _half_field(spec, E, region, tol, seed_R, region.re_max, spine_x)
    cl, PL, DL, mL, sL, sdL = _half_field(spec, E, region, tol, seed_L, region.re_min, spine_x)
    psi[:, cl], dpsi[:, cl] = PL, DL
    # the right solution owns the spine column
    psi[:, cr], dpsi[:, cr] = PR, DR
    masked = mR | mL
    psi[masked] = np.nan
    dpsi[masked] = np.nan

    kap = np.maximum(1.0, np.sqrt(np.abs(spec(spine_x + 1j * region.im) - E)))
    scale = np.hypot(np.abs(sR), np.abs(sdR) / kap)
    seam = np.hypot(np.abs(sR - sL), np.abs(sdR - sdL) / kap) / scale
    seam = float(np.max(seam[~masked])) if (~masked).any() else math.nan
    return FieldSample(region, psi, dpsi, masked, seam)


def _cell_intersection(f00, f10, f01, f11, slack: float = 1e-9):
    """Real (s, t) in the unit square where the bilinear interpolant vanishes."""
    big = max(abs(f00), abs(f10), abs(f01), abs(f11))
    if not big > 0:
        return None
    f00, f10, f01, f11 = f00 / big, f10 / big, f01 / big, f11 / big
    a = f00
    b = f10 - f00
    c = f01 - f00
    d = f11 - f10 - f01 + f00
    # t = -(a + bs)/(c + ds) must be real: Im[(a + bs) conj(c + ds)] = 0
    q2 = (b * d.conjugate()).imag
    q1 = (a * d.conjugate() + b * c.conjugate()).imag
    q0 = (a * c.conjugate()).imag
    if abs(q2) > 1e-14 * (abs(q1) + abs(q0)):
        disc = q1 * q1 - 4 * q2 * q0
        if disc < 0:
            return None
        r = math.sqrt(disc)
        ss = [(-q1 + r) / (2 * q2), (-q1 - r) / (2 * q2)]
    elif q1 != 0:
        ss = [-q0 / q1]
    else:
        return None
    for s in ss:
        if not -slack <= s <= 1 + slack:
            continue
        den = c + d * s
        if den == 0:
            continue
        t = (-(a + b * s) / den).real
        if -slack <= t <= 1 + slack:
            return min(max(s, 0.0), 1.0), min(max(t, 0.0), 1.0)
    return None


def locate_zeros(field: FieldSample) -> list[complex]:
    """One candidate per cell where Re psi and Im psi both change sign and
    their bilinear zero curves cross inside the cell."""
    psi = field.psi
    u, v = psi.real, psi.imag

    def changes(a):
        c = np.stack([a[:-1, :-1], a[:-1, 1:], a[1:, :-1], a[1:, 1:]])
        return (c.min(axis=0) <= 0) & (c.max(axis=0) >= 0)

    with np.errstate(invalid="ignore"):
        flagged = changes(u) & changes(v) & np.isfinite(psi[:-1, :-1] + psi[1:, 1:] + psi[:-1, 1:] + psi[1:, :-1])
    re, im = field.region.re, field.region.im
    out = []
    for j, i in zip(*np.nonzero(flagged)):
        st = _cell_intersection(psi[j, i], psi[j, i + 1], psi[j + 1, i], psi[j + 1, i + 1])
        if st is None:
            continue
        s, t = st
        out.append(complex(re[i] + s * (re[i + 1] - re[i]), im[j] + t * (im[j + 1] - im[j])))
    return _dedupe(out, 0.25 * field.region.cell_size)


def _dedupe(points, min_sep):
    kept = []
    for z in points:
        if all(abs(z - w) > min_sep for w in kept):
            kept.append(z)
    return kept


def newton_zero(func, x0: complex, max_iter: int = MAX_NEWTON, xtol: float = 1e-14, deriv_floor: float = 1e-14):
    """Complex Newton iteration on ``func(x) -> (psi, psi')``.

    Returns (zero, |psi(zero)|, iterations).  Stops once the step is below
    ``xtol * max(1, |x|)``.
    """
    x = complex(x0)
    for it in range(1, max_iter + 1):
        p, d = func(x)
        if abs(d) < deriv_floor:
            raise DerivativeVanishes(f"|psi'| = {abs(d):.3e} at x={x}; multiple zero?")
        step = p / d
        x -= step
        if not (math.isfinite(x.real) and math.isfinite(x.imag)):
            break
        if abs(step) <= xtol * max(1.0, abs(x)):
            p, _ = func(x)
            return x, abs(p), it
    raise NoConvergence(f"Newton did not converge from {x0} in {max_iter} iterations (last x={x})")


def refine_zero(spec, E: float, x0: complex, tol: Tolerances = Tolerances(), anchor: ODEState | None = None, wedges: WedgePair | None = None):
    """Newton-polish a candidate zero; psi and psi' come from re-integrating
    from ``anchor`` (a nearby grid sample) to the current iterate.

    Returns (zero, residual) with residual = |psi| / (|psi'| / kappa), the
    size of psi relative to the local oscillation amplitude.
    """
    if anchor is None:
        if not isinstance(spec, Monomial):
            raise TypeError("an anchor state is required for non-monomial potentials")
        anchor = _reference_state(spec, E, tol, wedges)
    # derivative floor relative to the anchor amplitude
    scale = max(abs(anchor.psi), abs(anchor.dpsi))

    def func(x):
        if x == anchor.x:
            return anchor.psi, anchor.dpsi
        return propagate(spec, E, [anchor.x, x], anchor.psi, anchor.dpsi, tol)

    z, _, _ = newton_zero(func, x0, deriv_floor=1e-14 * scale)
    p, d = func(z)
    kappa = max(1.0, abs(spec(z) - E) ** 0.5)
    return z, abs(p) / (abs(d) / kappa)


def find_zeros(
    spec,
    eigenpair: Eigenpair,
    region: GridRegion | None = None,
    tol: Tolerances = Tolerances(),
    wedges: WedgePair | None = None,
    executor=None,
) -> ZeroSet:
    """Grid, candidates, Newton polish; zeros inside ``region`` sorted by Re."""
    E = eigenpair.E
    region = region or default_region(spec, E)
    fs = evaluate_on_grid(spec, E, region, tol, wedges=wedges)
    cands = locate_zeros(fs)

    lo, hi = arch_strip(spec, E)

    def polish(c):
        try:
            return refine_zero(spec, E, c, tol, anchor=fs.nearest_state(c))
        except NoConvergence:
            # deep in a growth region a candidate can be an aliasing artefact
            if lo < c.real < hi:
                raise
            return c, math.nan

    results = list(executor.map(polish, cands)) if executor is not None else [polish(c) for c in cands]
    unconverged = [z for z, r in results if math.isnan(r)]
    pairs = [(z, r) for z, r in results if not math.isnan(r) and region.contains(z)]
    pairs.sort(key=lambda zr: (zr[0].real, zr[0].imag))
    kept = []
    for z, r in pairs:
        if all(abs(z - w) > 0.25 * region.cell_size for w, _ in kept):
            kept.append((z, r))
    zeros = [z for z, _ in kept]
    return ZeroSet(
        eigenpair.k,
        zeros,
        [r for _, r in kept],
        E,
        [lo < z.real < hi for z in zeros],
        cands,
        unconverged,
        int(fs.masked_rows.sum()),
    )
