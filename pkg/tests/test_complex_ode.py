import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ptinterlace.complex_ode import (
    Contour,
    ODEState,
    Tolerances,
    integrate_schrodinger,
    propagate,
    wkb_seed,
)
from ptinterlace.errors import BranchAmbiguity, IntegrationOverflow, StepUnderflow
from ptinterlace.potentials import Monomial
from ptinterlace.shooting import WedgePair, find_eigenvalues

HO = Monomial(2)
TOL = Tolerances(rel=1e-10)


def test_gaussian_real_segment():
    out = integrate_schrodinger(HO, 1.0, Contour([0, 1]), ODEState(0, 1, 0), TOL)
    assert abs(out[-1].psi - math.exp(-0.5)) < 1e-9
    assert out[-1].x == 1


def test_gaussian_imaginary_segment():
    out = integrate_schrodinger(HO, 1.0, Contour([0, 1j]), ODEState(0, 1, 0), TOL)
    assert abs(out[-1].psi - math.exp(0.5)) < 1e-9


def test_dense_samples_match_gaussian():
    out = integrate_schrodinger(HO, 1.0, Contour([0, 2, 2 + 1j]), ODEState(0, 1, 0), TOL)
    assert len(out) > 3
    for s in out:
        assert abs(s.psi - cmath.exp(-s.x * s.x / 2)) < 1e-8


def test_convergence_order():
    """Endpoint error scales like tol^(p/(p+1)) for a 5(4) pair with local
    error control; check the slope is close to that."""
    errs, tols = [], [1e-6, 1e-7, 1e-8, 1e-9]
    for t in tols:
        out = integrate_schrodinger(HO, 1.0, Contour([0, 3]), ODEState(0, 1, 0), Tolerances(rel=t))
        errs.append(abs(out[-1].psi - math.exp(-4.5)))
    slope = np.polyfit(np.log(tols), np.log(errs), 1)[0]
    assert 0.6 < slope < 1.3


@settings(max_examples=25, deadline=None)
@given(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5), st.integers(2, 5), st.floats(0.5, 5))
def test_path_independence(re, im, N, E):
    spec = Monomial(N)
    tol = Tolerances(rel=1e-10)
    target = complex(1.0, 0.0)
    mid = complex(re, im)
    direct = propagate(spec, E, [0, target], 1.0, 0.0, tol)
    bent = propagate(spec, E, [0, mid, target] if mid not in (0, target) else [0, target], 1.0, 0.0, tol)
    scale = max(1.0, abs(direct[0]))
    assert abs(direct[0] - bent[0]) <= 10 * tol.rel * scale


def test_path_independence_quarter_turn():
    tol = Tolerances(rel=1e-10)
    a = propagate(HO, 1.0, [0, 1], 1.0, 0.0, tol)
    b = propagate(HO, 1.0, [0, 0.5j, 1], 1.0, 0.0, tol)
    assert abs(a[0] - b[0]) <= 10 * tol.rel
    assert abs(a[1] - b[1]) <= 10 * tol.rel


def test_wronskian_conservation():
    spec = Monomial(3)
    E = 2.3
    c = Contour([0, 1 - 0.5j, 1.5 + 0.2j])
    tol = Tolerances(rel=1e-10)
    s1 = integrate_schrodinger(spec, E, c, ODEState(0, 1, 0), tol)
    s2 = integrate_schrodinger(spec, E, c, ODEState(0, 0, 1), tol)
    W0 = s1[0].psi * s2[0].dpsi - s1[0].dpsi * s2[0].psi
    p1 = propagate(spec, E, c.anchors, 1, 0, tol)
    p2 = propagate(spec, E, c.anchors, 0, 1, tol)
    W1 = p1[0] * p2[1] - p1[1] * p2[0]
    assert abs(W1 - W0) <= 10 * tol.rel * max(1, abs(p1[0]) * abs(p2[1]))


def test_decay_along_right_wedge():
    spec = Monomial(3)
    E0 = find_eigenvalues(spec, 2.0)[0].E
    w = WedgePair(3)
    u = cmath.exp(1j * w.theta_right)
    r_tp = E0 ** (1 / 3)
    far = 6 * r_tp
    # integrate inward from the far seed; reversed, |psi| decreases outward
    seed = wkb_seed(spec, E0, far * u, -u)
    out = integrate_schrodinger(spec, E0, Contour([far * u, 1.5 * r_tp * u]), seed, Tolerances(rel=1e-10))
    mags = [abs(s.psi) for s in out]
    assert all(a < b for a, b in zip(mags, mags[1:]))


def test_wkb_seed_harmonic():
    s = wkb_seed(HO, 1.0, 5.0, -1.0)
    assert s.dpsi / s.psi == pytest.approx(-math.sqrt(24))


def test_wkb_seed_cubic_wedge_center():
    spec = Monomial(3)
    x0 = 6 * cmath.exp(-1j * math.pi / 10)
    inward = -x0 / abs(x0)
    s = wkb_seed(spec, 1.0, x0, inward)
    kappa = s.dpsi / s.psi
    assert (kappa * inward).real > 0
    assert abs(kappa * kappa - (spec(x0) - 1.0)) < 1e-10 * abs(spec(x0))


def test_wkb_seed_branch_flip():
    # Q = 24 real positive at x0 = 5
    a = wkb_seed(HO, 1.0, 5.0, 1.0)
    b = wkb_seed(HO, 1.0, 5.0, -1.0)
    assert a.dpsi / a.psi == pytest.approx(-(b.dpsi / b.psi))
    assert (a.dpsi / a.psi).real > 0


def test_branch_ambiguity():
    with pytest.raises(BranchAmbiguity):
        wkb_seed(HO, 1.0, 5.0, 1j)


def test_overflow_is_loud():
    # growing direction for the decaying Gaussian: psi ~ exp(+x^2/2) toward i*inf
    with pytest.raises(IntegrationOverflow):
        propagate(HO, 1.0, [0, 40j], 1.0, 0.0, Tolerances(rel=1e-8))


def test_step_underflow():
    with pytest.raises(StepUnderflow):
        propagate(Monomial(12), 1.0, [0, 30], 1.0, 0.0, Tolerances(rel=1e-12, min_step=1e-2))


def test_tolerances_validation():
    with pytest.raises(ValueError):
        Tolerances(rel=0)
    with pytest.raises(ValueError):
        Tolerances(min_step=1.0, max_step=0.1)


def test_contour_validation():
    with pytest.raises(ValueError):
        Contour([1])
    with pytest.raises(ValueError):
        Contour([0, 0, 1])
    c = Contour([0, 1, 1 + 1j])
    assert c.length == pytest.approx(2)
    assert c(0.75) == pytest.approx(1 + 0.5j)
    assert c.mirrored().anchors == [0, -1, -1 + 1j]


def test_initial_state_must_sit_at_start():
    with pytest.raises(ValueError):
        integrate_schrodinger(HO, 1.0, Contour([0, 1]), ODEState(0.5, 1, 0))
