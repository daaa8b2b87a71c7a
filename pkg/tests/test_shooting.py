import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import oscillator_basis_spectrum
from ptinterlace.complex_ode import Contour
from ptinterlace.potentials import Monomial
from ptinterlace.shooting import (
    WedgePair,
    eigenfunction_samples,
    find_eigenvalues,
    make_eigenpair,
    mismatch,
    shoot,
)
from ptinterlace.wkb import wkb_eigenvalue

HO = Monomial(2)
IX3 = Monomial(3)


def test_wedge_geometry():
    w = WedgePair(2)
    assert w.theta_right == pytest.approx(0.0)
    assert w.theta_left == pytest.approx(-math.pi)
    w3 = WedgePair(3)
    assert w3.theta_left == pytest.approx(-math.pi - w3.theta_right)
    assert w3.opening == pytest.approx(2 * math.pi / 5)


def test_seed_radius_rule():
    """The automatic seed sits a fixed decay action beyond the turning radius."""
    from ptinterlace.shooting import SEED_ACTION

    for N in (2, 3, 8, 20):
        w = WedgePair(N)
        m = N / 2 + 1
        for E in (0.5, 5, 50):
            r0, r = E ** (1 / N), w.seed_radius(E)
            assert r > r0
            assert (r**m - r0**m) / m == pytest.approx(SEED_ACTION)
    assert WedgePair(3).seed_radius(1.0) >= 2.0
    assert WedgePair(3, start_radius=100.0).seed_radius(1.0) == 100.0
    assert WedgePair(3, start_radius=0.1).seed_radius(1.0) == WedgePair(3).seed_radius(1.0)


def test_harmonic_ground_state_mismatch():
    assert abs(mismatch(HO, 1.0)) < 1e-9
    assert abs(mismatch(HO, 2.0)) > 1e-2


def test_cubic_single_sign_change():
    Es = np.linspace(0.5, 2.0, 31)
    vals = [mismatch(IX3, E) for E in Es]
    changes = sum(1 for a, b in zip(vals, vals[1:]) if a * b < 0)
    assert changes == 1


def test_harmonic_levels():
    pairs = find_eigenvalues(HO, 10.0)
    assert [p.k for p in pairs] == [0, 1, 2, 3, 4]
    np.testing.assert_allclose([p.E for p in pairs], [1, 3, 5, 7, 9], atol=1e-8)


def test_cubic_levels_against_oracle(ix3_pairs):
    oracle = oscillator_basis_spectrum(3, n_basis=300, scale=0.7, n_levels=6)
    E = np.array([p.E for p in ix3_pairs[:6]])
    np.testing.assert_allclose(E, oracle, rtol=1e-6)


def test_cubic_levels_frozen(ix3_pairs):
    frozen = [1.1562670719880654, 4.109228752809444, 7.562273854978521,
              11.314421820195292, 15.291553750391687, 19.451529130690588]
    np.testing.assert_allclose([p.E for p in ix3_pairs[:6]], frozen, rtol=1e-9)


def test_wkb_close_for_higher_levels(ix3_pairs):
    for p in ix3_pairs[3:6]:
        assert abs(wkb_eigenvalue(IX3, p.k) - p.E) / p.E < 0.02


def test_levels_real_and_increasing(ix3_pairs):
    E = [p.E for p in ix3_pairs]
    assert all(a < b for a, b in zip(E, E[1:]))
    for p in ix3_pairs:
        assert p.residual < 1e-8


@settings(max_examples=30, deadline=None)
@given(st.floats(0.2, 40.0), st.integers(2, 6))
def test_wronskian_realness(E, N):
    shot = shoot(Monomial(N), E)
    assert abs(shot.W.imag) < 1e-6 * (abs(shot.W) + 1)


@pytest.mark.parametrize("radius_factor", [None, 5.0, 7.0])
@pytest.mark.parametrize("offset", [-1 / 8, 0.0, 1 / 8])
def test_boundary_robustness(ix3_pairs, radius_factor, offset):
    """Seed radius and wedge rotation do not move the ground state.

    Radii below the automatic one (about 4.1 E^(1/3) here) are clamped, so
    the explicit radii are taken beyond it.
    """
    E0 = ix3_pairs[0].E
    r = None if radius_factor is None else radius_factor * E0 ** (1 / 3)
    assert r is None or r > WedgePair(3).seed_radius(E0)
    w = WedgePair(3, start_radius=r, angle_offset=offset * 2 * math.pi / 5)
    pairs = find_eigenvalues(IX3, 2.0, w)
    assert abs(pairs[0].E - E0) < 10 * 1e-11 * E0 + 1e-10


def test_harmonic_samples_are_gaussian():
    ep = make_eigenpair(HO, 0, 1.0)
    xs = np.linspace(-3, 3, 13)
    states = eigenfunction_samples(HO, ep, Contour(list(xs)))
    ref0 = states[0].psi / math.exp(-4.5)
    for s in states:
        expected = ref0 * np.exp(-s.x.real**2 / 2)
        assert abs(s.psi - expected) <= 1e-6 * abs(ref0)


def test_harmonic_k2_two_sign_changes():
    ep = make_eigenpair(HO, 2, 5.0)
    xs = np.linspace(-3, 3, 61)
    states = eigenfunction_samples(HO, ep, Contour(list(xs)))
    # pick the sample points themselves (anchors carry the exact positions)
    vals = [s.psi for s in states if abs(s.x.imag) < 1e-14 and np.min(np.abs(xs - s.x.real)) < 1e-12]
    ph = vals[len(vals) // 2]
    real = [(v / ph).real for v in vals]
    assert max(abs((v / ph).imag) for v in vals) < 1e-6 * max(map(abs, real))
    changes = sum(1 for a, b in zip(real, real[1:]) if a * b < 0)
    assert changes == 2


def test_nonmonomial_rejected():
    from ptinterlace.potentials import QESQuartic

    with pytest.raises(TypeError):
        mismatch(QESQuartic(10, 2, 3), 1.0)
