from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from elastocavity.errors import ConfigurationError, NumericalDegeneracyError
from elastocavity.medium import (AffineField, PlaneMode, PlaneWaveField, helmholtz_potentials,
                                 incident_field, make_incidence, make_medium, p_mode,
                                 reflected_field, reflection_system, s_mode, traction)
from oracles import fd_gradient, fd_navier

positive = st.floats(min_value=0.1, max_value=10.0, allow_nan=False)
angles = st.floats(min_value=-1.4, max_value=1.4, allow_nan=False)


def test_wavenumbers_unit_medium():
    m = make_medium(1, 1, 1)
    assert m.k_p == pytest.approx(1 / math.sqrt(3), rel=1e-15)
    assert m.k_s == 1.0


def test_wavenumbers_second_medium():
    m = make_medium(2, 1, 2)
    assert m.k_p == pytest.approx(1.0, rel=1e-15)
    assert m.k_s == pytest.approx(2.0, rel=1e-15)


@pytest.mark.parametrize("args,name", [((1, 1, 0), "omega"), ((0, 1, 1), "lambda"),
                                       ((1, -2, 1), "mu")])
def test_nonpositive_parameters_are_rejected(args, name):
    with pytest.raises(ConfigurationError, match=f"{name} must be positive"):
        make_medium(*args)


@given(positive, positive, positive)
def test_compressional_wavenumber_is_smaller(lam, mu, omega):
    m = make_medium(lam, mu, omega)
    assert m.k_p < m.k_s


@given(positive, positive, positive, angles)
def test_incidence_wavevector_identities(lam, mu, omega, theta):
    m = make_medium(lam, mu, omega)
    cfg = make_incidence(m, theta)
    assert cfg.alpha**2 + cfg.beta**2 == pytest.approx(m.k_p**2, rel=1e-12)
    assert cfg.eta**2 + cfg.alpha**2 == pytest.approx(m.k_s**2, rel=1e-12)
    assert cfg.c_p == m.k_p and cfg.c_s == 0


def test_incidence_angle_out_of_range(unit_medium):
    with pytest.raises(ConfigurationError):
        make_incidence(unit_medium, math.pi / 2)


def test_normal_incidence_closed_form(unit_medium):
    cfg = make_incidence(unit_medium, 0.0)
    inc = incident_field(unit_medium, cfg)
    kp = unit_medium.k_p
    for x in ([0.0, 0.0], [0.4, -1.3], [-2.0, 0.7]):
        expected = np.array([0.0, -kp]) * np.exp(-1j * kp * x[1])
        np.testing.assert_allclose(inc.value(x), expected, atol=1e-15)


def test_oblique_incidence_at_origin(unit_medium, oblique):
    inc = incident_field(unit_medium, oblique)
    kp = unit_medium.k_p
    np.testing.assert_allclose(inc.value([0.0, 0.0]), kp * np.array([0.5, -math.sqrt(3) / 2]),
                               atol=1e-15)


@pytest.mark.parametrize("theta", [0.0, 0.3, -0.9, 1.2])
def test_incident_field_solves_navier(unit_medium, theta):
    cfg = make_incidence(unit_medium, theta, c_s=0.4 - 0.2j)
    inc = incident_field(unit_medium, cfg)
    x = np.array([0.3, -0.7])
    assert np.abs(inc.navier_residual(x)).max() < 1e-10
    # finite-difference oracle of the operator
    res = fd_navier(inc.value, 1.0, 1.0, 1.0, x)
    assert np.abs(res).max() < 1e-5


def test_gradient_matches_finite_differences(unit_medium, oblique):
    fld = incident_field(unit_medium, oblique) + reflected_field(unit_medium, oblique, "neumann")
    x = np.array([0.2, 0.9])
    np.testing.assert_allclose(fld.gradient(x), fd_gradient(fld.value, x), atol=1e-8)


def test_inconsistent_mode_is_rejected(unit_medium):
    # P polarization paired with an S-length wavevector
    bad = PlaneMode(np.array([1.0, 0.0]), np.array([unit_medium.k_s, 0.0]), 1.0, "P")
    with pytest.raises(NumericalDegeneracyError):
        PlaneWaveField(unit_medium, [bad])


def test_mode_polarization_geometry(unit_medium):
    k = np.array([0.3, math.sqrt(unit_medium.k_p**2 - 0.09)])
    pm = p_mode(unit_medium, k)
    assert abs(np.linalg.det(np.column_stack([pm.polarization, k]))) < 1e-15
    q = np.array([0.3, math.sqrt(1 - 0.09)])
    sm = s_mode(unit_medium, q)
    assert abs(sm.polarization @ q) < 1e-15


def test_dirichlet_normal_incidence_has_no_conversion(unit_medium):
    cfg = make_incidence(unit_medium, 0.0)
    refl = reflected_field(unit_medium, cfg, "dirichlet")
    inc = incident_field(unit_medium, cfg)
    p, s = refl.modes
    assert abs(s.amplitude) < 1e-15
    # the reflected P displacement is the negative of the incident one on x2 = 0
    np.testing.assert_allclose(p.amplitude * p.polarization, -inc.value([0.0, 0.0]), atol=1e-15)


def _ground(n=50):
    return np.stack([np.linspace(-7.0, 7.0, n), np.zeros(n)], axis=1)


@pytest.mark.parametrize("theta", np.linspace(-1.3, 1.3, 10))
def test_dirichlet_reflection_cancels_trace(unit_medium, theta):
    cfg = make_incidence(unit_medium, theta)
    total = incident_field(unit_medium, cfg) + reflected_field(unit_medium, cfg, "dirichlet")
    assert np.abs(total.value(_ground())).max() < 1e-10


@pytest.mark.parametrize("theta", np.linspace(-1.3, 1.3, 10))
def test_neumann_reflection_cancels_traction(unit_medium, theta):
    cfg = make_incidence(unit_medium, theta)
    inc = incident_field(unit_medium, cfg)
    total = inc + reflected_field(unit_medium, cfg, "neumann")
    pts = _ground()
    ref = np.abs(traction(inc, pts, [0.0, 1.0])).max()
    assert np.abs(traction(total, pts, [0.0, 1.0])).max() < 1e-10 * ref


def test_neumann_reflection_at_fifth_of_pi(unit_medium):
    cfg = make_incidence(unit_medium, math.pi / 5)
    inc = incident_field(unit_medium, cfg)
    total = inc + reflected_field(unit_medium, cfg, "neumann")
    pts = _ground()
    assert (np.abs(traction(total, pts, [0, 1])).max()
            < 1e-10 * np.abs(traction(inc, pts, [0, 1])).max())


@settings(max_examples=20, deadline=None)
@given(positive, positive, positive, angles, st.sampled_from(["dirichlet", "neumann"]))
def test_reflection_solve_residual(lam, mu, omega, theta, bc):
    m = make_medium(lam, mu, omega)
    cfg = make_incidence(m, theta, c_s=0.5)
    refl = reflected_field(m, cfg, bc)
    inc = incident_field(m, cfg)
    for k, mode in enumerate(inc.modes):
        xi = float(mode.wavevector[0].real)
        mat, _ = reflection_system(m, xi, bc)
        amps = np.array([refl.modes[2 * k].amplitude, refl.modes[2 * k + 1].amplitude])
        if bc == "dirichlet":
            data = mode.amplitude * mode.polarization
        else:
            data = traction(PlaneWaveField(m, [mode]), [0.0, 0.0], [0, 1])
        assert np.linalg.norm(mat @ amps + data) < 1e-12 * max(1.0, np.linalg.norm(data))
    rng = np.random.default_rng(7)
    pts = rng.uniform(-2, 2, size=(10, 2))
    scale = np.abs(inc.value(pts)).max() * omega**2
    assert np.abs((inc + refl).navier_residual(pts)).max() < 1e-10 * max(scale, 1.0)


def test_traction_of_constant_field(unit_medium):
    fld = AffineField(unit_medium, [1.0 + 2j, -3.0], np.zeros((2, 2)))
    np.testing.assert_allclose(traction(fld, [0.3, 0.1], [0.6, 0.8]), 0.0)


def test_traction_of_linear_field(unit_medium):
    fld = AffineField(unit_medium, [0.0, 0.0], [[1.0, 0.0], [0.0, 0.0]])
    np.testing.assert_allclose(traction(fld, [0.5, -0.5], [0.0, 1.0]), [0.0, 2.0])


def test_traction_of_normal_incidence(unit_medium):
    # u = c_p (0, -1) exp(-i k_p x2): d u2/d x2 = i k_p c_p, so T u = (0, i k_p c_p (lam + 2 mu))
    cfg = make_incidence(unit_medium, 0.0)
    inc = incident_field(unit_medium, cfg)
    kp = unit_medium.k_p
    for x1 in (-1.0, 0.0, 2.5):
        t = traction(inc, [x1, 0.0], [0.0, 1.0])
        np.testing.assert_allclose(t, [0.0, 1j * kp * kp * 3.0], atol=1e-14)
    J = fd_gradient(inc.value, np.array([0.4, 0.0]))
    fd_t = J @ np.array([0.0, 1.0]) + 2.0 * (J[0, 0] + J[1, 1]) * np.array([0.0, 1.0])
    np.testing.assert_allclose(traction(inc, [0.4, 0.0], [0, 1]), fd_t, atol=1e-8)


def test_potentials_of_pure_modes(unit_medium):
    k = np.array([0.2, math.sqrt(1 - 0.04)])
    s_only = PlaneWaveField(unit_medium, [s_mode(unit_medium, k, 1.5)])
    phi, psi = helmholtz_potentials(s_only, [0.3, 0.4])
    assert abs(phi) < 1e-15 and abs(psi) > 0
    kp_vec = np.array([0.2, math.sqrt(unit_medium.k_p**2 - 0.04)])
    p_only = PlaneWaveField(unit_medium, [p_mode(unit_medium, kp_vec, 0.7j)])
    phi, psi = helmholtz_potentials(p_only, [0.3, 0.4])
    assert abs(psi) < 1e-15 and abs(phi) > 0


@pytest.mark.parametrize("theta", [0.0, 0.5, -1.0])
def test_potential_reconstruction(unit_medium, theta):
    cfg = make_incidence(unit_medium, theta, c_s=0.3 + 0.1j)
    fld = incident_field(unit_medium, cfg) + reflected_field(unit_medium, cfg, "neumann")
    pts = np.array([[0.1, 0.2], [-1.0, 0.5], [2.0, 1.5]])
    u = fld.value(pts)
    rec = fld.potential_reconstruction(pts)
    assert np.abs(rec - u).max() < 1e-10 * np.abs(u).max()
