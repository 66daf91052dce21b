from math import pi, sqrt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sympcool import constants as C
from sympcool.errors import ConfigError, DomainError, InstabilityError
from sympcool.trapmodel import (IonSpecies, RamanGeometry, StrayField, TrapConfig,
                                axial_curvature_for_com, axial_mode_frequencies,
                                find_equilibrium, lamb_dicke, normal_modes,
                                potential_energy, potential_gradient, potential_hessian)


def equal_mass_trap():
    be = IonSpecies.beryllium9()
    twin = IonSpecies("9Be+b", be.mass, transition_wavelength=be.transition_wavelength)
    return TrapConfig(C.OMEGA_RF_PSEUDO, C.OMEGA_AXIAL, C.OMEGA_STATIC_2, C.OMEGA_STATIC_3,
                      C.OMEGA_RF_DRIVE, be, twin)


def central_difference(f, z, h):
    out = []
    for i in range(z.size):
        e = np.zeros_like(z)
        e[i] = h
        out.append((f(z + e) - f(z - e)) / (2 * h))
    return np.array(out)


def test_equilibrium_separation_matches_force_balance():
    cfg = TrapConfig.micromotion_study()
    eq = find_equilibrium(cfg)
    k = cfg.reference.mass * cfg.omega1 ** 2
    d = (2 * C.COULOMB_K * C.ELEMENTARY_CHARGE ** 2 / k) ** (1 / 3)
    assert np.linalg.norm(eq.y - eq.x) == pytest.approx(d, rel=1e-10)
    assert eq.residual_gradient_norm < 1e-20


def test_equal_mass_stretch_over_com_is_root_three():
    ms = normal_modes(equal_mass_trap(), find_equilibrium(equal_mass_trap()))
    ratio = ms["stretch"].frequency / ms["com"].frequency
    assert ratio == pytest.approx(sqrt(3), rel=1e-9)
    assert ms["com"].frequency == pytest.approx(C.OMEGA_AXIAL, rel=1e-9)


@pytest.mark.parametrize("mu", [1.0, 24 / 9, 0.4, 5.0])
def test_axial_modes_match_closed_form(mu):
    be = IonSpecies.beryllium9()
    partner = IonSpecies("X", be.mass * mu)
    cfg = TrapConfig(2 * pi * 20e6, 2 * pi * 1e6, 0.0, 0.0, 2 * pi * 200e6, be, partner)
    ms = normal_modes(cfg, find_equilibrium(cfg))
    lo, hi = axial_mode_frequencies(cfg.omega1, mu)
    assert ms["com"].frequency == pytest.approx(lo, rel=1e-9)
    assert ms["stretch"].frequency == pytest.approx(hi, rel=1e-9)


def test_com_calibration_places_lower_axial_mode():
    cfg = TrapConfig.cooling_experiment()
    ms = normal_modes(cfg, find_equilibrium(cfg))
    assert ms["com"].frequency == pytest.approx(C.COM_FREQUENCY, rel=1e-10)
    w1 = axial_curvature_for_com(C.COM_FREQUENCY, cfg.mass_ratio)
    assert w1 == pytest.approx(cfg.omega1)


def test_modes_are_orthonormal_and_labelled():
    cfg = TrapConfig.micromotion_study()
    ms = normal_modes(cfg, find_equilibrium(cfg))
    assert np.allclose(ms.gram(), np.eye(6), atol=1e-12)
    assert set(ms.labels) == {"com", "stretch", "x2-inphase", "x2-rocking",
                              "x3-inphase", "x3-rocking"}
    assert np.all(np.diff(ms.frequencies) > 0)


def test_equal_mass_com_lamb_dicke_closed_form():
    cfg = equal_mass_trap()
    ms = normal_modes(cfg, find_equilibrium(cfg))
    com = ms["com"]
    geom = RamanGeometry.perpendicular(313e-9)
    dk = sqrt(2) * 2 * pi / 313e-9
    expected = dk / sqrt(2) * sqrt(C.HBAR / (2 * cfg.reference.mass * com.frequency))
    assert abs(lamb_dicke(com, 0, geom)) == pytest.approx(expected, rel=1e-10)


def test_lamb_dicke_scales_with_inverse_root_frequency():
    cfg = TrapConfig.cooling_experiment()
    geom = RamanGeometry.perpendicular(280e-9)
    eta = abs(lamb_dicke(normal_modes(cfg, find_equilibrium(cfg))["com"], "partner", geom))
    cfg4 = cfg.scaled(2.0)
    eta4 = abs(lamb_dicke(normal_modes(cfg4, find_equilibrium(cfg4))["com"], "partner", geom))
    assert eta4 == pytest.approx(eta / sqrt(2), rel=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1),
       st.floats(0, 2 * pi))
def test_gradient_matches_finite_difference_of_energy(u, v, w, s, theta):
    cfg = TrapConfig.micromotion_study()
    eq = find_equilibrium(cfg)
    scale = 1e-7
    z = np.concatenate([eq.x, eq.y]) + scale * np.array([u, v, w, -u, s, w * s])
    stray = StrayField(2e-7, theta)

    def energy(q):
        return potential_energy(cfg, stray, q[:3], q[3:])

    fd = central_difference(energy, z, 1e-10)
    g = potential_gradient(cfg, stray, z[:3], z[3:])
    assert np.linalg.norm(fd - g) <= 1e-6 * np.linalg.norm(g) + 1e-24


@settings(max_examples=25, deadline=None)
@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1), st.floats(0.5, 2.0))
def test_hessian_matches_finite_difference_of_gradient(u, v, w, stretch):
    cfg = TrapConfig.micromotion_study()
    eq = find_equilibrium(cfg)
    z = np.concatenate([eq.x * stretch, eq.y * stretch]) + 1e-6 * np.array([u, v, w, v, w, u])

    def grad(q):
        return potential_gradient(cfg, StrayField(), q[:3], q[3:])

    fd = central_difference(grad, z, 1e-11)
    h = potential_hessian(cfg, z[:3], z[3:])
    assert np.linalg.norm(fd - h) <= 1e-6 * np.linalg.norm(h)


def test_stray_field_displaces_crystal_radially():
    cfg = TrapConfig.micromotion_study()
    eq = find_equilibrium(cfg, StrayField(2.6e-7, 0.0))
    assert abs(eq.x[1]) > 1e-8
    assert abs(eq.x[2]) < 1e-15
    assert eq.residual_gradient_norm < 1e-18


def test_invalid_trap_rejected_with_field():
    with pytest.raises(ConfigError) as err:
        TrapConfig(2 * pi * 9e6, 2 * pi * 2.8e6, 0.0, 2 * pi * 12e6, 2 * pi * 110e6)
    assert err.value.field == "omega3"
    with pytest.raises(ConfigError):
        TrapConfig(2 * pi * 9e6, -1.0, 0.0, 0.0, 2 * pi * 110e6)
    with pytest.raises(ConfigError):
        StrayField(-1e-6)


def test_coincident_ions_are_a_domain_error():
    cfg = TrapConfig.micromotion_study()
    with pytest.raises(DomainError):
        potential_hessian(cfg, np.zeros(3), np.zeros(3))


def test_linear_chain_past_zigzag_threshold_reports_mode():
    # a heavy partner is weakly held by the pseudopotential, so the axial chain buckles
    be = IonSpecies.beryllium9()
    heavy = IonSpecies("heavy", be.mass * 40)
    cfg = TrapConfig(2 * pi * 9e6, 2 * pi * 2.8e6, 0.0, 0.0, 2 * pi * 110e6, be, heavy)
    with pytest.raises(InstabilityError) as err:
        normal_modes(cfg, find_equilibrium(cfg))
    assert err.value.eigenvalue <= 0
