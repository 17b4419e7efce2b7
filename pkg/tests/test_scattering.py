import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nvdit.protocol import readout_model, reflection_probability
from nvdit.scattering import (CavityParams, DrivingConfig, build_coupling, coupling_from_decay,
                              density_for_coupling, empty_cavity_reflection, reflection_spectrum,
                              solve_scattering)
from nvdit.structure import GsmParams, ground_levels, level_table, optical_detunings
from nvdit.units import ghz, mhz


@pytest.fixture(scope="module")
def levels():
    return level_table(b_z=0.020), ground_levels(GsmParams(), 0.020)


def jc_reflection(cav, u, delta, gamma, grid_ghz):
    """Single-level closed form, coupling sqrt(g^2/2) per mode."""
    d = ghz(grid_ghz)
    g2 = cav.g**2 / 2 * abs(u) ** 2
    return 1 - cav.kappa_a / (cav.kappa / 2 - 1j * d + g2 / (gamma - 1j * (d - delta)))


@pytest.mark.parametrize("coop", [0.2, 2.0, 10.0])
def test_single_level_matches_closed_form(levels, coop):
    table, ground = levels
    cav = CavityParams.from_cooperativity(coop, table)
    sys = build_coupling(cav, table, ground, spins=(0,), levels=[3])
    grid = np.linspace(-0.5, 0.5, 4001)
    sp = reflection_spectrum(sys, grid, spins=(0,))
    u = table.amplitude("+", 0)[3]
    delta = ghz(optical_detunings(table, ground, 0))[3]
    ref = jc_reflection(cav, u, delta, table.gamma[3], grid)
    assert np.max(np.abs(sp.r[0] - ref)) < 1e-8


def test_two_level_resonant_reflection():
    # bare two-level system on resonance gives 4C^2/(2C+1)^2
    for c in (0.1, 1.0, 10.0):
        cav = CavityParams.from_cooperativity(c, gamma_target=0.04)
        r = jc_reflection(cav, 1.0, 0.0, 0.04, np.array([0.0]))[0]
        assert abs(r) ** 2 == pytest.approx(reflection_probability(c), rel=1e-12)


def test_empty_cavity_half_transmission():
    cav = CavityParams.from_cooperativity(0.0)
    k2 = cav.kappa / 2 / (2 * np.pi)
    for d in (-k2, k2):
        t = 1 - empty_cavity_reflection(cav, d)
        assert t == pytest.approx(0.5, abs=1e-6)
    assert empty_cavity_reflection(cav, 0.0) == pytest.approx(0.0, abs=1e-12)


def test_uncoupled_cavity_through_solver(levels):
    table, ground = levels
    cav = CavityParams.from_cooperativity(0.0, table)
    sys = build_coupling(cav, table, ground)
    grid = np.linspace(-0.2, 0.2, 101)
    sp = reflection_spectrum(sys, grid, spins=(0,))
    assert np.allclose(sp.R[0], empty_cavity_reflection(cav, grid), atol=1e-12)
    assert np.allclose(sp.total(0), 1.0, atol=1e-12)


@settings(max_examples=60)
@given(st.floats(0.0, 30.0), st.floats(-3.0, 3.0), st.sampled_from([1, 0, -1]), st.sampled_from(["+", "-"]))
def test_probability_budget(coop, det, spin, pol):
    table = level_table(b_z=0.020)
    ground = ground_levels(GsmParams(), 0.020)
    sys = build_coupling(CavityParams.from_cooperativity(coop, table), table, ground)
    a = solve_scattering(sys, DrivingConfig(pol, det), spin)
    for p in (a.R, a.T, a.S_loss, a.M_loss):
        assert p >= -1e-12
    assert a.R + a.T + a.S_loss + a.M_loss <= 1 + 1e-9


def test_lossless_budget_is_exact(levels):
    table, ground = levels
    sys = build_coupling(CavityParams.from_cooperativity(5.0, table), table, ground)
    sp = reflection_spectrum(sys, np.linspace(-1, 1, 401), spins=(1, 0, -1))
    for s in (1, 0, -1):
        assert np.allclose(sp.total(s), 1.0, atol=1e-10)


def test_readout_contrast_at_c10():
    m = readout_model(10.0)
    r0 = m.response(0).R
    assert r0 > 0.9
    assert m.response(1).R < 1e-3


def test_validity_window(levels):
    table, ground = levels
    sys = build_coupling(CavityParams.from_cooperativity(1.0, table), table, ground)
    with pytest.raises(ValueError):
        solve_scattering(sys, DrivingConfig("+", 25.0), 0)


def test_invalid_cavity():
    with pytest.raises(ValueError):
        CavityParams(kappa_a=-1.0)
    with pytest.raises(ValueError):
        CavityParams.from_cooperativity(-1.0)


def test_coupling_density_round_trip():
    omega = 2 * np.pi * 470e12
    g = coupling_from_decay(0.03, 1 / 12e-9, 1e-12, omega)
    assert density_for_coupling(g, 0.03, 1 / 12e-9, omega) == pytest.approx(1e-12, rel=1e-12)
    assert coupling_from_decay(0.0, 1.0, 1.0, 1.0) == 0.0


def test_units():
    assert mhz(50.0) == pytest.approx(2 * np.pi * 0.05)
