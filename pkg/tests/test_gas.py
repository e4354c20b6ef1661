import math

import numpy as np
import pytest

from levitodyn.core import GasEnvironment, Particle, TrapBeam, torr_to_pa
from levitodyn.gas import (
    damping_rates,
    epstein_rate,
    knudsen_number,
    lab_frame_damping,
    monte_carlo_damping,
    orientation_averaged_ratio,
    quality_factors,
    surface_moments,
    thermal_speed,
)

FIG3 = Particle(rx=50e-9, ry=40e-9, rz=40e-9)
FIG4 = Particle(rx=50e-9, ry=25e-9, rz=25e-9)
BEAM = TrapBeam()
UHV = GasEnvironment()                      # 1e-8 Torr, 300 K, sigma = 0.9


def test_thermal_speed_of_air():
    assert thermal_speed(UHV) == pytest.approx(468.27, rel=1e-4)


def test_sphere_surface_moments():
    r = 30e-9
    m = surface_moments(Particle.sphere(r))
    area = 4 * math.pi * r ** 2
    assert m.area == pytest.approx(area, rel=1e-10)
    assert m.nxx == pytest.approx(area / 3, rel=1e-10)
    assert m.nyy == pytest.approx(area / 3, rel=1e-10)
    assert m.twist == pytest.approx(0.0, abs=1e-40)
    assert m.radial == pytest.approx(2 * r ** 2 * area / 3, rel=1e-10)


@pytest.mark.parametrize("sigma", [0.0, 0.9])
def test_anisotropy_rises_to_one_as_the_particle_rounds_off(sigma):
    gas = GasEnvironment(accommodation=sigma)
    ratios = np.array([
        damping_rates(Particle.prolate(50e-9, a), gas).anisotropy for a in np.linspace(0.5, 1.0, 11)
    ])
    assert np.all(np.diff(ratios) > 0)
    assert ratios[-1] == pytest.approx(1.0, rel=1e-9)


def test_rates_scale_with_root_mass_over_temperature():
    base = damping_rates(FIG3, UHV)
    heavy = damping_rates(FIG3, GasEnvironment(molecular_mass=4 * UHV.molecular_mass))
    hot = damping_rates(FIG3, GasEnvironment(temperature=4 * UHV.temperature))
    for name in ("gamma_x", "gamma_y", "gamma_theta"):
        assert getattr(heavy, name) == pytest.approx(2.0 * getattr(base, name), rel=1e-12)
        assert getattr(hot, name) == pytest.approx(0.5 * getattr(base, name), rel=1e-12)


@pytest.mark.parametrize("sigma", [0.0, 0.5, 0.9, 1.0])
def test_sphere_reduces_to_epstein(sigma):
    r = 40e-9
    gas = GasEnvironment(pressure=torr_to_pa(1e-3), accommodation=sigma)
    rates = damping_rates(Particle.sphere(r), gas)
    expected = epstein_rate(r, 3500.0, gas)
    assert rates.gamma_x == pytest.approx(expected, rel=1e-10)
    assert rates.gamma_y == pytest.approx(expected, rel=1e-10)


def test_damping_anisotropy_of_reference_particle():
    rates = damping_rates(FIG3, UHV)
    assert rates.anisotropy == pytest.approx(0.8406, rel=1e-3)
    slimmer = damping_rates(FIG4, UHV)
    assert slimmer.anisotropy < rates.anisotropy < 1.0


def test_fig4_rates_at_uhv():
    rates = damping_rates(FIG4, UHV)
    assert rates.gamma_y == pytest.approx(1.099e-4, rel=2e-3)
    assert rates.gamma_theta == pytest.approx(1.031e-4, rel=2e-3)
    assert rates.flags == []


def test_rates_are_linear_in_pressure():
    low = damping_rates(FIG3, UHV)
    high = damping_rates(FIG3, UHV.with_pressure(2 * UHV.pressure))
    for name in ("gamma_x", "gamma_y", "gamma_theta"):
        assert getattr(high, name) == pytest.approx(2 * getattr(low, name), rel=1e-12), name


def test_vacuum_is_ballistic():
    rates = damping_rates(FIG3, UHV.with_pressure(0.0))
    assert (rates.gamma_x, rates.gamma_y, rates.gamma_theta) == (0.0, 0.0, 0.0)
    assert "ballistic_limit" in rates.flags
    assert math.isnan(rates.anisotropy)

    q = quality_factors(FIG3, BEAM, UHV.with_pressure(0.0))
    assert q.Q_y == math.inf and q.Q_theta == math.inf
    assert "unbounded_q" in q.flags


def test_quality_factors_at_uhv():
    q = quality_factors(FIG3, BEAM, UHV)
    assert 1e11 <= q.Q_theta <= 9e11, f"Q_theta={q.Q_theta:.3e}"
    assert 5.0 <= q.Q_theta / q.Q_y <= 15.0, f"Q ratio={q.Q_theta / q.Q_y:.3f}"
    assert q.Q_theta == pytest.approx(1.41e11, rel=0.02)


def test_sphere_quality_factor_is_undefined():
    q = quality_factors(Particle.sphere(40e-9), BEAM, UHV)
    assert math.isnan(q.Q_theta)
    assert "degenerate_torsional_mode" in q.flags
    assert math.isfinite(q.Q_y)


def test_knudsen_flag():
    at_100 = GasEnvironment(pressure=torr_to_pa(100.0))
    assert knudsen_number(FIG3, at_100) == pytest.approx(10.2, rel=0.02)
    assert "not_free_molecular" not in damping_rates(FIG3, at_100).flags

    at_1000 = GasEnvironment(pressure=torr_to_pa(1000.0))
    assert "not_free_molecular" in damping_rates(FIG3, at_1000).flags


def test_lab_frame_tensor():
    gamma_x, gamma_y = damping_rates(FIG3, UHV).gamma_x, damping_rates(FIG3, UHV).gamma_y
    aligned = lab_frame_damping(FIG3, UHV, 0.0)
    np.testing.assert_allclose(aligned, np.diag([gamma_x, gamma_y]), rtol=1e-12, atol=0.0)
    crossed = lab_frame_damping(FIG3, UHV, math.pi / 2)
    np.testing.assert_allclose(np.diag(crossed), [gamma_y, gamma_x], rtol=1e-12)
    tilted = lab_frame_damping(FIG3, UHV, 0.4)
    assert tilted[0, 1] == pytest.approx(tilted[1, 0], rel=1e-12)


def test_free_rotation_restores_isotropy():
    assert orientation_averaged_ratio(FIG3, UHV) == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("aspect", [0.3, 0.5, 0.8])
@pytest.mark.parametrize("sigma", [0.5, 0.9])
def test_monte_carlo_agrees_with_closed_form(aspect, sigma):
    particle = Particle.prolate(50e-9, aspect)
    gas = GasEnvironment(pressure=torr_to_pa(1e-6), accommodation=sigma)
    closed = damping_rates(particle, gas)
    mc = monte_carlo_damping(particle, gas, n_samples=200_000, seed=7)
    for name in ("gamma_x", "gamma_y", "gamma_theta"):
        expected, measured = getattr(closed, name), getattr(mc, name)
        assert measured == pytest.approx(expected, rel=0.10), (
            f"{name}: MC {measured:.4e} +- {mc.stderr[name]:.1e} vs closed form {expected:.4e}"
        )


def test_monte_carlo_sphere_matches_epstein():
    r = 40e-9
    gas = GasEnvironment(pressure=torr_to_pa(1e-6))
    mc = monte_carlo_damping(Particle.sphere(r), gas, n_samples=1_000_000, seed=3)
    expected = epstein_rate(r, 3500.0, gas)
    assert mc.gamma_x == pytest.approx(expected, rel=0.02)
    assert mc.gamma_y == pytest.approx(expected, rel=0.02)


def test_monte_carlo_is_independent_of_jobs():
    gas = GasEnvironment(pressure=torr_to_pa(1e-6))
    serial = monte_carlo_damping(FIG3, gas, n_samples=40_000, seed=11, jobs=1)
    threaded = monte_carlo_damping(FIG3, gas, n_samples=40_000, seed=11, jobs=4)
    assert serial == threaded


def test_monte_carlo_in_vacuum():
    mc = monte_carlo_damping(FIG3, UHV.with_pressure(0.0), n_samples=1000)
    assert mc.gamma_x == 0.0 and "ballistic_limit" in mc.flags
