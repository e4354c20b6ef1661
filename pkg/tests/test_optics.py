import math

import mpmath
import numpy as np
import pytest

from levitodyn.core import DomainError, Particle, TrapBeam, to_hz
from levitodyn.optics import (
    depolarization_factors,
    frequencies,
    frequency_ratio,
    potential,
    potential_profiles,
    restoring_force,
    restoring_torque,
    stiffnesses,
    susceptibilities,
    trap_depths,
)

FIG3 = Particle(rx=50e-9, ry=40e-9, rz=40e-9)
FIG4 = Particle(rx=50e-9, ry=25e-9, rz=25e-9)
BEAM = TrapBeam()


def depolarization_oracle(aspect):
    """L_x = (abc/2) int_0^inf ds / ((s + a^2) sqrt((s + a^2)(s + b^2)(s + c^2))) with a = 1."""
    mpmath.mp.dps = 30
    a2, b2 = mpmath.mpf(1), mpmath.mpf(aspect) ** 2
    integrand = lambda s: 1 / ((s + a2) * mpmath.sqrt((s + a2) * (s + b2) * (s + b2)))
    return float(b2 / 2 * mpmath.quad(integrand, [0, 1, mpmath.inf]))


@pytest.mark.parametrize("aspect", [0.1, 0.3, 0.5, 0.8, 0.95, 0.999])
def test_depolarization_matches_quadrature(aspect):
    L_x, L_y, L_z = depolarization_factors(aspect)
    assert L_x == pytest.approx(depolarization_oracle(aspect), rel=1e-10)
    assert L_x + L_y + L_z == pytest.approx(1.0, rel=1e-14)
    assert L_y == L_z


def test_depolarization_sphere_and_domain():
    assert depolarization_factors(1.0) == (1 / 3, 1 / 3, 1 / 3)
    for bad in (0.0, -0.2, 1.2):
        with pytest.raises(DomainError):
            depolarization_factors(bad)


def test_susceptibilities_of_reference_particle():
    chi = susceptibilities(FIG3)
    assert chi.chi_x == pytest.approx(2.0479, rel=1e-3)
    assert chi.chi_y == pytest.approx(1.7412, rel=1e-3)
    assert chi.anisotropy > 0


def test_susceptibilities_at_aspect_one_half():
    chi = susceptibilities(Particle.prolate(50e-9, 0.5))
    assert chi.chi_x == pytest.approx(2.591, rel=1e-3)
    assert chi.chi_y == pytest.approx(1.599, rel=1e-3)


def test_vacuum_permittivity_is_not_polarizable():
    chi = susceptibilities(Particle(rx=50e-9, ry=40e-9, rz=40e-9, eps_r=1.0))
    assert (chi.chi_x, chi.chi_y) == (0.0, 0.0)
    nearly = susceptibilities(Particle(rx=50e-9, ry=40e-9, rz=40e-9, eps_r=1.0 + 1e-8))
    assert nearly.chi_x == pytest.approx(1e-8, rel=1e-6)
    assert nearly.chi_y == pytest.approx(1e-8, rel=1e-6)


def test_trap_frequencies_of_reference_particles():
    f3 = frequencies(FIG3, BEAM)
    assert to_hz(f3.omega_y) == pytest.approx(220e3, rel=0.02)
    assert to_hz(f3.omega_theta) == pytest.approx(1.26e6, rel=0.02)
    assert not f3.degenerate

    f4 = frequencies(FIG4, BEAM)
    assert to_hz(f4.omega_y) == pytest.approx(248e3, rel=0.02)
    assert to_hz(f4.omega_theta) == pytest.approx(2.6e6, rel=0.02)


def test_frequencies_scale_with_root_power():
    base = frequencies(FIG3, BEAM)
    quad = frequencies(FIG3, BEAM.with_power(4 * BEAM.power))
    assert quad.omega_y / base.omega_y == pytest.approx(2.0, rel=1e-12)
    assert quad.omega_theta / base.omega_theta == pytest.approx(2.0, rel=1e-12)


def test_torsional_frequency_is_inverse_in_size():
    sizes = [20e-9, 50e-9, 100e-9]
    freqs = [frequencies(Particle.prolate(r, 0.8), BEAM) for r in sizes]
    for r, f in zip(sizes[1:], freqs[1:]):
        assert f.omega_theta * r == pytest.approx(freqs[0].omega_theta * sizes[0], rel=1e-12)
        assert f.omega_y == pytest.approx(freqs[0].omega_y, rel=1e-12)


def test_sphere_has_no_torsional_confinement():
    freqs = frequencies(Particle.sphere(40e-9), BEAM)
    assert freqs.degenerate
    assert freqs.omega_theta == 0.0
    assert "degenerate_torsional_mode" in freqs.flags
    assert frequency_ratio(Particle.sphere(40e-9), BEAM) == 0.0


def test_frequency_ratio_is_power_independent():
    omega_y, omega_theta = frequencies(FIG3, BEAM)
    assert frequency_ratio(FIG3, BEAM) == pytest.approx(omega_theta / omega_y, rel=1e-12)
    assert frequency_ratio(FIG3, BEAM.with_power(0.025)) == pytest.approx(frequency_ratio(FIG3, BEAM), rel=1e-14)
    # thinner particles spin faster relative to their COM motion
    assert frequency_ratio(FIG4, BEAM) > frequency_ratio(FIG3, BEAM)


def test_stiffnesses_match_potential_curvature():
    k_y, k_theta = stiffnesses(FIG3, BEAM)
    h_y, h_t = 1e-10, 1e-4
    u0 = potential(FIG3, BEAM, 0.0, 0.0)
    curv_y = (potential(FIG3, BEAM, h_y, 0.0) - 2 * u0 + potential(FIG3, BEAM, -h_y, 0.0)) / h_y ** 2
    curv_t = (potential(FIG3, BEAM, 0.0, h_t) - 2 * u0 + potential(FIG3, BEAM, 0.0, -h_t)) / h_t ** 2
    assert k_y == pytest.approx(curv_y, rel=1e-4)
    assert k_theta == pytest.approx(curv_t, rel=1e-4)


def test_force_and_torque_are_potential_gradients():
    y, theta = 150e-9, 0.3
    h = 1e-12
    dU_dy = (potential(FIG3, BEAM, y + h, theta) - potential(FIG3, BEAM, y - h, theta)) / (2 * h)
    dU_dt = (potential(FIG3, BEAM, y, theta + 1e-7) - potential(FIG3, BEAM, y, theta - 1e-7)) / 2e-7
    assert restoring_force(FIG3, BEAM, y, theta) == pytest.approx(-dU_dy, rel=1e-5)
    assert restoring_torque(FIG3, BEAM, y, theta) == pytest.approx(-dU_dt, rel=1e-5)
    assert restoring_torque(FIG3, BEAM, 0.0, 0.0) == 0.0


def test_force_and_torque_gradients_at_random_points():
    rng = np.random.default_rng(0)
    ys = rng.uniform(-BEAM.waist, BEAM.waist, 20)
    thetas = rng.uniform(-math.pi, math.pi, 20)
    u_scale = abs(potential(FIG3, BEAM, 0.0, 0.0))
    h_y, h_t = 1e-12, 1e-7
    for y, theta in zip(ys, thetas):
        dU_dy = (potential(FIG3, BEAM, y + h_y, theta) - potential(FIG3, BEAM, y - h_y, theta)) / (2 * h_y)
        dU_dt = (potential(FIG3, BEAM, y, theta + h_t) - potential(FIG3, BEAM, y, theta - h_t)) / (2 * h_t)
        assert restoring_force(FIG3, BEAM, y, theta) == pytest.approx(-dU_dy, rel=1e-5, abs=1e-6 * u_scale / BEAM.waist)
        assert restoring_torque(FIG3, BEAM, y, theta) == pytest.approx(-dU_dt, rel=1e-5, abs=1e-6 * u_scale)


def test_potential_has_period_pi_in_theta():
    ys = np.linspace(-BEAM.waist, BEAM.waist, 7)[:, None]
    thetas = np.linspace(-math.pi, math.pi, 13)[None, :]
    np.testing.assert_allclose(
        potential(FIG3, BEAM, ys, thetas + math.pi), potential(FIG3, BEAM, ys, thetas), rtol=1e-12, atol=0.0,
    )


def test_trap_depth_and_barrier():
    depths = trap_depths(FIG3, BEAM)
    assert depths["depth_y_J"] == pytest.approx(-potential(FIG3, BEAM, 0.0, 0.0), rel=1e-12)
    barrier = potential(FIG3, BEAM, 0.0, math.pi / 2) - potential(FIG3, BEAM, 0.0, 0.0)
    assert depths["barrier_theta_J"] == pytest.approx(barrier, rel=1e-12)
    # deep trap: thousands of kelvin
    assert depths["barrier_theta_K"] > 300.0
    assert trap_depths(Particle.sphere(40e-9), BEAM)["barrier_theta_J"] == 0.0


def test_potential_profiles():
    profiles = potential_profiles(FIG3, BEAM, n=401)
    s, u_y, u_t = profiles["coordinate_m"], profiles["U_y_J"], profiles["U_theta_J"]
    assert s.shape == u_y.shape == u_t.shape == (401,)
    assert u_y[200] == pytest.approx(u_y.min(), rel=1e-12)
    assert u_y[0] == pytest.approx(u_y[-1], rel=1e-12)
    depths = trap_depths(FIG3, BEAM)
    assert u_t.max() - u_t.min() == pytest.approx(depths["barrier_theta_J"], rel=1e-2)
