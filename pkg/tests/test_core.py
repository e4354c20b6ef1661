import math

import pytest

from levitodyn import config
from levitodyn.core import (
    Cavity,
    DomainError,
    GasEnvironment,
    Particle,
    TrapBeam,
    pa_to_torr,
    to_hz,
    to_rad_per_s,
    torr_to_pa,
    validate,
)


def fig3_particle():
    return Particle(rx=50e-9, ry=40e-9, rz=40e-9)


def test_particle_rejects_non_positive_values():
    with pytest.raises(DomainError):
        Particle(rx=-50e-9, ry=40e-9, rz=40e-9)
    with pytest.raises(ValueError):
        Particle(rx=50e-9, ry=40e-9, rz=40e-9, density=0.0)
    with pytest.raises(DomainError):
        Particle(rx=50e-9, ry=math.nan, rz=40e-9)


def test_particle_derived_quantities():
    p = fig3_particle()
    volume = 4.0 * math.pi / 3.0 * 50e-9 * 40e-9 * 40e-9
    assert p.volume == pytest.approx(volume, rel=1e-14)
    assert p.mass == pytest.approx(3500.0 * volume, rel=1e-14)
    assert p.moment_of_inertia == pytest.approx(p.mass * (50e-9 ** 2 + 40e-9 ** 2) / 5.0, rel=1e-14)
    assert p.aspect == pytest.approx(0.8)


def test_particle_builders():
    assert Particle.sphere(30e-9) == Particle(30e-9, 30e-9, 30e-9)
    prolate = Particle.prolate(50e-9, 0.5)
    assert prolate.ry == prolate.rz == pytest.approx(25e-9)


def test_sphere_moment_of_inertia():
    sphere = Particle.sphere(30e-9)
    assert sphere.moment_of_inertia == pytest.approx(2.0 * sphere.mass * (30e-9) ** 2 / 5.0, rel=1e-14)


def test_unit_helpers():
    assert torr_to_pa(1.0) == pytest.approx(133.322368, rel=1e-8)
    assert pa_to_torr(torr_to_pa(1e-8)) == pytest.approx(1e-8, rel=1e-14)
    assert to_hz(to_rad_per_s(220e3)) == pytest.approx(220e3, rel=1e-14)


def test_gas_environment_invariants():
    with pytest.raises(DomainError):
        GasEnvironment(pressure=-1.0)
    with pytest.raises(DomainError):
        GasEnvironment(accommodation=1.5)
    assert GasEnvironment(pressure=0.0).pressure == 0.0
    assert GasEnvironment().with_pressure(10.0).accommodation == config.ACCOMMODATION


def test_cavity_decay_rate_and_waist():
    cav = Cavity(length=0.5e-3, finesse=1e5)
    # kappa / 2 pi = c / (2 L F) = 3.00 MHz
    assert to_hz(cav.decay_rate) == pytest.approx(2.99792458e6, rel=1e-12)
    assert cav.mode_waist == pytest.approx(math.sqrt(1540e-9 * 0.5e-3 / (2.0 * math.pi)), rel=1e-14)
    with pytest.raises(DomainError):
        Cavity(finesse=1.0)


def test_validate_accepts_reference_setup():
    report = validate(fig3_particle(), TrapBeam(), GasEnvironment(), Cavity())
    assert report.ok, f"Expected no violations, got {report.violations}"
    assert report.warnings == []
    assert bool(report) is True


def test_validate_reports_ordering_and_permittivity():
    report = validate(Particle(rx=40e-9, ry=50e-9, rz=50e-9), TrapBeam())
    assert not report.ok
    assert any("ordering" in v for v in report.violations)

    report = validate(Particle(rx=50e-9, ry=40e-9, rz=30e-9), TrapBeam())
    assert any("rz" in v for v in report.violations)

    report = validate(Particle(rx=50e-9, ry=40e-9, rz=40e-9, eps_r=0.5), TrapBeam())
    assert any("eps_r" in v for v in report.violations)


def test_validate_warns_outside_rayleigh_and_free_molecular_regimes():
    big = Particle(rx=400e-9, ry=300e-9, rz=300e-9)
    report = validate(big, TrapBeam())
    assert report.ok
    assert any("Rayleigh" in w for w in report.warnings)

    dense = GasEnvironment(pressure=torr_to_pa(1000.0))
    report = validate(fig3_particle(), TrapBeam(), dense)
    assert any("free-molecular" in w for w in report.warnings)
    assert report.to_dict()["ok"] is True
