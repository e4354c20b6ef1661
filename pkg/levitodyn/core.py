"""
Shared domain types, physical constants and unit conventions.

Everything here is SI. Angular frequencies are rad/s internally; conversion to Hz
happens only where results leave the package (CSV `_Hz` columns, JSON).
"""

import logging
import math
from dataclasses import dataclass, field

from levitodyn import config

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------

class LevitodynError(Exception):
    """Base class for every error raised by the package."""


class DomainError(LevitodynError, ValueError):
    """An input lies outside the domain of an operation."""


class ConfigError(LevitodynError):
    """Bad configuration file or command-line arguments."""


class IntegrationError(LevitodynError):
    """The stochastic integrator refused to start or blew up."""


class FitError(LevitodynError):
    """A spectral fit could not be set up or did not converge."""


# ---------------------------------------------------------------------------
# Constants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PhysicalConstants:
    """CODATA values."""
    c: float = 2.99792458e8          # m/s
    hbar: float = 1.054571817e-34    # J s
    kB: float = 1.380649e-23         # J/K
    eps0: float = 8.8541878128e-12   # F/m


CONSTANTS = PhysicalConstants()
C = CONSTANTS.c
HBAR = CONSTANTS.hbar
KB = CONSTANTS.kB
EPS0 = CONSTANTS.eps0


def torr_to_pa(p_torr: float) -> float:
    return p_torr * config.TORR


def pa_to_torr(p_pa: float) -> float:
    return p_pa / config.TORR


def to_hz(omega: float) -> float:
    """Angular frequency (rad/s) to cyclic frequency (Hz)."""
    return omega / (2.0 * math.pi)


def to_rad_per_s(f_hz: float) -> float:
    return 2.0 * math.pi * f_hz


def _require_positive(owner: str, **values: float) -> None:
    for name, value in values.items():
        if not math.isfinite(value) or value <= 0.0:
            raise DomainError(f"{owner}.{name} must be a positive finite number, got {value!r}")


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Particle:
    """
    Uniform ellipsoid with semiaxes rx (long axis, along x_N) and ry = rz.

    Only positivity is enforced on construction; ordering and permittivity are
    relational invariants reported by validate().
    """
    rx: float
    ry: float
    rz: float
    density: float = config.DIAMOND_DENSITY
    eps_r: float = config.DIAMOND_EPS_R

    def __post_init__(self):
        _require_positive(
            "Particle", rx=self.rx, ry=self.ry, rz=self.rz,
            density=self.density, eps_r=self.eps_r,
        )

    @classmethod
    def prolate(cls, rx: float, aspect: float, **kwargs) -> "Particle":
        """Prolate spheroid from its long semiaxis and ry/rx."""
        return cls(rx=rx, ry=rx * aspect, rz=rx * aspect, **kwargs)

    @classmethod
    def sphere(cls, r: float, **kwargs) -> "Particle":
        return cls(rx=r, ry=r, rz=r, **kwargs)

    @property
    def aspect(self) -> float:
        """ry/rx."""
        return self.ry / self.rx

    @property
    def volume(self) -> float:
        return (4.0 * math.pi / 3.0) * self.rx * self.ry * self.rz

    @property
    def mass(self) -> float:
        return self.density * self.volume

    @property
    def moment_of_inertia(self) -> float:
        """Uniform ellipsoid about z: m (rx^2 + ry^2) / 5."""
        return self.mass * (self.rx ** 2 + self.ry ** 2) / 5.0

    @property
    def max_semiaxis(self) -> float:
        return max(self.rx, self.ry, self.rz)


@dataclass(frozen=True)
class TrapBeam:
    """Linearly polarized Gaussian tweezer, polarization along x_T."""
    power: float = config.TRAP_POWER
    waist: float = config.TRAP_WAIST
    wavelength: float = config.TRAP_WAVELENGTH

    def __post_init__(self):
        _require_positive("TrapBeam", power=self.power, waist=self.waist, wavelength=self.wavelength)

    @property
    def peak_intensity(self) -> float:
        return 2.0 * self.power / (math.pi * self.waist ** 2)

    def with_power(self, power: float) -> "TrapBeam":
        return TrapBeam(power=power, waist=self.waist, wavelength=self.wavelength)


@dataclass(frozen=True)
class GasEnvironment:
    pressure: float = 1e-8 * config.TORR
    temperature: float = config.TEMPERATURE
    molecular_mass: float = config.AIR_MOLECULAR_MASS
    accommodation: float = config.ACCOMMODATION

    def __post_init__(self):
        if not math.isfinite(self.pressure) or self.pressure < 0.0:
            raise DomainError(f"GasEnvironment.pressure must be >= 0, got {self.pressure!r}")
        _require_positive("GasEnvironment", temperature=self.temperature, molecular_mass=self.molecular_mass)
        if not 0.0 <= self.accommodation <= 1.0:
            raise DomainError(
                f"GasEnvironment.accommodation must lie in [0, 1], got {self.accommodation!r}"
            )

    def with_pressure(self, pressure: float) -> "GasEnvironment":
        return GasEnvironment(
            pressure=pressure,
            temperature=self.temperature,
            molecular_mass=self.molecular_mass,
            accommodation=self.accommodation,
        )


@dataclass(frozen=True)
class Cavity:
    """Two-mirror Fabry-Perot cavity."""
    length: float = config.CAVITY_LENGTH
    finesse: float = config.CAVITY_FINESSE
    wavelength: float = config.CAVITY_WAVELENGTH

    def __post_init__(self):
        _require_positive("Cavity", length=self.length, wavelength=self.wavelength)
        if not math.isfinite(self.finesse) or self.finesse <= 1.0:
            raise DomainError(f"Cavity.finesse must be > 1, got {self.finesse!r}")

    @property
    def decay_rate(self) -> float:
        """kappa = pi c / (L F), angular full width."""
        return math.pi * C / (self.length * self.finesse)

    @property
    def mode_waist(self) -> float:
        """Confocal mode waist sqrt(lambda_C L / 2 pi)."""
        return math.sqrt(self.wavelength * self.length / (2.0 * math.pi))

    def with_length(self, length: float) -> "Cavity":
        return Cavity(length=length, finesse=self.finesse, wavelength=self.wavelength)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def to_dict(self) -> dict:
        return {"ok": self.ok, "violations": list(self.violations), "warnings": list(self.warnings)}


def validate(particle: Particle, beam: TrapBeam, gas: GasEnvironment | None = None,
             cavity: Cavity | None = None) -> ValidationReport:
    """
    Check the relational invariants of a setup. Never raises.

    An empty report (no violations, no warnings) means the inputs are inside the
    model's domain.
    """
    report = ValidationReport()

    if particle.ry > particle.rx:
        report.violations.append(
            f"semiaxis ordering violated: ry={particle.ry:.4g} m > rx={particle.rx:.4g} m "
            "(model requires rx >= ry = rz)"
        )
    if not math.isclose(particle.ry, particle.rz, rel_tol=1e-12):
        report.violations.append(
            f"ry={particle.ry:.4g} m != rz={particle.rz:.4g} m (model requires ry = rz)"
        )
    if particle.eps_r <= 1.0:
        report.violations.append(f"eps_r={particle.eps_r:.4g} must exceed 1 for a dielectric")

    rayleigh_limit = beam.wavelength / 5.0
    if particle.max_semiaxis >= rayleigh_limit:
        report.warnings.append(
            f"Rayleigh approximation questionable: largest semiaxis {particle.max_semiaxis * 1e9:.1f} nm "
            f">= lambda/5 = {rayleigh_limit * 1e9:.1f} nm"
        )

    if gas is not None:
        from levitodyn.gas import knudsen_number
        kn = knudsen_number(particle, gas)
        if kn < config.FREE_MOLECULAR_MIN_KN:
            report.warnings.append(
                f"outside the free-molecular regime: Knudsen number {kn:.3g} < {config.FREE_MOLECULAR_MIN_KN:g}"
            )

    if cavity is not None and cavity.mode_waist <= particle.max_semiaxis:
        report.violations.append("cavity mode waist is not larger than the particle")

    for message in report.violations:
        logger.warning(f"validate: {message}")
    for message in report.warnings:
        logger.warning(f"validate: {message}")
    return report
