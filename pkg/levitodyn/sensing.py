"""Thermal-noise-limited torque sensing with the torsional mode."""

import logging
import math
from dataclasses import dataclass

from levitodyn import config
from levitodyn.core import KB, DomainError, GasEnvironment, Particle, TrapBeam

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SensitivityResult:
    M_min_per_rtHz: float   # N m / sqrt(Hz)

    def M_min(self, averaging_time: float) -> float:
        """Minimum detectable torque (N m) after averaging for `averaging_time` seconds."""
        if averaging_time <= 0.0:
            raise DomainError(f"averaging time must be positive, got {averaging_time!r}")
        return self.M_min_per_rtHz / math.sqrt(averaging_time)


def torque_sensitivity(temperature: float, inertia: float, omega_theta: float, q_theta: float) -> SensitivityResult:
    """M_min = sqrt(4 kB T I Omega_theta / Q_theta), i.e. per sqrt(Hz) at 1 s averaging."""
    for name, value in (("inertia", inertia), ("omega_theta", omega_theta), ("q_theta", q_theta)):
        if not value > 0.0:
            raise DomainError(f"{name} must be positive, got {value!r}")
    if temperature < 0.0:
        raise DomainError(f"temperature must be >= 0, got {temperature!r}")
    if math.isinf(q_theta):
        return SensitivityResult(0.0)
    return SensitivityResult(math.sqrt(4.0 * KB * temperature * inertia * omega_theta / q_theta))


def spin_torque(moment: float, field: float) -> float:
    """Largest torque mu B on a magnetic moment (J/T) in a field (T)."""
    if field < 0.0:
        raise DomainError(f"field must be >= 0, got {field!r}")
    return moment * field


def detection_time(torque: float, sensitivity: SensitivityResult) -> float:
    """Averaging time after which `torque` exceeds M_min: (M_min_per_rtHz / torque)^2."""
    if torque <= 0.0:
        return math.inf
    return (sensitivity.M_min_per_rtHz / torque) ** 2


def sensing_report(particle: Particle, beam: TrapBeam, gas: GasEnvironment) -> dict:
    """Torque sensitivity at the given pressure, compared with a tethered torsion sensor."""
    from levitodyn.gas import quality_factors
    from levitodyn.optics import frequencies

    freqs = frequencies(particle, beam)
    if freqs.degenerate:
        raise DomainError("no torsional mode: torque sensing needs chi_x > chi_y")
    q = quality_factors(particle, beam, gas)
    inertia = particle.moment_of_inertia
    result = torque_sensitivity(gas.temperature, inertia, freqs.omega_theta, q.Q_theta)

    m = result.M_min_per_rtHz
    gain = math.log10(config.TETHERED_SENSITIVITY / m) if m > 0 else math.inf
    proton = spin_torque(config.PROTON_MOMENT, 0.1)
    logger.info(
        f"sensing_report: M_min={m:.3g} N m/rtHz at p={gas.pressure:.3g} Pa "
        f"({gain:.1f} decades below a tethered sensor)"
    )
    return {
        "M_min_per_rtHz": m,
        "Q_theta": q.Q_theta,
        "omega_theta_Hz": freqs.omega_theta / (2.0 * math.pi),
        "I": inertia,
        "pressure_Pa": gas.pressure,
        "temperature_K": gas.temperature,
        "tethered_M_min_per_rtHz": config.TETHERED_SENSITIVITY,
        "decades_gained": gain,
        "proton_torque_0p1T": proton,
        "proton_detection_time_s": detection_time(proton, result),
        "flags": list(q.flags),
    }
