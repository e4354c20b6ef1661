"""
Rayleigh-regime optics of an ellipsoid in a linearly polarized Gaussian tweezer.

The particle sits in the focal plane; only the transverse coordinate y (perpendicular
to the polarization) and the torsional angle theta about the propagation axis are
modeled. theta is measured between the long axis x_N and the polarization x_T.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from levitodyn.core import C, EPS0, KB, DomainError, Particle, TrapBeam

logger = logging.getLogger(__name__)

# Below this eccentricity the closed form loses digits to cancellation.
_SERIES_ECCENTRICITY = 0.05


@dataclass(frozen=True)
class Susceptibility:
    chi_x: float
    chi_y: float
    L_x: float
    L_y: float
    L_z: float

    @property
    def anisotropy(self) -> float:
        return self.chi_x - self.chi_y

    def polarizabilities(self, particle: Particle) -> tuple[float, float]:
        """(alpha_x, alpha_y) = eps0 V chi_i, in C m^2 / V."""
        scale = EPS0 * particle.volume
        return scale * self.chi_x, scale * self.chi_y


@dataclass(frozen=True)
class TrapFrequencies:
    omega_y: float
    omega_theta: float
    degenerate: bool = False
    flags: list[str] = field(default_factory=list)

    def __iter__(self):
        yield self.omega_y
        yield self.omega_theta


def depolarization_factors(aspect: float) -> tuple[float, float, float]:
    """
    Depolarization factors (L_x, L_y, L_z) of a prolate spheroid with ry/rx = aspect.

    L_x = ((1 - e^2) / e^2) * (atanh(e) / e - 1), e = sqrt(1 - aspect^2), and
    L_y = L_z = (1 - L_x) / 2.
    """
    if not (0.0 < aspect <= 1.0):
        raise DomainError(f"aspect ratio ry/rx must lie in (0, 1], got {aspect!r}")
    if aspect == 1.0:
        return 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0

    e2 = 1.0 - aspect * aspect
    e = math.sqrt(e2)
    if e < _SERIES_ECCENTRICITY:
        # (atanh(e)/e - 1)/e^2 = sum_k e^(2k-2) / (2k+1)
        bracket = sum(e2 ** (k - 1) / (2 * k + 1) for k in range(1, 9))
        L_x = (1.0 - e2) * bracket
    else:
        L_x = ((1.0 - e2) / e2) * (math.atanh(e) / e - 1.0)
    L_y = (1.0 - L_x) / 2.0
    return L_x, L_y, L_y


def susceptibilities(particle: Particle) -> Susceptibility:
    """chi_i = (eps_r - 1) / (1 + L_i (eps_r - 1)) along the principal axes."""
    L_x, L_y, L_z = depolarization_factors(particle.aspect)
    d = particle.eps_r - 1.0
    chi_x = d / (1.0 + L_x * d)
    chi_y = d / (1.0 + L_y * d)
    return Susceptibility(chi_x=chi_x, chi_y=chi_y, L_x=L_x, L_y=L_y, L_z=L_z)


# ---------------------------------------------------------------------------
# Potential, force, torque
# ---------------------------------------------------------------------------

def intensity(beam: TrapBeam, y):
    """Focal-plane Gaussian intensity I_L(y) in W/m^2. Accepts scalars or arrays."""
    y = np.asarray(y, dtype=float)
    out = beam.peak_intensity * np.exp(-2.0 * y ** 2 / beam.waist ** 2)
    return float(out) if out.ndim == 0 else out


def _prefactor(particle: Particle) -> float:
    return particle.volume / (2.0 * C)


def potential(particle: Particle, beam: TrapBeam, y, theta, chi: Susceptibility | None = None):
    """U(y, theta) = -(V/2c) [chi_x - (chi_x - chi_y) sin^2 theta] I_L(y), in J."""
    chi = chi or susceptibilities(particle)
    theta = np.asarray(theta, dtype=float)
    angular = chi.chi_x - chi.anisotropy * np.sin(theta) ** 2
    out = -_prefactor(particle) * angular * intensity(beam, y)
    return float(out) if np.ndim(out) == 0 else out


def restoring_torque(particle: Particle, beam: TrapBeam, y, theta, chi: Susceptibility | None = None):
    """M_z = -dU/dtheta = -(V/2c)(chi_x - chi_y) sin(2 theta) I_L(y), in N m."""
    chi = chi or susceptibilities(particle)
    theta = np.asarray(theta, dtype=float)
    out = -_prefactor(particle) * chi.anisotropy * np.sin(2.0 * theta) * intensity(beam, y)
    return float(out) if np.ndim(out) == 0 else out


def restoring_force(particle: Particle, beam: TrapBeam, y, theta, chi: Susceptibility | None = None):
    """F_y = -dU/dy = -(V/2c) [chi_x - (chi_x - chi_y) sin^2 theta] I_L(y) * 4y/Wt^2, in N."""
    chi = chi or susceptibilities(particle)
    y = np.asarray(y, dtype=float)
    theta = np.asarray(theta, dtype=float)
    angular = chi.chi_x - chi.anisotropy * np.sin(theta) ** 2
    out = -_prefactor(particle) * angular * intensity(beam, y) * 4.0 * y / beam.waist ** 2
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# Frequencies
# ---------------------------------------------------------------------------

def frequencies(particle: Particle, beam: TrapBeam) -> TrapFrequencies:
    """
    Small-oscillation frequencies about (y, theta) = (0, 0).

        Omega_y     = sqrt(4 chi_x P / (c pi rho Wt^4))
        Omega_theta = sqrt(10 (chi_x - chi_y) P / (c pi rho Wt^2 (rx^2 + ry^2)))

    The factor 10 follows from the torsional stiffness (V/c)(chi_x - chi_y) I(0) with
    I(0) = 2P/(pi Wt^2) divided by the moment of inertia rho V (rx^2 + ry^2)/5.
    A particle with chi_x <= chi_y has no torsional confinement: Omega_theta = 0 and the
    result is flagged degenerate.
    """
    chi = susceptibilities(particle)
    P, W, rho = beam.power, beam.waist, particle.density

    omega_y = math.sqrt(4.0 * chi.chi_x * P / (C * math.pi * rho * W ** 4))

    if chi.anisotropy <= 0.0:
        logger.warning(
            f"frequencies: no torsional confinement (chi_x - chi_y = {chi.anisotropy:.3g}); "
            "Omega_theta set to 0"
        )
        return TrapFrequencies(omega_y, 0.0, degenerate=True, flags=["degenerate_torsional_mode"])

    omega_theta = math.sqrt(
        10.0 * chi.anisotropy * P
        / (C * math.pi * rho * W ** 2 * (particle.rx ** 2 + particle.ry ** 2))
    )
    return TrapFrequencies(omega_y, omega_theta)


def frequency_ratio(particle: Particle, beam: TrapBeam) -> float:
    """
    Omega_theta / Omega_y = sqrt(10 (chi_x - chi_y) / (4 chi_x)) * Wt / sqrt(rx^2 + ry^2).

    Independent of power and density; grows as Wt/rx.
    """
    chi = susceptibilities(particle)
    if chi.anisotropy <= 0.0:
        return 0.0
    return (
        math.sqrt(10.0 * chi.anisotropy / (4.0 * chi.chi_x))
        * beam.waist / math.sqrt(particle.rx ** 2 + particle.ry ** 2)
    )


def stiffnesses(particle: Particle, beam: TrapBeam) -> tuple[float, float]:
    """(k_y, k_theta) = (m Omega_y^2, I Omega_theta^2) in N/m and N m/rad."""
    omega_y, omega_theta = frequencies(particle, beam)
    return particle.mass * omega_y ** 2, particle.moment_of_inertia * omega_theta ** 2


def trap_depths(particle: Particle, beam: TrapBeam) -> dict:
    """
    COM trap depth (V/2c) chi_x I(0) and torsional barrier (V/2c)(chi_x - chi_y) I(0).

    The torsional barrier is the energy at theta = pi/2 relative to theta = 0.
    """
    chi = susceptibilities(particle)
    scale = _prefactor(particle) * beam.peak_intensity
    depth_y = scale * chi.chi_x
    barrier_theta = scale * max(chi.anisotropy, 0.0)
    return {
        "depth_y_J": depth_y,
        "barrier_theta_J": barrier_theta,
        "depth_y_K": depth_y / KB,
        "barrier_theta_K": barrier_theta / KB,
    }


def potential_profiles(particle: Particle, beam: TrapBeam, n: int = 401, span: float = 2.0) -> dict:
    """
    U_y(y) at theta = 0 and U_theta at y = 0 against the apex displacement rx*theta.

    Both coordinates run over +-span*Wt, so U_theta shows several periods inside the waist.
    """
    chi = susceptibilities(particle)
    s = np.linspace(-span * beam.waist, span * beam.waist, n)
    u_y = potential(particle, beam, s, 0.0, chi=chi)
    u_theta = potential(particle, beam, 0.0, s / particle.rx, chi=chi)
    return {"coordinate_m": s, "U_y_J": np.asarray(u_y), "U_theta_J": np.asarray(u_theta)}
