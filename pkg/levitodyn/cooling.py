"""
Cavity sideband cooling of the torsional and COM modes.

Linearized optomechanics in the weak-coupling limit: the cavity field of steady amplitude
sqrt(n_p) enhances the single-photon coupling g to G = g sqrt(n_p), and the mode relaxes
towards the quantum backaction limit at rate A_minus - A_plus while the gas pulls it back
to the thermal occupation. The two modes are treated independently.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from levitodyn import config
from levitodyn.core import C, HBAR, KB, Cavity, DomainError, GasEnvironment, Particle, TrapBeam
from levitodyn.gas import damping_rates
from levitodyn.optics import frequencies, susceptibilities

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CoolingSetup:
    """
    Drive and geometry. detuning=None selects the optimal detuning for each mode;
    otherwise it is the bare laser detuning, shifted by 2 g^2 n_p / Omega per mode.
    beta=None places each mode at its best polarization angle (45 deg torsional, 0 COM).
    """
    cavity: Cavity
    particle: Particle
    beam: TrapBeam
    drive_photons: float = 0.0
    detuning: float | None = None
    beta: float | None = None

    def __post_init__(self):
        if not math.isfinite(self.drive_photons) or self.drive_photons < 0.0:
            raise DomainError(f"drive_photons must be >= 0, got {self.drive_photons!r}")

    @property
    def amplitude(self) -> float:
        """|alpha| = sqrt(n_p)."""
        return math.sqrt(self.drive_photons)

    def with_drive(self, n_photons: float) -> "CoolingSetup":
        return CoolingSetup(self.cavity, self.particle, self.beam, n_photons, self.detuning, self.beta)


@dataclass(frozen=True)
class PhononState:
    n_ss: float
    A_plus: float
    A_minus: float
    n_min: float
    n_th: float
    gamma_opt: float
    detuning: float
    flags: list[str] = field(default_factory=list)

    @property
    def ground_state(self) -> bool:
        return self.n_ss < 1.0


# ---------------------------------------------------------------------------
# Couplings
# ---------------------------------------------------------------------------

def coupling_torsional(setup: CoolingSetup) -> float:
    """
    g_theta = sqrt(10 hbar pi rx ry^2 / (3 rho (rx^2 + ry^2) Omega_theta)) (chi_x - chi_y)
              * 64 pi c / (lambda_C^2 L^2)

    at a field antinode, scaled by |sin 2 beta| when beta is set.
    """
    p, cav = setup.particle, setup.cavity
    freqs = frequencies(p, setup.beam)
    if freqs.degenerate:
        raise DomainError("no torsional mode: the particle has no orientation-dependent polarizability")
    chi = susceptibilities(p)
    zpf = math.sqrt(
        10.0 * HBAR * math.pi * p.rx * p.ry ** 2
        / (3.0 * p.density * (p.rx ** 2 + p.ry ** 2) * freqs.omega_theta)
    )
    g = zpf * chi.anisotropy * 64.0 * math.pi * C / (cav.wavelength ** 2 * cav.length ** 2)
    if setup.beta is not None:
        g *= abs(math.sin(2.0 * setup.beta))
    return g


def coupling_com(setup: CoolingSetup) -> float:
    """
    g_y = sqrt(2 hbar pi rx ry^2 / (3 rho Omega_y)) chi_x 16 pi^2 c / (lambda_C^3 L^2)

    with chi_x replaced by chi_x cos^2 beta + chi_y sin^2 beta when beta is set.
    """
    p, cav = setup.particle, setup.cavity
    freqs = frequencies(p, setup.beam)
    chi = susceptibilities(p)
    chi_cav = chi.chi_x
    if setup.beta is not None:
        chi_cav = chi.chi_x * math.cos(setup.beta) ** 2 + chi.chi_y * math.sin(setup.beta) ** 2
    zpf = math.sqrt(2.0 * HBAR * math.pi * p.rx * p.ry ** 2 / (3.0 * p.density * freqs.omega_y))
    return zpf * chi_cav * 16.0 * math.pi ** 2 * C / (cav.wavelength ** 3 * cav.length ** 2)


# ---------------------------------------------------------------------------
# Rate equations
# ---------------------------------------------------------------------------

def optimal_detuning(kappa: float, omega: float) -> float:
    """Delta_L = -sqrt(kappa^2/4 + Omega^2)."""
    if kappa < 0.0 or omega < 0.0:
        raise DomainError(f"kappa and Omega must be >= 0, got {kappa!r}, {omega!r}")
    return -math.sqrt(kappa * kappa / 4.0 + omega * omega)


def effective_detuning(laser_detuning: float, coupling: float, n_photons: float, omega: float) -> float:
    """Delta_L = Delta + 2 g^2 n_p / Omega."""
    return laser_detuning + 2.0 * coupling ** 2 * n_photons / omega


def weak_coupling_limit(coupling: float, kappa: float) -> float:
    """Largest n_p with G = g sqrt(n_p) below kappa/2."""
    if coupling == 0.0:
        return math.inf
    return (kappa / (2.0 * coupling)) ** 2


def drive_power(setup: CoolingSetup, n_photons: float, laser_wavelength: float | None = None) -> float:
    """Input power P_in = n_p hbar omega_L kappa / 4 for a resonant drive."""
    wavelength = laser_wavelength or setup.cavity.wavelength
    omega_l = 2.0 * math.pi * C / wavelength
    return n_photons * HBAR * omega_l * setup.cavity.decay_rate / 4.0


def steady_phonons(
    setup: CoolingSetup,
    omega: float,
    gamma_gas: float,
    temperature: float,
    coupling: float,
) -> PhononState:
    """
    Steady-state occupation of a mode at frequency omega with single-photon coupling g.

        A_-/+ = G^2 kappa / (kappa^2/4 + (Delta_L +/- Omega)^2)
        n_ss  = (Gamma_opt n_min + Gamma_gas n_th) / (Gamma_opt + Gamma_gas)

    A heating detuning (A_minus <= A_plus with drive on) is flagged and n_ss is infinite.
    """
    if omega <= 0.0:
        raise DomainError(f"mode frequency must be positive, got {omega!r}")
    kappa = setup.cavity.decay_rate
    n_p = setup.drive_photons
    flags = []

    if setup.detuning is None:
        delta = optimal_detuning(kappa, omega)
    else:
        delta = effective_detuning(setup.detuning, coupling, n_p, omega)

    G2 = coupling ** 2 * n_p
    if G2 > 0.0 and math.sqrt(G2) >= kappa / 2.0:
        logger.warning(
            f"steady_phonons: G={math.sqrt(G2):.3g} rad/s >= kappa/2={kappa / 2.0:.3g} rad/s; "
            "weak-coupling rates are unreliable"
        )
        flags.append("strong_coupling")

    a_minus = kappa / (kappa * kappa / 4.0 + (delta + omega) ** 2)
    a_plus = kappa / (kappa * kappa / 4.0 + (delta - omega) ** 2)
    A_minus, A_plus = G2 * a_minus, G2 * a_plus
    gamma_opt = A_minus - A_plus
    n_min = a_plus / (a_minus - a_plus) if a_minus > a_plus else math.inf
    n_th = KB * temperature / (HBAR * omega)

    if G2 > 0.0 and a_minus <= a_plus:
        flags.append("heating_detuning")
        n_ss = math.inf
    elif gamma_opt + gamma_gas == 0.0:
        flags.append("undamped")
        n_ss = math.nan
    else:
        n_ss = (A_plus + gamma_gas * n_th) / (gamma_opt + gamma_gas)

    return PhononState(
        n_ss=n_ss, A_plus=A_plus, A_minus=A_minus, n_min=n_min, n_th=n_th,
        gamma_opt=gamma_opt, detuning=delta, flags=flags,
    )


def mode_parameters(setup: CoolingSetup, gas: GasEnvironment) -> dict:
    """(Omega, Gamma_gas, g) for the torsional and COM modes."""
    freqs = frequencies(setup.particle, setup.beam)
    rates = damping_rates(setup.particle, gas)
    return {
        "theta": (freqs.omega_theta, rates.gamma_theta, coupling_torsional(setup)),
        "y": (freqs.omega_y, rates.gamma_y, coupling_com(setup)),
    }


def cooling_sweep(setup: CoolingSetup, drive_range, gas: GasEnvironment,
                  temperature: float | None = None) -> pd.DataFrame:
    """
    n_theta and n_y over an increasing grid of intracavity photon numbers.

    Columns follow COOL_COLUMNS; ground_* mark n_ss < 1. Drives beyond a mode's
    weak-coupling limit are logged once.
    """
    drives = np.asarray(drive_range, dtype=float)
    if drives.ndim != 1 or drives.size < 1:
        raise DomainError("drive_range must be a non-empty 1-D grid")
    if np.any(drives < 0.0) or np.any(np.diff(drives) <= 0.0):
        raise DomainError("drive_range must be non-negative and strictly increasing")

    temperature = gas.temperature if temperature is None else temperature
    modes = mode_parameters(setup, gas)
    kappa = setup.cavity.decay_rate
    for name, (_, _, g) in modes.items():
        limit = weak_coupling_limit(g, kappa)
        if drives[-1] >= limit:
            logger.warning(f"cooling_sweep: drives above n_p={limit:.3g} break weak coupling for {name}")

    rows = []
    for n_p in drives:
        point = setup.with_drive(float(n_p))
        theta = steady_phonons(point, *modes["theta"][:2], temperature, modes["theta"][2])
        y = steady_phonons(point, *modes["y"][:2], temperature, modes["y"][2])
        rows.append({
            "n_photons": float(n_p),
            "n_theta": theta.n_ss,
            "n_y": y.n_ss,
            "A_minus_theta": theta.A_minus,
            "A_plus_theta": theta.A_plus,
            "A_minus_y": y.A_minus,
            "A_plus_y": y.A_plus,
            "ground_theta": theta.ground_state,
            "ground_y": y.ground_state,
        })
    return pd.DataFrame(rows, columns=config.COOL_COLUMNS)


def ground_state_window(sweep: pd.DataFrame) -> dict:
    """Per mode, the (lowest, highest) drive with n_ss < 1, or None if never reached."""
    window = {}
    for mode in ("theta", "y"):
        hits = sweep.loc[sweep[f"ground_{mode}"].astype(bool), "n_photons"]
        window[mode] = (float(hits.min()), float(hits.max())) if len(hits) else None
    return window
