"""Configuration for levitodyn."""
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING

from dotenv import load_dotenv

if TYPE_CHECKING:
    from levitodyn.core import Cavity, GasEnvironment, Particle, TrapBeam

# Load .env from project root (one level above levitodyn/)
_env_path = Path(__file__).resolve().parent.parent / ".env"
load_dotenv(_env_path)

# Runtime settings
LEVITODYN_CONFIG    = os.getenv("LEVITODYN_CONFIG", "")
LOG_LEVEL           = os.getenv("LEVITODYN_LOG_LEVEL", "INFO")
LOG_FILE            = os.getenv("LEVITODYN_LOG_FILE", "levitodyn.log")
DEFAULT_JOBS        = int(os.getenv("LEVITODYN_JOBS", "1"))
DEFAULT_SEED        = int(os.getenv("LEVITODYN_SEED", "42"))

CONFIGS_DIR         = Path(__file__).resolve().parent.parent / "configs"

# Nanodiamond defaults. Reverse-engineered: these two reproduce chi_x=2.05 / chi_y=1.74
# at aspect 0.8 and the 220 kHz / 1.26 MHz trap frequencies of the 50x40 nm particle.
DIAMOND_DENSITY     = 3500.0       # kg/m^3
DIAMOND_EPS_R       = 5.71         # n ~ 2.39 at 1550 nm

# Trap defaults
TRAP_POWER          = 0.1          # W
TRAP_WAIST          = 600e-9       # m
TRAP_WAVELENGTH     = 1550e-9      # m

# Gas defaults: air as a single species
AIR_MOLECULAR_MASS  = 4.81e-26     # kg, 28.97 u
AIR_KINETIC_DIAMETER = 3.7e-10     # m, hard-sphere diameter for the mean free path
ACCOMMODATION       = 0.9          # "mainly inelastic" collisions
TEMPERATURE         = 300.0        # K
TORR                = 101325.0 / 760.0   # Pa
FREE_MOLECULAR_MIN_KN = 10.0

# Cavity defaults
CAVITY_WAVELENGTH   = 1540e-9      # m
CAVITY_FINESSE      = 1e5
CAVITY_LENGTH       = 5e-3         # m

# Spectral defaults
PSD_WINDOW          = "hann"
PSD_OVERLAP         = 0.5
PSD_SEGMENT         = 65536
FIT_MIN_BINS        = 10

# Dynamics defaults
STEPS_PER_PERIOD    = 50           # default dt = (2 pi / Omega_max) / 50
DT_GUARD_FRACTION   = 0.05         # dt must stay below 5% of the fastest period

# Sensing
TETHERED_SENSITIVITY = 1e-21       # N m / sqrt(Hz), typical nanofabricated torque sensor
PROTON_MOMENT       = 1.41e-26     # J/T
BOHR_MAGNETON       = 9.2740100783e-24   # J/T

FIGURE_IDS = ["2a", "2b", "2c", "2d", "3a", "3b", "3c", "3d", "4a", "4b"]

# Output columns
FREQS_COLUMNS    = ["power_W", "omega_y_Hz", "omega_theta_Hz"]
CHI_COLUMNS      = ["aspect", "L_x", "L_y", "L_z", "chi_x", "chi_y"]
DAMPING_COLUMNS  = ["pressure_Pa", "gamma_x", "gamma_y", "gamma_theta", "Q_y", "Q_theta"]
TRAJ_COLUMNS     = ["t_s", "y_m", "vy_ms", "theta_rad", "omega_rads"]
PSD_COLUMNS      = ["freq_Hz", "psd"]
COOL_COLUMNS     = [
    "n_photons", "n_theta", "n_y",
    "A_minus_theta", "A_plus_theta", "A_minus_y", "A_plus_y",
    "ground_theta", "ground_y",
]

_SECTION_FIELDS = {
    "particle": {"rx", "ry", "rz", "density", "eps_r"},
    "beam":     {"power", "waist", "wavelength"},
    "gas":      {"pressure", "temperature", "molecular_mass", "accommodation"},
    "cavity":   {"length", "finesse", "wavelength"},
}


@dataclass(frozen=True)
class RunConfig:
    """The four core inputs of every subcommand, plus the raw JSON they came from."""
    particle: "Particle"
    beam: "TrapBeam"
    gas: "GasEnvironment"
    cavity: "Cavity"
    snapshot: dict


def _strip_comments(section: dict) -> dict:
    """Keys starting with '_' carry provenance notes and never reach the physics."""
    return {k: v for k, v in section.items() if not k.startswith("_")}


def parse_config(raw: dict) -> RunConfig:
    """Validate a config dict and build the core types. Missing fields take defaults."""
    from levitodyn.core import Cavity, ConfigError, GasEnvironment, Particle, TrapBeam

    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")

    top = _strip_comments(raw)
    unknown = set(top) - set(_SECTION_FIELDS)
    if unknown:
        raise ConfigError(f"unknown config section(s): {sorted(unknown)}")

    sections = {}
    for name, allowed in _SECTION_FIELDS.items():
        section = top.get(name, {}) or {}
        if not isinstance(section, dict):
            raise ConfigError(f"config section '{name}' must be an object")
        section = _strip_comments(section)
        bad = set(section) - allowed
        if bad:
            raise ConfigError(f"unknown key(s) in '{name}': {sorted(bad)}")
        for key, value in section.items():
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"'{name}.{key}' must be a number, got {value!r}")
        sections[name] = {k: float(v) for k, v in section.items()}

    p = sections["particle"]
    b = sections["beam"]
    g = sections["gas"]
    cav = sections["cavity"]

    rx = p.get("rx", 50e-9)
    ry = p.get("ry", 40e-9)
    particle = Particle(
        rx=rx,
        ry=ry,
        rz=p.get("rz", ry),
        density=p.get("density", DIAMOND_DENSITY),
        eps_r=p.get("eps_r", DIAMOND_EPS_R),
    )
    beam = TrapBeam(
        power=b.get("power", TRAP_POWER),
        waist=b.get("waist", TRAP_WAIST),
        wavelength=b.get("wavelength", TRAP_WAVELENGTH),
    )
    gas = GasEnvironment(
        pressure=g.get("pressure", 1e-8 * TORR),
        temperature=g.get("temperature", TEMPERATURE),
        molecular_mass=g.get("molecular_mass", AIR_MOLECULAR_MASS),
        accommodation=g.get("accommodation", ACCOMMODATION),
    )
    cavity = Cavity(
        length=cav.get("length", CAVITY_LENGTH),
        finesse=cav.get("finesse", CAVITY_FINESSE),
        wavelength=cav.get("wavelength", CAVITY_WAVELENGTH),
    )
    return RunConfig(particle=particle, beam=beam, gas=gas, cavity=cavity, snapshot=raw)


def load_config(path: str | os.PathLike | None = None) -> RunConfig:
    """
    Load a JSON run configuration.

    Resolution order: explicit path, then LEVITODYN_CONFIG, then built-in defaults
    (50x40x40 nm diamond, 100 mW trap, 1e-8 Torr).
    """
    from levitodyn.core import ConfigError

    path = path or LEVITODYN_CONFIG
    if not path:
        return parse_config({})

    config_path = Path(path)
    try:
        raw = json.loads(config_path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {config_path}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file {config_path} is not valid JSON: {e}") from None
    return parse_config(raw)
