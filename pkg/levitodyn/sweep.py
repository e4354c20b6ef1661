"""
Grid evaluation of the closed-form outputs over one configuration parameter.

An axis is written `name:start:stop:count[:log]`, e.g. `pressure:1e-6:1e2:9:log`.
Points are evaluated in parallel and written in grid order.
"""

import logging
import math
from dataclasses import dataclass, replace
from functools import partial

import numpy as np
import pandas as pd

from levitodyn.config import RunConfig
from levitodyn.cooling import CoolingSetup, coupling_com, coupling_torsional
from levitodyn.core import ConfigError, LevitodynError, pa_to_torr, to_hz, torr_to_pa
from levitodyn.gas import damping_rates, quality_factors
from levitodyn.jobs import parallel_map
from levitodyn.optics import frequencies
from levitodyn.records import flags_to_cell
from levitodyn.sensing import torque_sensitivity

logger = logging.getLogger(__name__)


def _set_particle(cfg, **kw):
    return replace(cfg, particle=replace(cfg.particle, **kw))


def _set_aspect(cfg, value):
    ry = cfg.particle.rx * value
    return _set_particle(cfg, ry=ry, rz=ry)


def _set_radius(cfg, value):
    """Scale the particle keeping its aspect ratio."""
    aspect = cfg.particle.aspect
    return _set_particle(cfg, rx=value, ry=value * aspect, rz=value * aspect)


SWEEPABLE = {
    "power":         lambda cfg, v: replace(cfg, beam=replace(cfg.beam, power=v)),
    "waist":         lambda cfg, v: replace(cfg, beam=replace(cfg.beam, waist=v)),
    "rx":            _set_radius,
    "aspect":        _set_aspect,
    "density":       lambda cfg, v: _set_particle(cfg, density=v),
    "eps_r":         lambda cfg, v: _set_particle(cfg, eps_r=v),
    "pressure":      lambda cfg, v: replace(cfg, gas=cfg.gas.with_pressure(v)),
    "pressure_torr": lambda cfg, v: replace(cfg, gas=cfg.gas.with_pressure(torr_to_pa(v))),
    "temperature":   lambda cfg, v: replace(cfg, gas=replace(cfg.gas, temperature=v)),
    "accommodation": lambda cfg, v: replace(cfg, gas=replace(cfg.gas, accommodation=v)),
    "cavity_length": lambda cfg, v: replace(cfg, cavity=cfg.cavity.with_length(v)),
    "finesse":       lambda cfg, v: replace(cfg, cavity=replace(cfg.cavity, finesse=v)),
}

SWEEP_COLUMNS = [
    "omega_y_Hz", "omega_theta_Hz", "omega_y_over_sqrtP", "omega_theta_over_sqrtP",
    "gamma_x", "gamma_y", "gamma_theta", "Q_y", "Q_theta", "Q_y_times_p", "Q_theta_times_p",
    "g_theta_Hz", "g_y_Hz", "g_theta_L2", "g_y_L2", "M_min_per_rtHz", "flags",
]


@dataclass(frozen=True)
class Axis:
    name: str
    start: float
    stop: float
    count: int
    log: bool = False

    def values(self) -> np.ndarray:
        if self.log:
            return np.logspace(math.log10(self.start), math.log10(self.stop), self.count)
        return np.linspace(self.start, self.stop, self.count)


def parse_axis(spec: str) -> Axis:
    """Parse `name:start:stop:count[:log]`."""
    parts = spec.split(":")
    if len(parts) not in (4, 5) or (len(parts) == 5 and parts[4] != "log"):
        raise ConfigError(f"axis spec {spec!r} must look like name:start:stop:count[:log]")
    name = parts[0]
    if name not in SWEEPABLE:
        raise ConfigError(f"unknown sweep parameter {name!r}; sweepable: {', '.join(sorted(SWEEPABLE))}")
    try:
        start, stop, count = float(parts[1]), float(parts[2]), int(parts[3])
    except ValueError:
        raise ConfigError(f"axis spec {spec!r} has non-numeric bounds or count") from None
    if count < 1:
        raise ConfigError(f"axis count must be >= 1, got {count}")
    log = len(parts) == 5
    if log and (start <= 0.0 or stop <= 0.0):
        raise ConfigError("log axes need positive bounds")
    return Axis(name, start, stop, count, log)


def evaluate_point(cfg: RunConfig) -> dict:
    """Every closed-form output at one configuration. Domain failures become nan + flag."""
    flags = []
    beam, particle, gas = cfg.beam, cfg.particle, cfg.gas
    freqs = frequencies(particle, beam)
    rates = damping_rates(particle, gas)
    q = quality_factors(particle, beam, gas)
    flags += q.flags

    setup = CoolingSetup(cfg.cavity, particle, beam)
    try:
        g_theta = coupling_torsional(setup)
    except LevitodynError as e:
        flags.append(f"g_theta: {e}")
        g_theta = math.nan
    g_y = coupling_com(setup)

    try:
        m_min = torque_sensitivity(gas.temperature, particle.moment_of_inertia, freqs.omega_theta, q.Q_theta).M_min_per_rtHz
    except LevitodynError:
        m_min = math.nan

    root_p = math.sqrt(beam.power)
    length2 = cfg.cavity.length ** 2
    return {
        "omega_y_Hz": to_hz(freqs.omega_y),
        "omega_theta_Hz": to_hz(freqs.omega_theta),
        "omega_y_over_sqrtP": freqs.omega_y / root_p,
        "omega_theta_over_sqrtP": freqs.omega_theta / root_p,
        "gamma_x": rates.gamma_x,
        "gamma_y": rates.gamma_y,
        "gamma_theta": rates.gamma_theta,
        "Q_y": q.Q_y,
        "Q_theta": q.Q_theta,
        "Q_y_times_p": q.Q_y * gas.pressure,
        "Q_theta_times_p": q.Q_theta * gas.pressure,
        "g_theta_Hz": to_hz(g_theta),
        "g_y_Hz": to_hz(g_y),
        "g_theta_L2": g_theta * length2,
        "g_y_L2": g_y * length2,
        "M_min_per_rtHz": m_min,
        "flags": flags_to_cell(sorted(set(flags))),
    }


def _evaluate_value(cfg: RunConfig, name: str, value: float) -> dict:
    """Apply one axis value and evaluate; a value the setup rejects gives a nan row."""
    try:
        return evaluate_point(SWEEPABLE[name](cfg, value))
    except LevitodynError as e:
        logger.warning(f"{name}={value!r} skipped: {e}")
        row = {col: math.nan for col in SWEEP_COLUMNS}
        row["flags"] = f"invalid_point: {e}"
        return row


def cmd_sweep(cfg: RunConfig, axis: Axis, jobs: int = 1) -> pd.DataFrame:
    """One row per grid value, in grid order regardless of `jobs`."""
    values = axis.values()
    worker = partial(_evaluate_value, cfg, axis.name)
    rows = parallel_map(worker, [float(v) for v in values], jobs=jobs, label=f"{axis.name} point")
    df = pd.DataFrame(rows, columns=SWEEP_COLUMNS)
    df.insert(0, axis.name, values)
    if axis.name == "pressure":
        df.insert(1, "pressure_Torr", [pa_to_torr(v) for v in values])
    return df
