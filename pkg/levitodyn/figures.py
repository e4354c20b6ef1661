# ========== FIGURE DATA PIPELINES ==========

"""
Data behind each published figure panel, computed from a shipped config.

Usage:

python -m levitodyn figures 3b --out out/fig3b.csv
python -m levitodyn figures 2c --jobs 4 --seed 7
python -m levitodyn figures 4b --cavity-length 0.5e-3 --gnuplot

Panels 2b/2c/2d run the full simulate -> detector -> PSD -> Lorentzian fit pipeline on
synthetic data; the others evaluate the closed forms.
"""

import logging
import math
import time
from dataclasses import replace

import numpy as np
import pandas as pd

from levitodyn import config
from levitodyn.config import RunConfig, load_config
from levitodyn.cooling import CoolingSetup, cooling_sweep, coupling_com, coupling_torsional, ground_state_window
from levitodyn.core import ConfigError, DomainError, Particle, pa_to_torr, to_hz, torr_to_pa
from levitodyn.dynamics import default_timestep, detector_signals, simulate
from levitodyn.gas import damping_rates, orientation_averaged_ratio, quality_factors
from levitodyn.jobs import parallel_map
from levitodyn.optics import frequencies, frequency_ratio, potential_profiles
from levitodyn.spectral import (
    fit_lorentzian,
    fit_sqrt_power,
    frequency_ratios,
    pressure_independence,
    welch_psd,
)

logger = logging.getLogger(__name__)

FIGURE_CONFIGS = {
    "2a": "paper_fig3.json", "2b": "paper_fig3.json", "2c": "paper_fig3.json", "2d": "paper_fig3.json",
    "3a": "paper_fig3.json", "3b": "paper_fig3.json", "3c": "paper_fig3.json", "3d": "paper_fig3.json",
    "4a": "paper_fig4.json", "4b": "paper_fig4.json",
}

# Trap powers (W) for the sqrt(P) and ratio panels.
POWERS = [0.025, 0.05, 0.1, 0.2]
# Pressures (Torr) for the pressure-independence panel.
PIPELINE_PRESSURES_TORR = [1.0, 10.0, 100.0]
# Pressure of the power-series panels; damping is strong enough for short runs.
SERIES_PRESSURE_TORR = 10.0


# ---------------------------------------------------------------------------
# simulate -> PSD -> fit
# ---------------------------------------------------------------------------

def measure_modes(
    particle: Particle,
    beam,
    gas,
    seed=config.DEFAULT_SEED,
    temperature: float | None = None,
    bins_per_linewidth: float = 10.0,
    n_segments: int = 15,
    noise_floor: float = 0.0,
    mode: str = "harmonic",
) -> dict:
    """
    Simulate, detect and fit both modes. Returns {"y": LorentzianFit, "theta": ..., "run": {...}}.

    The Welch segment is sized so each linewidth spans `bins_per_linewidth` bins and the
    run holds `n_segments` half-overlapping segments.
    """
    freqs = frequencies(particle, beam)
    if freqs.degenerate:
        raise DomainError("no torsional mode to measure: chi_x <= chi_y")
    rates = damping_rates(particle, gas)
    gamma_min = min(rates.gamma_y, rates.gamma_theta)
    if gamma_min <= 0.0:
        raise DomainError("the measurement pipeline needs gas damping (pressure > 0)")

    dt = default_timestep(particle, beam)
    linewidth_hz = gamma_min / (2.0 * math.pi)
    segment = max(4096, 2 ** math.ceil(math.log2(bins_per_linewidth / (linewidth_hz * dt))))
    n_steps = segment * (n_segments + 1) // 2

    temperature = gas.temperature if temperature is None else temperature
    traj = simulate(particle, beam, gas, temperature=temperature, dt=dt, n_steps=n_steps, seed=seed, mode=mode)
    signals = detector_signals(traj, noise_floor=noise_floor)

    nyquist = 0.5 / traj.dt
    f_y, f_theta = to_hz(freqs.omega_y), to_hz(freqs.omega_theta)
    fit_y = fit_lorentzian(welch_psd(signals.com, traj.dt, segment), (0.5 * f_y, min(1.5 * f_y, nyquist)))
    fit_t = fit_lorentzian(welch_psd(signals.tor, traj.dt, segment), (0.5 * f_theta, min(1.5 * f_theta, nyquist)))
    return {
        "y": fit_y,
        "theta": fit_t,
        "run": {"n_steps": n_steps, "segment_len": segment, "dt": dt},
    }


def _pipeline_row(label: str, particle: Particle, beam, gas, seed, **kwargs) -> dict:
    fits = measure_modes(particle, beam, gas, seed=seed, **kwargs)
    freqs = frequencies(particle, beam)
    rates = damping_rates(particle, gas)
    return {
        "geometry": label,
        "power_W": beam.power,
        "pressure_Torr": pa_to_torr(gas.pressure),
        "omega_y_fit_Hz": to_hz(fits["y"].omega),
        "omega_theta_fit_Hz": to_hz(fits["theta"].omega),
        "gamma_y_fit": fits["y"].gamma,
        "gamma_theta_fit": fits["theta"].gamma,
        "omega_y_model_Hz": to_hz(freqs.omega_y),
        "omega_theta_model_Hz": to_hz(freqs.omega_theta),
        "gamma_y_model": rates.gamma_y,
        "gamma_theta_model": rates.gamma_theta,
    }


def _geometries(cfg: RunConfig) -> dict:
    """The configured particle plus the thinner ellipsoid of the cooling panels."""
    return {
        f"{cfg.particle.rx * 1e9:.0f}x{cfg.particle.ry * 1e9:.0f}nm": cfg.particle,
        "50x25nm": replace(cfg.particle, rx=50e-9, ry=25e-9, rz=25e-9),
    }


def _power_series(cfg: RunConfig, seed: int, jobs: int) -> pd.DataFrame:
    gas = cfg.gas.with_pressure(torr_to_pa(SERIES_PRESSURE_TORR))
    points = [(label, p, P) for label, p in _geometries(cfg).items() for P in POWERS]
    streams = np.random.SeedSequence(seed).spawn(len(points))
    tasks = list(zip(points, streams))
    rows = parallel_map(
        lambda task: _pipeline_row(task[0][0], task[0][1], cfg.beam.with_power(task[0][2]), gas, task[1],
                                   bins_per_linewidth=4.0, n_segments=7),
        tasks, jobs=jobs, label="power point",
    )
    return pd.DataFrame(rows)


# ---------------------------------------------------------------------------
# Panels
# ---------------------------------------------------------------------------

def figure_2a(cfg: RunConfig, seed: int, jobs: int):
    """Synthetic COM and TOR detector spectra at 100 Torr (arbitrary units)."""
    gas = cfg.gas.with_pressure(torr_to_pa(100.0))
    dt = default_timestep(cfg.particle, cfg.beam)
    segment = 8192
    traj = simulate(cfg.particle, cfg.beam, gas, dt=dt, n_steps=segment * 16, seed=seed, mode="full_potential")
    signals = detector_signals(traj, noise_floor=0.0, com_gain=1.0 / cfg.beam.waist)
    com = welch_psd(signals.com, traj.dt, segment)
    tor = welch_psd(signals.tor, traj.dt, segment)
    df = pd.DataFrame({"freq_Hz": com.freqs, "psd_com": com.psd, "psd_tor": tor.psd})
    freqs = frequencies(cfg.particle, cfg.beam)
    summary = {
        "pressure_Torr": 100.0,
        "omega_y_model_Hz": to_hz(freqs.omega_y),
        "omega_theta_model_Hz": to_hz(freqs.omega_theta),
        "units": "arbitrary",
    }
    return df, summary


def figure_2b(cfg: RunConfig, seed: int, jobs: int):
    """Fitted frequencies against trap power, with the A sqrt(P) law per geometry and mode."""
    df = _power_series(cfg, seed, jobs)
    summary = {}
    for label, group in df.groupby("geometry", sort=False):
        for mode in ("y", "theta"):
            fit = fit_sqrt_power(list(zip(group["power_W"], group[f"omega_{mode}_fit_Hz"])))
            summary[f"{label}/{mode}"] = {"A_Hz_per_rtW": fit.A, "residual": fit.residual}
    return df, summary


def figure_2c(cfg: RunConfig, seed: int, jobs: int):
    """Fitted Omega_theta over pressure, and the damping anisotropy of the inset."""
    streams = np.random.SeedSequence(seed).spawn(len(PIPELINE_PRESSURES_TORR))
    tasks = list(zip(PIPELINE_PRESSURES_TORR, streams))
    rows = parallel_map(
        lambda task: _pipeline_row("config", cfg.particle, cfg.beam, cfg.gas.with_pressure(torr_to_pa(task[0])),
                                   task[1], bins_per_linewidth=4.0, n_segments=7),
        tasks, jobs=jobs, label="pressure point",
    )
    df = pd.DataFrame(rows)
    mean, spread = pressure_independence(list(zip(df["pressure_Torr"], df["omega_theta_fit_Hz"])))
    df["omega_theta_normalized"] = df["omega_theta_fit_Hz"] / mean
    rates = damping_rates(cfg.particle, cfg.gas)
    summary = {
        "omega_theta_mean_Hz": mean,
        "normalized_std": spread,
        "gamma_x_over_gamma_y": rates.anisotropy,
        "gamma_x_over_gamma_y_free_rotation": orientation_averaged_ratio(cfg.particle, cfg.gas),
    }
    return df, summary


def figure_2d(cfg: RunConfig, seed: int, jobs: int):
    """Omega_theta / Omega_y against trap power from fitted spectra."""
    df = _power_series(cfg, seed, jobs)
    df["ratio"] = df["omega_theta_fit_Hz"] / df["omega_y_fit_Hz"]
    summary = {}
    for label, group in df.groupby("geometry", sort=False):
        stats = frequency_ratios(list(zip(group["power_W"], group["omega_theta_fit_Hz"], group["omega_y_fit_Hz"])))
        summary[label] = {"mean_ratio": stats["mean"], "normalized_std": stats["normalized_std"]}
    return df, summary


def figure_3a(cfg: RunConfig, seed: int, jobs: int):
    """U_y(y) and U_theta(rx theta) over +-2 waists."""
    prof = potential_profiles(cfg.particle, cfg.beam)
    return pd.DataFrame(prof), {}


def figure_3b(cfg: RunConfig, seed: int, jobs: int):
    """Omega_y and Omega_theta against rx at fixed aspect ratio."""
    aspect = cfg.particle.aspect
    rows = []
    for rx in np.linspace(10e-9, 100e-9, 19):
        p = replace(cfg.particle, rx=float(rx), ry=float(rx * aspect), rz=float(rx * aspect))
        f = frequencies(p, cfg.beam)
        rows.append({"rx_m": rx, "aspect": aspect, "omega_y_Hz": to_hz(f.omega_y), "omega_theta_Hz": to_hz(f.omega_theta)})
    return pd.DataFrame(rows), {}


def figure_3c(cfg: RunConfig, seed: int, jobs: int):
    """Q_y and Q_theta against pressure from 1e-8 to 100 Torr."""
    rows = []
    for p_torr in np.logspace(-8, 2, 41):
        gas = cfg.gas.with_pressure(torr_to_pa(float(p_torr)))
        rates = damping_rates(cfg.particle, gas)
        q = quality_factors(cfg.particle, cfg.beam, gas)
        rows.append({
            "pressure_Torr": p_torr,
            "pressure_Pa": gas.pressure,
            "gamma_x": rates.gamma_x,
            "gamma_y": rates.gamma_y,
            "gamma_theta": rates.gamma_theta,
            "Q_y": q.Q_y,
            "Q_theta": q.Q_theta,
        })
    df = pd.DataFrame(rows)
    return df, {"Q_theta_over_Q_y": float((df["Q_theta"] / df["Q_y"]).mean())}


def figure_3d(cfg: RunConfig, seed: int, jobs: int):
    """Omega_theta / Omega_y against rx for several aspect ratios."""
    rows = []
    for aspect in (0.2, 0.4, 0.6, 0.8):
        for rx in np.linspace(10e-9, 100e-9, 19):
            p = replace(cfg.particle, rx=float(rx), ry=float(rx * aspect), rz=float(rx * aspect))
            rows.append({"rx_m": rx, "aspect": aspect, "ratio": frequency_ratio(p, cfg.beam)})
    return pd.DataFrame(rows), {}


def figure_4a(cfg: RunConfig, seed: int, jobs: int):
    """g_theta and g_y against cavity length."""
    rows = []
    for length in np.linspace(0.5e-3, 10e-3, 39):
        setup = CoolingSetup(cfg.cavity.with_length(float(length)), cfg.particle, cfg.beam)
        rows.append({
            "cavity_length_m": length,
            "g_theta_Hz": to_hz(coupling_torsional(setup)),
            "g_y_Hz": to_hz(coupling_com(setup)),
        })
    return pd.DataFrame(rows), {}


def figure_4b(cfg: RunConfig, seed: int, jobs: int):
    """n_theta and n_y against intracavity photon number."""
    setup = CoolingSetup(cfg.cavity, cfg.particle, cfg.beam)
    drives = np.logspace(4, 11, 71)
    df = cooling_sweep(setup, drives, cfg.gas)
    window = ground_state_window(df)
    return df, {"cavity_length_m": cfg.cavity.length, "ground_state_window": window}


PANELS = {
    "2a": figure_2a, "2b": figure_2b, "2c": figure_2c, "2d": figure_2d,
    "3a": figure_3a, "3b": figure_3b, "3c": figure_3c, "3d": figure_3d,
    "4a": figure_4a, "4b": figure_4b,
}


def gnuplot_script(figure_id: str, csv_name: str, columns: list[str]) -> str:
    """A plain gnuplot script plotting every column against the first."""
    x = columns[0]
    lines = [
        f"# levitodyn figure {figure_id}",
        "set datafile separator ','",
        "set key autotitle columnhead",
        f"set xlabel '{x}'",
    ]
    if figure_id in ("2a", "3c", "4b"):
        lines.append("set logscale xy")
    numeric = [i + 1 for i, c in enumerate(columns) if i > 0 and not c.startswith(("geometry", "ground_"))]
    plots = ", ".join(f"'{csv_name}' using 1:{i}" for i in numeric)
    lines.append(f"plot {plots}")
    return "\n".join(lines) + "\n"


def cmd_figures(
    figure_id: str,
    run_config: RunConfig | None = None,
    seed: int = config.DEFAULT_SEED,
    jobs: int = config.DEFAULT_JOBS,
    cavity_length: float | None = None,
) -> tuple[pd.DataFrame, dict]:
    """
    Compute the data of one figure panel.

    Without an explicit config the panel's shipped config is used.
    """
    if figure_id not in PANELS:
        raise ConfigError(f"unknown figure id {figure_id!r}; valid ids: {', '.join(config.FIGURE_IDS)}")

    cfg = run_config or load_config(config.CONFIGS_DIR / FIGURE_CONFIGS[figure_id])
    if cavity_length is not None:
        cfg = replace(cfg, cavity=cfg.cavity.with_length(cavity_length))

    logger.info(f"\n{'=' * 70}")
    logger.info(f"Figure {figure_id}: {PANELS[figure_id].__doc__.splitlines()[0]}")
    logger.info(f"{'=' * 70}\n")
    start_time = time.time()

    df, summary = PANELS[figure_id](cfg, seed, jobs)

    elapsed = time.time() - start_time
    logger.info(f"\n{'=' * 70}")
    logger.info(f"FIGURE {figure_id} COMPLETE: {len(df)} rows in {int(elapsed // 60)}m {int(elapsed % 60)}s")
    for key, value in summary.items():
        logger.info(f" • {key}: {value}")
    logger.info(f"{'=' * 70}\n")
    return df, summary
