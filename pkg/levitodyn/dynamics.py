"""
Langevin simulation of the coupled (y, theta) motion in the optical potential.

    m y''     = F_y(y, theta) - m Gamma_y y'         + xi_y
    I theta'' = M_z(y, theta) - I Gamma_theta theta' + xi_theta

Noise obeys fluctuation-dissipation (S = 2 m Gamma kB T). The integrator is BAOAB:
half kick, half drift, exact Ornstein-Uhlenbeck velocity update, half drift, half kick.
For a harmonic potential its stationary position distribution carries no timestep bias.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
import pandas as pd

from levitodyn import config
from levitodyn.core import C, KB, DomainError, GasEnvironment, IntegrationError, Particle, TrapBeam
from levitodyn.gas import damping_rates
from levitodyn.optics import frequencies, susceptibilities

logger = logging.getLogger(__name__)

MODES = ("harmonic", "full_potential")

# Normals are drawn in blocks of this many steps.
_NOISE_CHUNK = 65536


@dataclass(frozen=True)
class State:
    y: float = 0.0
    vy: float = 0.0
    theta: float = 0.0
    omega: float = 0.0


@dataclass
class Trajectory:
    """Uniformly sampled (y, v_y, theta, omega_theta) with everything needed to rerun it."""
    dt: float
    y: np.ndarray
    vy: np.ndarray
    theta: np.ndarray
    omega: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.y)
        if n < 2:
            raise DomainError(f"a trajectory needs at least 2 samples, got {n}")
        if not (len(self.vy) == len(self.theta) == len(self.omega) == n):
            raise DomainError("trajectory columns have different lengths")
        for name in ("y", "vy", "theta", "omega"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise DomainError(f"trajectory column '{name}' contains non-finite samples")

    def __len__(self) -> int:
        return len(self.y)

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self.y)) * self.dt


@dataclass(frozen=True)
class DetectorSignals:
    com: np.ndarray
    tor: np.ndarray
    dt: float
    metadata: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def default_timestep(particle: Particle, beam: TrapBeam) -> float:
    """(2 pi / Omega) / STEPS_PER_PERIOD for the fastest mode (Omega_theta unless degenerate)."""
    freqs = frequencies(particle, beam)
    omega_max = max(freqs.omega_y, freqs.omega_theta)
    return (2.0 * math.pi / omega_max) / config.STEPS_PER_PERIOD


def _check_timestep(dt: float, omega_y: float, omega_theta: float) -> None:
    if not math.isfinite(dt) or dt <= 0.0:
        raise IntegrationError(f"dt must be positive, got {dt!r}")
    name, omega = ("Omega_theta", omega_theta) if omega_theta >= omega_y else ("Omega_y", omega_y)
    limit = config.DT_GUARD_FRACTION * 2.0 * math.pi / omega
    if dt >= limit:
        raise IntegrationError(
            f"dt={dt:.3e} s does not resolve {name}/2pi={omega / (2.0 * math.pi):.4g} Hz; "
            f"need dt < {limit:.3e} s"
        )


def _seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(int(seed))


def _seed_metadata(seq: np.random.SeedSequence) -> dict:
    return {"entropy": int(seq.entropy), "spawn_key": [int(k) for k in seq.spawn_key]}


def _thermal_state(rng: np.random.Generator, temperature: float, mass: float, inertia: float,
                   k_y: float, k_theta: float) -> State:
    """Equipartition draw; a mode without restoring force starts at the origin."""
    if temperature == 0.0:
        return State()
    kt = KB * temperature
    draws = rng.standard_normal(4)
    y = draws[0] * math.sqrt(kt / k_y) if k_y > 0.0 else 0.0
    theta = draws[2] * math.sqrt(kt / k_theta) if k_theta > 0.0 else 0.0
    return State(
        y=float(y),
        vy=float(draws[1] * math.sqrt(kt / mass)),
        theta=float(theta),
        omega=float(draws[3] * math.sqrt(kt / inertia)),
    )


def _force_field(particle: Particle, beam: TrapBeam, mode: str, k_y: float, k_theta: float):
    """Returns f(y, theta) -> (F_y, M_z)."""
    if mode == "harmonic":
        def harmonic(y, theta):
            return -k_y * y, -k_theta * theta
        return harmonic

    chi = susceptibilities(particle)
    scale = particle.volume / (2.0 * C) * beam.peak_intensity
    chi_x, aniso = chi.chi_x, chi.anisotropy
    inv_w2 = 1.0 / beam.waist ** 2

    def full(y, theta):
        gauss = scale * math.exp(-2.0 * y * y * inv_w2)
        s = math.sin(theta)
        force = -(chi_x - aniso * s * s) * gauss * 4.0 * y * inv_w2
        torque = -aniso * math.sin(2.0 * theta) * gauss
        return force, torque

    return full


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------

def simulate(
    particle: Particle,
    beam: TrapBeam,
    gas: GasEnvironment,
    temperature: float = config.TEMPERATURE,
    dt: float | None = None,
    n_steps: int = 100_000,
    seed=config.DEFAULT_SEED,
    mode: str = "harmonic",
    initial: State | None = None,
    record_every: int = 1,
) -> Trajectory:
    """
    Integrate the Langevin equations for n_steps steps of size dt.

    The trajectory holds the initial state plus every `record_every`-th step. A
    temperature of 0 switches the noise off; pressure 0 switches damping off.
    """
    if mode not in MODES:
        raise DomainError(f"unknown simulation mode {mode!r}; expected one of {list(MODES)}")
    if n_steps < 2:
        raise DomainError(f"n_steps must be >= 2, got {n_steps}")
    if record_every < 1 or n_steps // record_every < 1:
        raise DomainError(f"record_every={record_every} leaves fewer than 2 samples")
    if not math.isfinite(temperature) or temperature < 0.0:
        raise DomainError(f"temperature must be >= 0, got {temperature!r}")

    freqs = frequencies(particle, beam)
    dt = default_timestep(particle, beam) if dt is None else float(dt)
    _check_timestep(dt, freqs.omega_y, freqs.omega_theta)

    rates = damping_rates(particle, gas)
    mass, inertia = particle.mass, particle.moment_of_inertia
    k_y = mass * freqs.omega_y ** 2
    k_theta = inertia * freqs.omega_theta ** 2

    seq = _seed_sequence(seed)
    rng = np.random.default_rng(seq)
    state = initial if initial is not None else _thermal_state(rng, temperature, mass, inertia, k_y, k_theta)

    force = _force_field(particle, beam, mode, k_y, k_theta)

    # OU substep coefficients
    kt = KB * temperature
    c_y = math.exp(-rates.gamma_y * dt)
    c_t = math.exp(-rates.gamma_theta * dt)
    s_y = math.sqrt((1.0 - c_y * c_y) * kt / mass)
    s_t = math.sqrt((1.0 - c_t * c_t) * kt / inertia)
    noisy = temperature > 0.0
    half = 0.5 * dt
    inv_m, inv_i = 1.0 / mass, 1.0 / inertia

    n_out = n_steps // record_every + 1
    out = np.empty((n_out, 4))
    y, vy, th, om = state.y, state.vy, state.theta, state.omega
    out[0] = (y, vy, th, om)
    f_y, m_z = force(y, th)

    logger.info(
        f"simulate: mode={mode} steps={n_steps} dt={dt:.3e}s T={temperature:g}K "
        f"p={gas.pressure:.3g}Pa Gamma_y={rates.gamma_y:.3g} Gamma_theta={rates.gamma_theta:.3g}"
    )

    step = 0
    row = 1
    while step < n_steps:
        block = min(_NOISE_CHUNK, n_steps - step)
        noise = rng.standard_normal((block, 2)).tolist() if noisy else [(0.0, 0.0)] * block
        for xi_y, xi_t in noise:
            # B
            vy += half * f_y * inv_m
            om += half * m_z * inv_i
            # A
            y += half * vy
            th += half * om
            # O
            vy = c_y * vy + s_y * xi_y
            om = c_t * om + s_t * xi_t
            # A
            y += half * vy
            th += half * om
            # B
            f_y, m_z = force(y, th)
            vy += half * f_y * inv_m
            om += half * m_z * inv_i

            step += 1
            if not (math.isfinite(y) and math.isfinite(th) and math.isfinite(vy) and math.isfinite(om)):
                raise IntegrationError(f"non-finite state at step {step} (y={y!r}, theta={th!r})")
            if step % record_every == 0:
                out[row] = (y, vy, th, om)
                row += 1

    metadata = {
        "particle": asdict(particle),
        "beam": asdict(beam),
        "gas": asdict(gas),
        "temperature": temperature,
        "dt": dt,
        "n_steps": n_steps,
        "record_every": record_every,
        "mode": mode,
        "seed": _seed_metadata(seq),
        "initial": asdict(state),
        "mass": mass,
        "moment_of_inertia": inertia,
        "omega_y": freqs.omega_y,
        "omega_theta": freqs.omega_theta,
        "gamma_y": rates.gamma_y,
        "gamma_theta": rates.gamma_theta,
        "flags": list(freqs.flags) + list(rates.flags),
    }
    return Trajectory(
        dt=dt * record_every,
        y=out[:, 0].copy(),
        vy=out[:, 1].copy(),
        theta=out[:, 2].copy(),
        omega=out[:, 3].copy(),
        metadata=metadata,
    )


def simulate_ensemble(
    particle: Particle,
    beam: TrapBeam,
    gas: GasEnvironment,
    n_traj: int,
    master_seed: int = config.DEFAULT_SEED,
    jobs: int = config.DEFAULT_JOBS,
    **kwargs,
) -> list[Trajectory]:
    """Independent trajectories; stream i is SeedSequence(master_seed).spawn(n_traj)[i]."""
    if n_traj < 1:
        raise DomainError(f"n_traj must be >= 1, got {n_traj}")
    streams = np.random.SeedSequence(master_seed).spawn(n_traj)

    def run(i: int) -> Trajectory:
        traj = simulate(particle, beam, gas, seed=streams[i], **kwargs)
        traj.metadata["ensemble"] = {"master_seed": master_seed, "index": i, "size": n_traj}
        logger.info(f"[{i + 1}/{n_traj}] trajectory done ({len(traj)} samples)")
        return traj

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        return list(pool.map(run, range(n_traj)))


# ---------------------------------------------------------------------------
# Detection
# ---------------------------------------------------------------------------

def detector_signals(
    traj: Trajectory,
    noise_floor: float = 0.0,
    seed: int = config.DEFAULT_SEED,
    com_gain: float = 1.0,
    tor_gain: float = 1.0,
) -> DetectorSignals:
    """
    COM and TOR detector traces in arbitrary units.

    com = com_gain * y, tor = tor_gain * sin(2 theta) / 2 (balanced polarimeter), each
    plus white noise with one-sided PSD `noise_floor` (per-sample std sqrt(N0 / (2 dt))).
    """
    if noise_floor < 0.0:
        raise DomainError(f"noise_floor must be >= 0, got {noise_floor!r}")
    com = com_gain * traj.y
    tor = tor_gain * 0.5 * np.sin(2.0 * traj.theta)
    if noise_floor > 0.0:
        rng = np.random.default_rng(seed)
        sigma = math.sqrt(noise_floor / (2.0 * traj.dt))
        com = com + rng.normal(0.0, sigma, size=com.shape)
        tor = tor + rng.normal(0.0, sigma, size=tor.shape)
    metadata = {"com_gain": com_gain, "tor_gain": tor_gain, "noise_floor": noise_floor, "seed": seed}
    return DetectorSignals(com=com, tor=tor, dt=traj.dt, metadata=metadata)


# ---------------------------------------------------------------------------
# Statistics and I/O
# ---------------------------------------------------------------------------

def _batch_means(x: np.ndarray, n_batches: int) -> tuple[float, float]:
    """Mean and batch-means standard error of a correlated series."""
    usable = (len(x) // n_batches) * n_batches
    batches = x[:usable].reshape(n_batches, -1).mean(axis=1)
    return float(batches.mean()), float(batches.std(ddof=1) / math.sqrt(n_batches))


def equipartition_check(traj: Trajectory, burn_in: float = 0.1, n_batches: int = 20) -> dict:
    """
    Stationary <y^2> and <theta^2> against kB T / (m Omega_y^2) and kB T / (I Omega_theta^2).

    The first `burn_in` fraction of samples is dropped. Each mode reports the measured
    variance, the expected one, a batch-means standard error and the z-score.
    """
    md = traj.metadata
    start = int(len(traj) * burn_in)
    kt = KB * md["temperature"]
    expected = {
        "y": kt / (md["mass"] * md["omega_y"] ** 2),
        "theta": kt / (md["moment_of_inertia"] * md["omega_theta"] ** 2) if md["omega_theta"] > 0 else math.inf,
    }
    report = {}
    for name, series in (("y", traj.y[start:]), ("theta", traj.theta[start:])):
        measured, stderr = _batch_means(series ** 2, n_batches)
        z = (measured - expected[name]) / stderr if stderr > 0 else math.inf
        report[name] = {"measured": measured, "expected": expected[name], "stderr": stderr, "z": z}
    return report


def trajectory_to_frame(traj: Trajectory) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "t_s": traj.times,
            "y_m": traj.y,
            "vy_ms": traj.vy,
            "theta_rad": traj.theta,
            "omega_rads": traj.omega,
        },
        columns=config.TRAJ_COLUMNS,
    )


def trajectory_from_frame(df: pd.DataFrame, metadata: dict | None = None) -> Trajectory:
    missing = [c for c in config.TRAJ_COLUMNS if c not in df.columns]
    if missing:
        raise DomainError(f"trajectory table is missing column(s) {missing}")
    t = df["t_s"].to_numpy(dtype=float)
    if len(t) < 2:
        raise DomainError("a trajectory needs at least 2 samples")
    steps = np.diff(t)
    dt = float(steps.mean())
    if not np.allclose(steps, dt, rtol=1e-6, atol=0.0):
        raise DomainError("trajectory samples are not uniformly spaced")
    return Trajectory(
        dt=dt,
        y=df["y_m"].to_numpy(dtype=float),
        vy=df["vy_ms"].to_numpy(dtype=float),
        theta=df["theta_rad"].to_numpy(dtype=float),
        omega=df["omega_rads"].to_numpy(dtype=float),
        metadata=dict(metadata or {}),
    )
