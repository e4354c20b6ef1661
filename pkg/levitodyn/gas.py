"""
Free-molecular gas damping of a spheroid.

Each surface element responds linearly to its own wall velocity u relative to the gas:

    dF = -n m vbar [a_n (u.n) n + a_t (u - (u.n) n)] dA

with a_n = 1 - sigma/2 + pi sigma/8 and a_t = sigma/4 for a diffuse fraction sigma
(specular remainder). Integrating over the surface gives the translational and
torsional friction coefficients; the sphere limit is the Epstein drag. The Monte-Carlo
collision oracle below samples the same physics molecule by molecule and is the
reference the closed forms are tested against.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from levitodyn import config
from levitodyn.core import KB, GasEnvironment, Particle, TrapBeam

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DampingRates:
    """Momentum damping rates in rad/s (Lorentzian linewidth convention)."""
    gamma_x: float
    gamma_y: float
    gamma_theta: float
    flags: list[str] = field(default_factory=list)
    stderr: dict = field(default_factory=dict)

    @property
    def anisotropy(self) -> float:
        """gamma_x / gamma_y (nan in the ballistic limit)."""
        return self.gamma_x / self.gamma_y if self.gamma_y > 0 else math.nan


@dataclass(frozen=True)
class QualityFactors:
    Q_y: float
    Q_theta: float
    flags: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class SurfaceMoments:
    """Surface integrals of a spheroid with semiaxes (a, b, b), long axis along x."""
    area: float        # A
    nxx: float         # integral of n_x^2 dA
    nyy: float         # integral of n_y^2 dA
    twist: float       # integral of (x n_y - y n_x)^2 dA
    radial: float      # integral of (x^2 + y^2) dA


# ---------------------------------------------------------------------------
# Kinetic theory
# ---------------------------------------------------------------------------

def thermal_speed(gas: GasEnvironment) -> float:
    """Mean molecular speed sqrt(8 kB T / (pi m_gas))."""
    return math.sqrt(8.0 * KB * gas.temperature / (math.pi * gas.molecular_mass))


def mean_free_path(gas: GasEnvironment) -> float:
    """Hard-sphere mean free path kB T / (sqrt(2) pi d^2 p); infinite in vacuum."""
    if gas.pressure == 0.0:
        return math.inf
    d = config.AIR_KINETIC_DIAMETER
    return KB * gas.temperature / (math.sqrt(2.0) * math.pi * d ** 2 * gas.pressure)


def knudsen_number(particle: Particle, gas: GasEnvironment) -> float:
    return mean_free_path(gas) / particle.max_semiaxis


def _response_coefficients(accommodation: float) -> tuple[float, float]:
    """(a_n, a_t) of the local linear force law."""
    s = accommodation
    return 1.0 - s / 2.0 + math.pi * s / 8.0, s / 4.0


def _momentum_flux(gas: GasEnvironment) -> float:
    """n m vbar = 8 p / (pi vbar), in kg / (m^2 s)."""
    return 8.0 * gas.pressure / (math.pi * thermal_speed(gas))


def surface_moments(particle: Particle) -> SurfaceMoments:
    """
    Surface integrals needed by the friction coefficients, by quadrature over u = cos(t)
    with the parametrization x = a u, (y, z) = b sqrt(1 - u^2) (cos phi, sin phi).
    """
    a, b = particle.rx, particle.ry

    def h(u):
        return math.sqrt(a * a * (1.0 - u * u) + b * b * u * u)

    def quad(f):
        value, _ = integrate.quad(f, -1.0, 1.0, epsabs=0.0, epsrel=1e-12, limit=200)
        return value

    area = quad(lambda u: 2.0 * math.pi * b * h(u))
    nxx = quad(lambda u: 2.0 * math.pi * b ** 3 * u * u / h(u))
    twist = quad(lambda u: math.pi * b * (a * a - b * b) ** 2 * u * u * (1.0 - u * u) / h(u))
    radial = quad(lambda u: (2.0 * math.pi * a * a * u * u + math.pi * b * b * (1.0 - u * u)) * b * h(u))
    return SurfaceMoments(area=area, nxx=nxx, nyy=(area - nxx) / 2.0, twist=twist, radial=radial)


def _regime_flags(particle: Particle, gas: GasEnvironment) -> list[str]:
    flags = []
    if gas.pressure == 0.0:
        flags.append("ballistic_limit")
        return flags
    kn = knudsen_number(particle, gas)
    if kn < config.FREE_MOLECULAR_MIN_KN:
        logger.warning(
            f"gas damping: Knudsen number {kn:.3g} at {gas.pressure:.3g} Pa; "
            "free-molecular rates are only indicative"
        )
        flags.append("not_free_molecular")
    return flags


# ---------------------------------------------------------------------------
# Closed forms
# ---------------------------------------------------------------------------

def com_damping(particle: Particle, gas: GasEnvironment) -> tuple[float, float]:
    """(gamma_x, gamma_y): translational damping along and across the long axis."""
    if gas.pressure == 0.0:
        return 0.0, 0.0
    a_n, a_t = _response_coefficients(gas.accommodation)
    m = surface_moments(particle)
    scale = _momentum_flux(gas) / particle.mass
    gamma_x = scale * ((a_n - a_t) * m.nxx + a_t * m.area)
    gamma_y = scale * ((a_n - a_t) * m.nyy + a_t * m.area)
    return gamma_x, gamma_y


def rot_damping(particle: Particle, gas: GasEnvironment) -> float:
    """Torsional damping rate about z: friction torque coefficient over I."""
    if gas.pressure == 0.0:
        return 0.0
    a_n, a_t = _response_coefficients(gas.accommodation)
    m = surface_moments(particle)
    coefficient = _momentum_flux(gas) * ((a_n - a_t) * m.twist + a_t * m.radial)
    return coefficient / particle.moment_of_inertia


def damping_rates(particle: Particle, gas: GasEnvironment) -> DampingRates:
    flags = _regime_flags(particle, gas)
    gamma_x, gamma_y = com_damping(particle, gas)
    return DampingRates(gamma_x, gamma_y, rot_damping(particle, gas), flags=flags)


def epstein_rate(radius: float, density: float, gas: GasEnvironment) -> float:
    """Epstein sphere: (8/pi) p / (rho r vbar) (1 + sigma pi / 8)."""
    return (
        (8.0 / math.pi) * gas.pressure / (density * radius * thermal_speed(gas))
        * (1.0 + gas.accommodation * math.pi / 8.0)
    )


def quality_factors(particle: Particle, beam: TrapBeam, gas: GasEnvironment) -> QualityFactors:
    """Q = Omega / Gamma for the COM (y) and torsional modes."""
    from levitodyn.optics import frequencies

    freqs = frequencies(particle, beam)
    rates = damping_rates(particle, gas)
    flags = list(rates.flags) + list(freqs.flags)

    if gas.pressure == 0.0:
        flags.append("unbounded_q")
        q_y = math.inf
        q_theta = math.nan if freqs.degenerate else math.inf
        return QualityFactors(q_y, q_theta, flags=flags)

    q_y = freqs.omega_y / rates.gamma_y
    q_theta = math.nan if freqs.degenerate else freqs.omega_theta / rates.gamma_theta
    return QualityFactors(q_y, q_theta, flags=flags)


def lab_frame_damping(particle: Particle, gas: GasEnvironment, theta: float) -> np.ndarray:
    """2x2 translational damping tensor in the trap (x_T, y_T) frame for long axis at theta."""
    gamma_x, gamma_y = com_damping(particle, gas)
    c, s = math.cos(theta), math.sin(theta)
    rot = np.array([[c, -s], [s, c]])
    return rot @ np.diag([gamma_x, gamma_y]) @ rot.T


def orientation_averaged_ratio(particle: Particle, gas: GasEnvironment, n_angles: int = 360) -> float:
    """
    Gamma_x / Gamma_y for a particle spinning freely in the xy-plane.

    Averaging the lab-frame tensor over uniform orientations restores isotropy, so a
    measured ratio below 1 means the long axis is locked to the polarization.
    """
    thetas = np.linspace(0.0, math.pi, n_angles, endpoint=False)
    mean = sum(lab_frame_damping(particle, gas, t) for t in thetas) / n_angles
    return float(mean[0, 0] / mean[1, 1])


# ---------------------------------------------------------------------------
# Monte-Carlo collision oracle
# ---------------------------------------------------------------------------

def _sample_surface(rng: np.random.Generator, a: float, b: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Points uniform in area on the spheroid and their outward unit normals."""
    h_max = max(a, b)
    us = []
    count = 0
    while count < n:
        u = rng.uniform(-1.0, 1.0, size=2 * (n - count) + 16)
        h = np.sqrt(a * a * (1.0 - u * u) + b * b * u * u)
        keep = u[rng.uniform(0.0, h_max, size=u.size) < h]
        us.append(keep)
        count += keep.size
    u = np.concatenate(us)[:n]
    phi = rng.uniform(0.0, 2.0 * math.pi, size=n)
    s = np.sqrt(1.0 - u * u)

    points = np.stack([a * u, b * s * np.cos(phi), b * s * np.sin(phi)], axis=1)
    normals = np.stack([b * u, a * s * np.cos(phi), a * s * np.sin(phi)], axis=1)
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    return points, normals


def _tangent_basis(normals: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    ref = np.zeros_like(normals)
    use_x = np.abs(normals[:, 2]) > 0.9
    ref[~use_x, 2] = 1.0
    ref[use_x, 0] = 1.0
    e1 = np.cross(normals, ref)
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    e2 = np.cross(normals, e1)
    return e1, e2


def _flux_velocity(rng, sigma_v, normals, e1, e2, outward: bool) -> tuple[np.ndarray, np.ndarray]:
    """Velocities of molecules crossing a wall element, flux-weighted (cosine law)."""
    n = normals.shape[0]
    w = sigma_v * np.sqrt(-2.0 * np.log1p(-rng.uniform(size=n)))
    t1 = rng.normal(0.0, sigma_v, size=n)
    t2 = rng.normal(0.0, sigma_v, size=n)
    sign = 1.0 if outward else -1.0
    v = sign * w[:, None] * normals + t1[:, None] * e1 + t2[:, None] * e2
    return v, w


def _collision_shard(particle: Particle, gas: GasEnvironment, n: int, seed_seq: np.random.SeedSequence) -> np.ndarray:
    """
    Per-sample linear-response contributions for one RNG shard.

    Molecules are drawn from the zero-drift impinging flux; the response to a wall
    velocity U follows from the likelihood ratio of the drifted Maxwellian,
    f(v + U) / f(v) = 1 - U.v / sigma_v^2 + O(U^2). Columns: xx, yy, theta.
    """
    rng = np.random.default_rng(seed_seq)
    sigma_v = math.sqrt(KB * gas.temperature / gas.molecular_mass)
    acc = gas.accommodation

    points, normals = _sample_surface(rng, particle.rx, particle.ry, n)
    e1, e2 = _tangent_basis(normals)
    v_in, w = _flux_velocity(rng, sigma_v, normals, e1, e2, outward=False)
    v_diffuse, _ = _flux_velocity(rng, sigma_v, normals, e1, e2, outward=True)
    v_specular = v_in + 2.0 * w[:, None] * normals

    # momentum delivered to the body per unit molecular mass
    dp = (1.0 - acc) * (v_in - v_specular) + acc * (v_in - v_diffuse)

    # rigid rotation about z: wall velocity z x r = (-y, x, 0)
    wall = np.stack([-points[:, 1], points[:, 0], np.zeros(n)], axis=1)
    torque_z = points[:, 0] * dp[:, 1] - points[:, 1] * dp[:, 0]

    return np.stack([
        dp[:, 0] * v_in[:, 0],
        dp[:, 1] * v_in[:, 1],
        torque_z * np.einsum("ij,ij->i", wall, v_in),
    ], axis=1)


def monte_carlo_damping(
    particle: Particle,
    gas: GasEnvironment,
    n_samples: int = 1_000_000,
    seed: int = config.DEFAULT_SEED,
    jobs: int = 1,
    n_shards: int = 8,
) -> DampingRates:
    """
    Damping rates from sampled molecule-surface collisions (specular/diffuse mix).

    Shards use SeedSequence(seed).spawn(n_shards) and are summed in shard order, so
    the result depends on (seed, n_samples, n_shards) only, never on `jobs`.
    """
    if gas.pressure == 0.0:
        return DampingRates(0.0, 0.0, 0.0, flags=["ballistic_limit"])

    sizes = [n_samples // n_shards + (1 if i < n_samples % n_shards else 0) for i in range(n_shards)]
    seeds = np.random.SeedSequence(seed).spawn(n_shards)

    logger.info(
        f"monte_carlo_damping: {n_samples} collisions in {n_shards} shards "
        f"(aspect={particle.aspect:.3g}, sigma={gas.accommodation:.2g}, jobs={jobs})"
    )
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        futures = [pool.submit(_collision_shard, particle, gas, n, s) for n, s in zip(sizes, seeds)]
        shards = [f.result() for f in futures]

    samples = np.concatenate(shards, axis=0)
    mean = samples.mean(axis=0)
    sem = samples.std(axis=0, ddof=1) / math.sqrt(samples.shape[0])

    sigma_v2 = KB * gas.temperature / gas.molecular_mass
    area = surface_moments(particle).area
    # friction = (p vbar A / (4 sigma_v^4)) * E[dp_j v_k]
    scale = gas.pressure * thermal_speed(gas) * area / (4.0 * sigma_v2 ** 2)
    divisors = np.array([particle.mass, particle.mass, particle.moment_of_inertia])
    rates = scale * mean / divisors
    errors = scale * sem / divisors

    return DampingRates(
        float(rates[0]), float(rates[1]), float(rates[2]),
        flags=_regime_flags(particle, gas),
        stderr={"gamma_x": float(errors[0]), "gamma_y": float(errors[1]), "gamma_theta": float(errors[2])},
    )
