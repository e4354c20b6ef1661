"""
Power spectral densities and the fits that turn them into (Omega, Gamma).

Spectra are one-sided and in signal^2/Hz on a Hz grid. Fit results are reported in
angular frequency (rad/s).
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy import optimize, signal

from levitodyn import config
from levitodyn.core import KB, DomainError, FitError

logger = logging.getLogger(__name__)

# A second peak this prominent (relative to the highest one) means the band is not clean.
_SECOND_PEAK_PROMINENCE = 0.5

# A floor below this fraction of the lowest in-band level is pinned at its zero bound.
_FLOOR_AT_BOUND = 1e-3


@dataclass(frozen=True)
class Spectrum:
    freqs: np.ndarray
    psd: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def resolution(self) -> float:
        """Bin spacing in Hz."""
        return float(self.freqs[1] - self.freqs[0])

    def band_mask(self, band: tuple[float, float] | None) -> np.ndarray:
        if band is None:
            return self.freqs > 0.0
        lo, hi = band
        if not lo < hi:
            raise DomainError(f"band must satisfy f_lo < f_hi, got {band!r}")
        return (self.freqs >= lo) & (self.freqs <= hi)


@dataclass(frozen=True)
class LorentzianFit:
    omega: float
    gamma: float
    amplitude: float
    floor: float
    stderr: dict = field(default_factory=dict)
    flags: list[str] = field(default_factory=list)
    residual_rms: float = 0.0
    n_bins: int = 0

    @property
    def quality_factor(self) -> float:
        return self.omega / self.gamma if self.gamma > 0 else math.inf

    def to_dict(self) -> dict:
        return {
            "omega_Hz": self.omega / (2.0 * math.pi),
            "gamma_Hz": self.gamma / (2.0 * math.pi),
            "omega_rads": self.omega,
            "gamma_rads": self.gamma,
            "amplitude": self.amplitude,
            "floor": self.floor,
            "stderr": dict(self.stderr),
            "Q": self.quality_factor,
            "residual_rms": self.residual_rms,
            "n_bins": self.n_bins,
            "flags": list(self.flags),
        }


@dataclass(frozen=True)
class SqrtPowerFit:
    A: float
    residual: float


# ---------------------------------------------------------------------------
# Estimation
# ---------------------------------------------------------------------------

def welch_psd(
    series,
    dt: float,
    segment_len: int | None = None,
    overlap: float = config.PSD_OVERLAP,
    window: str = config.PSD_WINDOW,
) -> Spectrum:
    """Averaged modified periodogram (scipy.signal.welch, density scaling, no detrending)."""
    x = np.asarray(series, dtype=float)
    if x.ndim != 1:
        raise DomainError(f"series must be one-dimensional, got shape {x.shape}")
    if dt <= 0.0:
        raise DomainError(f"dt must be positive, got {dt!r}")
    if segment_len is None:
        segment_len = min(config.PSD_SEGMENT, x.size)
    if segment_len < 2 or segment_len > x.size:
        raise DomainError(
            f"series of {x.size} samples is too short for segment_len={segment_len}"
        )
    if not 0.0 <= overlap < 1.0:
        raise DomainError(f"overlap must lie in [0, 1), got {overlap!r}")

    noverlap = int(segment_len * overlap)
    freqs, psd = signal.welch(
        x,
        fs=1.0 / dt,
        window=window,
        nperseg=segment_len,
        noverlap=noverlap,
        detrend=False,
        scaling="density",
        return_onesided=True,
    )
    n_segments = 1 + (x.size - segment_len) // (segment_len - noverlap)
    metadata = {
        "window": window,
        "segment_len": segment_len,
        "overlap": overlap,
        "n_segments": n_segments,
        "dt": dt,
    }
    return Spectrum(freqs=freqs, psd=psd, metadata=metadata)


def integrated_power(spec: Spectrum, band: tuple[float, float] | None = None) -> float:
    """Sum of psd * df over a band (whole spectrum, DC included, when band is None)."""
    mask = np.ones_like(spec.freqs, dtype=bool) if band is None else spec.band_mask(band)
    return float(np.sum(spec.psd[mask]) * spec.resolution)


def lorentzian_psd(freqs_hz, omega: float, gamma: float, mass: float, temperature: float):
    """
    One-sided thermal PSD (per Hz) of a damped oscillator driven by thermal noise:

        S(f) = (4 kB T Gamma / m) / ((Omega^2 - w^2)^2 + Gamma^2 w^2),  w = 2 pi f

    Its integral over f is kB T / (m Omega^2). Pass I instead of m for the torsional mode.
    """
    w = 2.0 * math.pi * np.asarray(freqs_hz, dtype=float)
    return (4.0 * KB * temperature * gamma / mass) / ((omega ** 2 - w ** 2) ** 2 + gamma ** 2 * w ** 2)


# ---------------------------------------------------------------------------
# Lorentzian fit
# ---------------------------------------------------------------------------

def _scaled_model(x, a, g, c, f):
    return c * g / ((a * a - x * x) ** 2 + g * g * x * x) + f


def _half_power_width(x: np.ndarray, y: np.ndarray, peak: int) -> float:
    """Full width at half maximum around `peak`, in x units; at least two bins."""
    half = y[peak] / 2.0
    lo = peak
    while lo > 0 and y[lo] > half:
        lo -= 1
    hi = peak
    while hi < y.size - 1 and y[hi] > half:
        hi += 1
    step = x[1] - x[0] if x.size > 1 else 1.0
    return max(x[hi] - x[lo], 2.0 * step)


def fit_lorentzian(spec: Spectrum, band: tuple[float, float] | None = None) -> LorentzianFit:
    """
    Least-squares fit of S(w) = C Gamma / ((Omega^2 - w^2)^2 + Gamma^2 w^2) + floor.

    The fit runs in units of the peak-bin frequency and peak PSD value, weighting each
    bin by its own level. It starts from the peak bin (lowest frequency on ties) and the
    half-power width. A floor pinned at zero is flagged `floor_at_bound` and gets a nan
    stderr.
    """
    mask = spec.band_mask(band)
    freqs = spec.freqs[mask]
    psd = spec.psd[mask]
    if freqs.size < config.FIT_MIN_BINS:
        raise FitError(
            f"band {band!r} holds {freqs.size} bins; at least {config.FIT_MIN_BINS} are needed"
        )
    if not np.all(np.isfinite(psd)) or np.max(psd) <= 0.0:
        raise FitError("spectrum in band is empty or non-finite")

    flags = []
    peak = int(np.argmax(psd))   # first maximum, so the lowest frequency wins ties
    if freqs[peak] <= 0.0:
        raise FitError("spectral peak sits at DC; no resonance in band")

    omega0 = 2.0 * math.pi * freqs[peak]
    p0 = float(psd[peak])
    x = 2.0 * math.pi * freqs / omega0
    y = psd / p0

    peaks, _ = signal.find_peaks(y, prominence=_SECOND_PEAK_PROMINENCE)
    if peaks.size > 1:
        logger.warning(f"fit_lorentzian: {peaks.size} peaks in band {band!r}; fitting the highest")
        flags.append("multiple_peaks")
    if peak in (0, freqs.size - 1):
        flags.append("peak_at_band_edge")

    g0 = _half_power_width(x, y, peak)
    f0 = max(float(np.min(y)), 1e-9)
    c0 = max(1.0 - f0, 1e-6) * g0
    guess = [1.0, g0, c0, f0]

    try:
        popt, pcov = optimize.curve_fit(
            _scaled_model, x, y, p0=guess, sigma=y,
            bounds=([0.0, 0.0, 0.0, 0.0], [np.inf, np.inf, np.inf, np.inf]),
            maxfev=20000,
        )
    except (RuntimeError, ValueError) as e:
        rel = (_scaled_model(x, *guess) - y) / y
        raise FitError(
            f"Lorentzian fit did not converge ({e}); initial relative residual rms "
            f"{float(np.sqrt(np.mean(rel ** 2))):.3g} over {freqs.size} bins"
        ) from e

    a, g, c, f = popt
    if not (a > 0.0 and g > 0.0):
        raise FitError(f"Lorentzian fit collapsed (Omega={a * omega0!r}, Gamma={g * omega0!r})")

    errs = np.sqrt(np.diag(pcov)) if np.all(np.isfinite(pcov)) else np.full(4, np.inf)
    if not np.all(np.isfinite(errs)):
        flags.append("covariance_unavailable")
    if f < _FLOOR_AT_BOUND * float(np.min(y)):
        flags.append("floor_at_bound")
        errs[3] = np.nan

    rel = (_scaled_model(x, *popt) - y) / y
    amp_scale = p0 * omega0 ** 3
    return LorentzianFit(
        omega=float(a * omega0),
        gamma=float(g * omega0),
        amplitude=float(c * amp_scale),
        floor=float(f * p0),
        stderr={
            "omega": float(errs[0] * omega0),
            "gamma": float(errs[1] * omega0),
            "amplitude": float(errs[2] * amp_scale),
            "floor": float(errs[3] * p0),
        },
        flags=flags,
        residual_rms=float(np.sqrt(np.mean(rel ** 2))),
        n_bins=int(freqs.size),
    )


# ---------------------------------------------------------------------------
# Figure-level statistics
# ---------------------------------------------------------------------------

def fit_sqrt_power(points) -> SqrtPowerFit:
    """
    Least squares on Omega = A sqrt(P): A = sum(Omega sqrt(P)) / sum(P).

    The residual is the rms deviation divided by the mean Omega.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
        raise DomainError("fit_sqrt_power needs at least 3 (P, Omega) points")
    power, omega = pts[:, 0], pts[:, 1]
    if np.any(power <= 0.0):
        raise DomainError("trap powers must be positive")
    if np.allclose(power, power[0]):
        raise DomainError("all points share the same power; the sqrt(P) law is undetermined")

    A = float(np.sum(omega * np.sqrt(power)) / np.sum(power))
    resid = omega - A * np.sqrt(power)
    return SqrtPowerFit(A=A, residual=float(np.sqrt(np.mean(resid ** 2)) / np.mean(omega)))


def pressure_independence(points) -> tuple[float, float]:
    """(<Omega_theta>, std(Omega_theta / <Omega_theta>)) with the sample std (ddof=1)."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
        raise DomainError("pressure_independence needs at least 2 (p, Omega_theta) points")
    omega = pts[:, 1]
    mean = float(np.mean(omega))
    return mean, float(np.std(omega / mean, ddof=1))


def frequency_ratios(points) -> dict:
    """Omega_theta / Omega_y per (P, Omega_theta, Omega_y) point and their normalized spread."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 1:
        raise DomainError("frequency_ratios needs (P, Omega_theta, Omega_y) points")
    ratios = pts[:, 1] / pts[:, 2]
    mean = float(np.mean(ratios))
    spread = float(np.std(ratios / mean, ddof=1)) if ratios.size > 1 else 0.0
    return {"power": pts[:, 0], "ratio": ratios, "mean": mean, "normalized_std": spread}


# ---------------------------------------------------------------------------
# Tables
# ---------------------------------------------------------------------------

def spectrum_to_frame(spec: Spectrum) -> pd.DataFrame:
    return pd.DataFrame({"freq_Hz": spec.freqs, "psd": spec.psd}, columns=config.PSD_COLUMNS)


def spectrum_from_frame(df: pd.DataFrame, metadata: dict | None = None) -> Spectrum:
    missing = [c for c in config.PSD_COLUMNS if c not in df.columns]
    if missing:
        raise DomainError(f"spectrum table is missing column(s) {missing}")
    freqs = df["freq_Hz"].to_numpy(dtype=float)
    if freqs.size < 2 or np.any(np.diff(freqs) <= 0.0):
        raise DomainError("spectrum frequencies must be strictly increasing")
    return Spectrum(freqs=freqs, psd=df["psd"].to_numpy(dtype=float), metadata=dict(metadata or {}))
