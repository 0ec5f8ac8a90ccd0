"""Secular frequency, amplitude and subharmonic lock extraction from trajectories."""

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import get_window

from core.error_handler import InvalidArgumentError, NoSecularMotionError
from dynamics.specs import Trajectory

TRANSIENT_FRACTION = 0.1
# Peak must exceed this multiple of the median in-band magnitude
NOISE_FLOOR_FACTOR = 10.0
MIN_SAMPLES = 32
DEFAULT_LOCK_TOLERANCE = 1e6
DEFAULT_MAX_ORDER = 10


@dataclass(frozen=True)
class MotionSummary:
    """Steady secular motion of one trajectory."""
    secular_frequency: float
    amplitude: float
    lock_order: int | None
    spectral_peak_height: float


def _steady_part(trajectory: Trajectory, axis: int) -> np.ndarray:
    series = np.asarray(trajectory.positions[:, axis], dtype=np.float64)
    return series[int(len(series) * TRANSIENT_FRACTION):]


def _interpolate_peak(spectrum: np.ndarray, k: int) -> tuple[float, float]:
    """Offset (bins) and height of the peak around bin k.

    Quadratic fit to the log magnitudes; falls back to a linear-magnitude
    parabola when a neighbour is zero.
    """
    if k <= 0 or k >= len(spectrum) - 1:
        return 0.0, float(spectrum[k])
    alpha, beta, gamma = spectrum[k - 1], spectrum[k], spectrum[k + 1]
    if alpha > 0 and gamma > 0:
        la, lb, lg = math.log(alpha), math.log(beta), math.log(gamma)
        denom = la - 2.0 * lb + lg
        if denom >= 0:
            return 0.0, float(beta)
        delta = 0.5 * (la - lg) / denom
        return delta, math.exp(lb - 0.25 * (la - lg) * delta)
    denom = alpha - 2.0 * beta + gamma
    if denom >= 0:
        return 0.0, float(beta)
    delta = 0.5 * (alpha - gamma) / denom
    return delta, float(beta - 0.25 * (alpha - gamma) * delta)


def amplitude_spectrum(trajectory: Trajectory, axis: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Hann-windowed one-sided amplitude spectrum (meters) of the steady part."""
    series = _steady_part(trajectory, axis)
    n = len(series)
    if n < MIN_SAMPLES:
        raise InvalidArgumentError(f"trajectory too short for a spectrum: {n} samples")
    dt = float(trajectory.times[1] - trajectory.times[0])
    window = get_window("hann", n)
    win_norm = np.sum(window) / n
    spectrum = np.abs(np.fft.rfft((series - np.mean(series)) * window)) * 2.0 / n / win_norm
    freqs = np.fft.rfftfreq(n, dt)
    return freqs, spectrum


def extract_secular_frequency(trajectory: Trajectory, omega_drive: float,
                              axis: int = 0) -> tuple[float, float]:
    """
    Dominant motional frequency below omega_drive / 3.

    Args:
        trajectory: Decimated trajectory; its sample rate must exceed 2 omega_drive / (3 * 2 pi).
        omega_drive: Drive angular frequency (rad/s).
        axis: Coordinate to analyse.

    Returns:
        (frequency in Hz, interpolated peak height in meters).

    Raises:
        NoSecularMotionError: No peak above the noise floor.
    """
    freqs, spectrum = amplitude_spectrum(trajectory, axis)
    f_max = omega_drive / (3.0 * 2.0 * math.pi)
    if freqs[-1] < f_max:
        raise InvalidArgumentError(
            f"sample rate too low: Nyquist {freqs[-1]:.6g} Hz is below {f_max:.6g} Hz"
        )

    band = np.nonzero((freqs > 0) & (freqs < f_max))[0]
    in_band = spectrum[band]
    if in_band.size == 0 or not np.any(in_band > 0):
        raise NoSecularMotionError("no secular motion detected: flat spectrum")
    k = int(band[np.argmax(in_band)])
    floor = float(np.median(in_band))
    if spectrum[k] <= NOISE_FLOOR_FACTOR * floor:
        raise NoSecularMotionError(
            f"no secular motion detected: peak {spectrum[k]:.3g} within noise floor {floor:.3g}"
        )

    delta, height = _interpolate_peak(spectrum, k)
    bin_width = freqs[1] - freqs[0]
    return float(freqs[k] + delta * bin_width), float(height)


def spectral_resolution(trajectory: Trajectory) -> float:
    """Bin width (Hz) of the spectrum used by extract_secular_frequency."""
    n = len(trajectory.times) - int(len(trajectory.times) * TRANSIENT_FRACTION)
    return 1.0 / (n * trajectory.sample_interval) if n > 0 and trajectory.sample_interval > 0 else math.inf


def extract_amplitude(trajectory: Trajectory, axis: int = 0) -> float:
    """Max |coordinate| after discarding the first 10% of samples."""
    if len(trajectory) == 0:
        raise InvalidArgumentError("trajectory is empty")
    series = _steady_part(trajectory, axis)
    if series.size == 0:
        series = np.asarray(trajectory.positions[:, axis])
    return float(np.max(np.abs(series)))


def detect_subharmonic_lock(freq: float, omega_drive: float,
                            tolerance: float = DEFAULT_LOCK_TOLERANCE,
                            n_max: int = DEFAULT_MAX_ORDER,
                            linear_frequency: float | None = None) -> int | None:
    """
    Smallest n in [2, n_max] with |freq - f_drive / n| <= tolerance, else None.

    A reading within tolerance of linear_frequency (the small-amplitude secular
    frequency, Hz) is unperturbed motion and never counts as a lock, even when
    the linear frequency itself sits next to a subharmonic.
    """
    if not freq > 0:
        raise InvalidArgumentError(f"freq must be > 0, got {freq}")
    if not tolerance > 0:
        raise InvalidArgumentError(f"tolerance must be > 0, got {tolerance}")
    if n_max < 2:
        raise InvalidArgumentError(f"n_max must be >= 2, got {n_max}")
    if linear_frequency is not None and abs(freq - linear_frequency) <= tolerance:
        return None
    f_drive = omega_drive / (2.0 * math.pi)
    for n in range(2, n_max + 1):
        if abs(freq - f_drive / n) <= tolerance:
            return n
    return None


def summarize_motion(trajectory: Trajectory, omega_drive: float,
                     lock_tolerance: float = DEFAULT_LOCK_TOLERANCE,
                     n_max: int = DEFAULT_MAX_ORDER, axis: int = 0,
                     linear_frequency: float | None = None) -> MotionSummary:
    """Frequency, amplitude and lock order of a capped trajectory."""
    frequency, height = extract_secular_frequency(trajectory, omega_drive, axis)
    return MotionSummary(
        secular_frequency=frequency,
        amplitude=extract_amplitude(trajectory, axis),
        lock_order=detect_subharmonic_lock(frequency, omega_drive, lock_tolerance, n_max,
                                           linear_frequency),
        spectral_peak_height=height,
    )
