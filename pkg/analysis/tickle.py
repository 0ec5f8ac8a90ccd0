"""Simulated tickle spectroscopy: ensemble survival versus tickle frequency."""

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import pandas as pd
from scipy.stats import median_abs_deviation, qmc

from config import Config
from core.error_handler import InvalidArgumentError, InvalidEnsembleError
from core.executor import ParallelExecutor
from dynamics.integrator import integrate
from dynamics.specs import DEFAULT_TICKLE_DIRECTION, InitialCondition, TerminationSpec, TickleSpec
from trap.base import FieldModel
from trap.specs import DriveSpec, ParticleSpec

DEFAULT_CORE_RADIUS = (50e-6, 50e-6, 50e-6)
SIGMA_MULTIPLE = 3.0


@dataclass(frozen=True)
class Dip:
    center: float
    depth: float
    width: float


@dataclass
class TickleSpectrum:
    """Survival fraction per tickle frequency (Hz) and the dips found in it."""
    frequencies: np.ndarray
    survival: np.ndarray
    dips: list[Dip] = field(default_factory=list)
    ensemble_size: int = 0
    baseline: float = 1.0
    threshold: float = 1.0

    def dip_mask(self) -> np.ndarray:
        mask = np.zeros(len(self.frequencies), dtype=bool)
        for dip in self.dips:
            lo, hi = dip.center - dip.width / 2.0, dip.center + dip.width / 2.0
            mask |= (self.frequencies >= lo) & (self.frequencies <= hi) & (self.survival < self.threshold)
        for dip in self.dips:
            mask[int(np.argmin(np.abs(self.frequencies - dip.center)))] = True
        return mask

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "freq_MHz": self.frequencies / 1e6,
            "survival": self.survival,
            "is_dip": self.dip_mask(),
        })

    def nearest_dip(self, frequency: float) -> Dip | None:
        if not self.dips:
            return None
        return min(self.dips, key=lambda d: abs(d.center - frequency))


def default_ensemble(count: int = 16, core_radius=DEFAULT_CORE_RADIUS,
                     seed: int = 0) -> list[InitialCondition]:
    """
    Electrons at rest spread over the stable core.

    Positions follow a scrambled Halton sequence inside |x_i| <= core_radius_i;
    phases are stratified, one per 2 pi / count slot.
    """
    if count < 1:
        raise InvalidArgumentError(f"ensemble count must be >= 1, got {count}")
    radius = np.broadcast_to(np.asarray(core_radius, dtype=np.float64), (3,))
    points = qmc.Halton(d=4, scramble=True, seed=seed).random(count)
    ensemble = []
    for k, u in enumerate(points):
        position = (2.0 * u[:3] - 1.0) * radius
        phase = 2.0 * math.pi * (k + u[3]) / count
        ensemble.append(InitialCondition(position=tuple(position), phase=phase))
    return ensemble


def scan_frequencies(f_min: float, f_max: float, step: float) -> np.ndarray:
    """Inclusive frequency axis f_min, f_min + step, ..., f_max (Hz)."""
    if not (0 < f_min <= f_max and step > 0):
        raise InvalidArgumentError(f"invalid scan ({f_min}, {f_max}, {step})")
    count = int(math.floor((f_max - f_min) / step + 1e-9)) + 1
    return f_min + step * np.arange(count)


def _survival(args) -> float:
    model, drive, particle, ensemble, term, tickle = args
    kept = sum(
        integrate(model, drive, particle, init, term, tickle=tickle).capped
        for init in ensemble
    )
    return kept / len(ensemble)


def tickle_scan(ensemble: list[InitialCondition], model: FieldModel, drive: DriveSpec,
                scan: tuple[float, float, float], tickle_amplitude: float, duration: float,
                particle: ParticleSpec = ParticleSpec(),
                direction=DEFAULT_TICKLE_DIRECTION,
                gradient_length: float | None = None,
                escape_radius=500e-6, steps_per_period: int = 128,
                workers: int | None = None,
                progress_callback: Callable[[str], None] | None = None) -> TickleSpectrum:
    """
    Survival fraction of the ensemble with a tickle tone held for `duration`.

    Args:
        ensemble: Initial conditions.
        model: 3D field model.
        drive: Microwave drive.
        scan: (f_min, f_max, step) in Hz.
        tickle_amplitude: Tickle field amplitude (V/m).
        duration: Wait window with the tickle applied (s).

    Raises:
        InvalidEnsembleError: A member is lost without tickle.
    """
    if model.dimension != 3:
        raise InvalidArgumentError(f"tickle scans need a 3D field model, got {model.variant}")
    if not ensemble:
        raise InvalidArgumentError("ensemble is empty")
    if not tickle_amplitude >= 0:
        raise InvalidArgumentError(f"tickle_amplitude must be >= 0, got {tickle_amplitude}")
    term = TerminationSpec(time_cap=duration, escape_radius=escape_radius,
                           steps_per_period=steps_per_period)
    executor = ParallelExecutor(workers, progress_callback=progress_callback)

    unperturbed = executor.map(
        _survival, [(model, drive, particle, [init], term, None) for init in ensemble],
    )
    lost = [i for i, s in enumerate(unperturbed) if s < 1.0]
    if lost:
        raise InvalidEnsembleError(
            f"{len(lost)} of {len(ensemble)} ensemble members are lost without tickle (first: #{lost[0]})"
        )

    freqs = scan_frequencies(*scan)
    if tickle_amplitude == 0:
        survival = np.ones(len(freqs))
    else:
        tasks = [
            (model, drive, particle, ensemble, term,
             TickleSpec(omega_tickle=2.0 * math.pi * f, field_amplitude=tickle_amplitude,
                        direction=direction, window=(0.0, duration),
                        gradient_length=gradient_length))
            for f in freqs
        ]
        survival = np.array(executor.map(_survival, tasks, label="激励频率"))

    dips, baseline, threshold = detect_dips(freqs, survival, len(ensemble))
    return TickleSpectrum(frequencies=freqs, survival=survival, dips=dips,
                          ensemble_size=len(ensemble), baseline=baseline, threshold=threshold)


def _half_depth_edge(freqs, survival, k, level, step) -> float:
    """Interpolated frequency where survival climbs back to `level` walking from k by step."""
    i = k
    while 0 <= i + step < len(freqs) and survival[i + step] < level:
        i += step
    j = i + step
    if j < 0 or j >= len(freqs):
        return float(freqs[i])
    s_in, s_out = survival[i], survival[j]
    frac = (level - s_in) / (s_out - s_in) if s_out != s_in else 0.0
    return float(freqs[i] + frac * (freqs[j] - freqs[i]))


def detect_dips(freqs: np.ndarray, survival: np.ndarray,
                ensemble_size: int) -> tuple[list[Dip], float, float]:
    """
    Contiguous runs below baseline - max(3 sigma, 0.5 / ensemble_size).

    baseline is the median survival and sigma the MAD-based robust spread.
    Each run yields one dip at its minimum with its full width at half depth.

    Returns:
        (dips, baseline, threshold)
    """
    freqs = np.asarray(freqs, dtype=np.float64)
    survival = np.asarray(survival, dtype=np.float64)
    baseline = float(np.median(survival))
    sigma = float(median_abs_deviation(survival, scale="normal"))
    threshold = baseline - max(SIGMA_MULTIPLE * sigma, 0.5 / max(ensemble_size, 1))

    dips = []
    below = survival < threshold
    i = 0
    while i < len(survival):
        if not below[i]:
            i += 1
            continue
        start = i
        while i < len(survival) and below[i]:
            i += 1
        run = np.arange(start, i)
        k = int(run[np.argmin(survival[run])])
        depth = baseline - float(survival[k])
        level = baseline - depth / 2.0
        left = _half_depth_edge(freqs, survival, k, level, -1)
        right = _half_depth_edge(freqs, survival, k, level, +1)
        dips.append(Dip(center=float(freqs[k]), depth=depth, width=max(right - left, 0.0)))
    return dips, baseline, threshold


def scan_header(scan, tickle_amplitude: float, duration: float, ensemble_size: int,
                seed: int) -> list[str]:
    return [
        f"fmin_MHz = {scan[0] / 1e6!r}",
        f"fmax_MHz = {scan[1] / 1e6!r}",
        f"step_MHz = {scan[2] / 1e6!r}",
        f"tickle_amp_V_per_m = {tickle_amplitude!r}",
        f"duration_us = {duration * 1e6!r}",
        f"ensemble_size = {ensemble_size}",
        f"seed = {seed}",
        f"version = {Config.VERSION}",
    ]
