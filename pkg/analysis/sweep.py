"""Storage-time maps over ionization distance and drive phase."""

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import pandas as pd

from config import Config
from core.error_handler import (
    IntegrationDivergedError,
    InvalidArgumentError,
    NoSecularMotionError,
    OffGridError,
)
from core.executor import ParallelExecutor
from dynamics.integrator import integrate
from dynamics.specs import InitialCondition, SimOutcome, TerminationSpec
from trap.base import FieldModel
from trap.specs import DriveSpec, ParticleSpec
from .mathieu import linear_secular_frequency
from .spectrum import (
    DEFAULT_LOCK_TOLERANCE,
    DEFAULT_MAX_ORDER,
    MotionSummary,
    summarize_motion,
)

# Cells lost faster than this carry no motion summary
MIN_SUMMARY_STORAGE = 1e-6
JUMP_THRESHOLD = 0.2
# Median boundary frequency within this of f_drive / loss_onset_order counts as reproduced
BOUNDARY_TOLERANCE_MHZ = 2.0
PHASE_ATOL = 1e-9

REFERENCE_FINDINGS = {
    "stable_radius_um": 120.0,
    "jump_amplitude_um": 250.0,
    "loss_amplitude_um": 420.0,
    "boundary_freq_MHz": 1600.0 / 7.0,
    "lock_band_freq_MHz": 1600.0 / 6.0,
}


@dataclass(frozen=True)
class SweepSpec:
    """Grid over ionization distance x0 (meters) and drive phase in [0, 2 pi)."""
    model: FieldModel
    distance_min: float
    distance_max: float
    distance_count: int
    phase_count: int
    term: TerminationSpec = TerminationSpec()
    drive: DriveSpec = DriveSpec()
    particle: ParticleSpec = ParticleSpec()
    workers: int | None = None
    capture_window: float = 20e-6
    lock_tolerance: float = DEFAULT_LOCK_TOLERANCE
    n_max: int = DEFAULT_MAX_ORDER
    loss_onset_order: int = 7
    seed: int = 0

    def __post_init__(self):
        if self.distance_count < 2 or self.phase_count < 2:
            raise InvalidArgumentError("sweep axes need at least 2 points each")
        if not (0 <= self.distance_min < self.distance_max):
            raise InvalidArgumentError(
                f"distance axis must be increasing and >= 0, got [{self.distance_min}, {self.distance_max}]"
            )
        if self.distance_max > self.term.escape_radius[0]:
            raise InvalidArgumentError("distance axis extends beyond the escape boundary")
        if not self.capture_window > 0:
            raise InvalidArgumentError("capture_window must be > 0")
        if self.loss_onset_order < 2:
            raise InvalidArgumentError(f"loss_onset_order must be >= 2, got {self.loss_onset_order}")

    @property
    def distances(self) -> np.ndarray:
        return np.linspace(self.distance_min, self.distance_max, self.distance_count)

    @property
    def phases(self) -> np.ndarray:
        return 2.0 * math.pi * np.arange(self.phase_count) / self.phase_count

    @property
    def linear_frequency(self) -> float | None:
        """Floquet secular frequency (Hz) of small oscillations along x, None when unstable."""
        return linear_secular_frequency(self.model, self.drive, self.particle)

    def header(self) -> list[str]:
        lines = [
            f"grid = {self.distance_count}x{self.phase_count}",
            f"x0_min_um = {self.distance_min * 1e6!r}",
            f"x0_max_um = {self.distance_max * 1e6!r}",
            f"cap_ms = {self.term.time_cap * 1e3!r}",
            f"escape_radius_um = {self.term.escape_radius[0] * 1e6!r}",
            f"steps_per_period = {self.term.steps_per_period}",
            f"drive_freq_GHz = {self.drive.frequency / 1e9!r}",
            f"amplitude_scale = {self.drive.amplitude_scale!r}",
            f"capture_window_us = {self.capture_window * 1e6!r}",
            f"loss_onset_order = {self.loss_onset_order}",
            f"seed = {self.seed}",
        ]
        lines += [f"model.{k} = {v!r}" for k, v in self.model.to_params().items()]
        return lines


@dataclass
class SweepCell:
    distance: float
    phase: float
    outcome: SimOutcome
    summary: MotionSummary | None = None
    diverged: bool = False


@dataclass
class SweepMap:
    """Complete grid of cells indexed [distance][phase]."""
    spec: SweepSpec
    cells: list[list[SweepCell]]
    metadata: dict = field(default_factory=dict)

    @property
    def distances(self) -> np.ndarray:
        return self.spec.distances

    @property
    def phases(self) -> np.ndarray:
        return self.spec.phases

    def cell(self, i: int, j: int) -> SweepCell:
        return self.cells[i][j]

    def storage_times(self) -> np.ndarray:
        return np.array([[c.outcome.storage_time for c in row] for row in self.cells])

    def capped(self) -> np.ndarray:
        return np.array([[c.outcome.capped for c in row] for row in self.cells])

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for row in self.cells:
            for c in row:
                s = c.summary
                rows.append({
                    "x0_um": c.distance * 1e6,
                    "phase_rad": c.phase,
                    "storage_time_s": c.outcome.storage_time,
                    "escaped": c.outcome.escaped,
                    "capped": c.outcome.capped,
                    "secular_MHz": s.secular_frequency / 1e6 if s else math.nan,
                    "amplitude_um": s.amplitude * 1e6 if s else math.nan,
                    "lock_order": s.lock_order if s and s.lock_order else pd.NA,
                    "diverged": c.diverged,
                })
        frame = pd.DataFrame(rows)
        frame["lock_order"] = frame["lock_order"].astype("Int64")
        return frame


def _sweep_row(args) -> list[SweepCell]:
    """All phases at one distance: classify, then capture capped cells."""
    spec, distance, linear_frequency = args
    cells = []
    for phase in spec.phases:
        init = InitialCondition.at_rest(float(distance), float(phase))
        try:
            outcome = integrate(spec.model, spec.drive, spec.particle, init, spec.term)
        except IntegrationDivergedError as exc:
            outcome = SimOutcome(storage_time=exc.last_time, escaped=False, capped=False,
                                 final_position=np.full(3, np.nan),
                                 final_velocity=np.full(3, np.nan))
            cells.append(SweepCell(float(distance), float(phase), outcome, diverged=True))
            continue
        cells.append(SweepCell(float(distance), float(phase), outcome))

    for cell in cells:
        if not cell.outcome.capped or cell.outcome.storage_time < MIN_SUMMARY_STORAGE:
            continue
        init = InitialCondition.at_rest(cell.distance, cell.phase)
        captured = integrate(spec.model, spec.drive, spec.particle, init, spec.term,
                             record=True, record_tail=spec.capture_window)
        try:
            cell.summary = summarize_motion(captured.trajectory, spec.drive.omega,
                                            spec.lock_tolerance, spec.n_max,
                                            linear_frequency=linear_frequency)
        except NoSecularMotionError:
            cell.summary = None
    return cells


def run_sweep(spec: SweepSpec, progress_callback: Callable[[str], None] | None = None) -> SweepMap:
    """
    Integrate every (x0, phase) cell from rest.

    Rows run in parallel; the grid is assembled in index order so the result
    does not depend on the worker count.
    """
    executor = ParallelExecutor(spec.workers, progress_callback=progress_callback)
    linear_frequency = spec.linear_frequency
    rows = executor.map(_sweep_row, [(spec, d, linear_frequency) for d in spec.distances],
                        label="扫描行")
    return SweepMap(spec=spec, cells=rows,
                    metadata={"version": Config.VERSION, "seed": spec.seed})


def _phase_index(sweep: SweepMap, phase: float, snap: bool) -> int:
    two_pi = 2.0 * math.pi
    target = phase % two_pi
    diffs = np.abs((sweep.phases - target + math.pi) % two_pi - math.pi)
    j = int(np.argmin(diffs))
    if diffs[j] > PHASE_ATOL and not snap:
        raise OffGridError(
            f"phase {phase:.9g} rad is not on the sweep grid; nearest is {sweep.phases[j]:.9g} rad",
            nearest=float(sweep.phases[j]),
        )
    return j


def phase_slice(sweep: SweepMap, phase: float, snap: bool = False) -> pd.DataFrame:
    """Amplitude and secular frequency versus x0 at one phase."""
    j = _phase_index(sweep, phase, snap)
    rows = []
    for row in sweep.cells:
        c = row[j]
        s = c.summary
        rows.append({
            "x0_um": c.distance * 1e6,
            "capped": c.outcome.capped,
            "storage_time_s": c.outcome.storage_time,
            "amplitude_um": s.amplitude * 1e6 if s else math.nan,
            "secular_MHz": s.secular_frequency / 1e6 if s else math.nan,
            "lock_order": s.lock_order if s and s.lock_order else pd.NA,
        })
    frame = pd.DataFrame(rows)
    frame["lock_order"] = frame["lock_order"].astype("Int64")
    return frame


def loss_boundary(sweep: SweepMap) -> pd.DataFrame:
    """Per phase: the last capped cell before the first loss along x0."""
    rows = []
    for j, phase in enumerate(sweep.phases):
        column = [row[j] for row in sweep.cells]
        first_loss = next((i for i, c in enumerate(column) if not c.outcome.capped), None)
        record = {"phase_rad": float(phase), "loss_x0_um": math.nan, "last_stable_x0_um": math.nan,
                  "secular_MHz": math.nan, "amplitude_um": math.nan, "lock_order": pd.NA}
        if first_loss is not None:
            record["loss_x0_um"] = column[first_loss].distance * 1e6
            if first_loss > 0:
                last = column[first_loss - 1]
                record["last_stable_x0_um"] = last.distance * 1e6
                if last.summary:
                    record["secular_MHz"] = last.summary.secular_frequency / 1e6
                    record["amplitude_um"] = last.summary.amplitude * 1e6
                    record["lock_order"] = last.summary.lock_order or pd.NA
        rows.append(record)
    frame = pd.DataFrame(rows)
    frame["lock_order"] = frame["lock_order"].astype("Int64")
    return frame


def amplitude_jumps(sweep: SweepMap, threshold: float = JUMP_THRESHOLD) -> pd.DataFrame:
    """Per phase: first x0 where the amplitude grows by more than threshold between adjacent cells."""
    rows = []
    for j, phase in enumerate(sweep.phases):
        record = {"phase_rad": float(phase), "x0_um": math.nan, "amplitude_before_um": math.nan,
                  "amplitude_after_um": math.nan, "lock_order": pd.NA}
        column = [row[j] for row in sweep.cells]
        for i in range(1, len(column)):
            before, after = column[i - 1].summary, column[i].summary
            if not column[i].outcome.capped:
                break
            if not (before and after):
                continue
            if before.amplitude > 0 and after.amplitude > (1.0 + threshold) * before.amplitude:
                record.update(x0_um=column[i].distance * 1e6,
                              amplitude_before_um=before.amplitude * 1e6,
                              amplitude_after_um=after.amplitude * 1e6,
                              lock_order=after.lock_order or pd.NA)
                break
        rows.append(record)
    frame = pd.DataFrame(rows)
    frame["lock_order"] = frame["lock_order"].astype("Int64")
    return frame


def lock_band(sweep: SweepMap, order: int = 6) -> pd.DataFrame:
    """Cells whose secular frequency is locked to the given subharmonic."""
    rows = [
        {"x0_um": c.distance * 1e6, "phase_rad": c.phase,
         "secular_MHz": c.summary.secular_frequency / 1e6,
         "amplitude_um": c.summary.amplitude * 1e6}
        for row in sweep.cells for c in row
        if c.summary is not None and c.summary.lock_order == order
    ]
    return pd.DataFrame(rows, columns=["x0_um", "phase_rad", "secular_MHz", "amplitude_um"])


def sweep_findings(sweep: SweepMap) -> dict:
    """Model-dependent numbers to set against the reference trap's published values."""
    capped = sweep.capped()
    all_phases = np.all(capped, axis=1)
    unstable_rows = np.nonzero(~all_phases)[0]
    if unstable_rows.size == 0:
        stable_radius = sweep.distances[-1]
    elif unstable_rows[0] == 0:
        stable_radius = math.nan
    else:
        stable_radius = sweep.distances[unstable_rows[0] - 1]

    boundary = loss_boundary(sweep)
    jumps = amplitude_jumps(sweep)
    band = lock_band(sweep, 6)
    onset = sweep.spec.drive.frequency / sweep.spec.loss_onset_order / 1e6
    linear = sweep.spec.linear_frequency
    linear_near = None
    if linear:
        order = round(sweep.spec.drive.frequency / linear)
        if order >= 2 and abs(linear - sweep.spec.drive.frequency / order) <= sweep.spec.lock_tolerance:
            linear_near = order
    boundary_freqs = boundary["secular_MHz"].dropna()

    def _median(series) -> float:
        series = series.dropna()
        return float(series.median()) if len(series) else math.nan

    boundary_median = _median(boundary_freqs)

    return {
        "stable_radius_um": float(stable_radius) * 1e6,
        "jump_amplitude_um": _median(jumps["amplitude_before_um"]),
        "loss_amplitude_um": _median(boundary["amplitude_um"]),
        "boundary_freq_MHz": boundary_median,
        "boundary_offset_MHz": boundary_median - onset,
        "boundary_reproduced": bool(abs(boundary_median - onset) <= BOUNDARY_TOLERANCE_MHZ),
        "boundary_max_offset_MHz": float(np.max(np.abs(boundary_freqs - onset))) if len(boundary_freqs) else math.nan,
        "lock_band_freq_MHz": _median(band["secular_MHz"]),
        "lock_band_cells": int(len(band)),
        "diverged_cells": int(sum(c.diverged for row in sweep.cells for c in row)),
        "linear_freq_MHz": linear / 1e6 if linear else math.nan,
        # core cells sit at this subharmonic without being locked to it
        "linear_near_subharmonic": linear_near,
    }
