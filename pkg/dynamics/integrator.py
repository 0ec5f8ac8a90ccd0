"""Fixed-step integration of single-electron motion in a trap field."""

import math
from pathlib import Path

import numpy as np

from core.error_handler import IntegrationDivergedError, InvalidArgumentError
from core.reports import read_table, write_table
from trap.base import FieldModel
from trap.specs import DriveSpec, ParticleSpec
from .kernels import STATUS_CAPPED, STATUS_DIVERGED, STATUS_ESCAPED, force, run_trajectory
from .specs import (
    DriveNoiseSpec,
    InitialCondition,
    SimOutcome,
    TerminationSpec,
    TickleSpec,
    Trajectory,
)

# Stored samples per drive period
SAMPLES_PER_PERIOD = 4

_NO_TICKLE = np.zeros(8)
_NO_NOISE = np.zeros(1)
_NO_RECORDS = np.empty((0, 4))


def _drive_params(drive: DriveSpec, particle: ParticleSpec, phase: float) -> np.ndarray:
    return np.array([particle.charge, particle.mass, drive.omega, phase, drive.amplitude_scale],
                    dtype=np.float64)


def _noise_table(noise: DriveNoiseSpec | None, drive: DriveSpec, duration: float):
    """Noise offsets per hold block covering [0, duration], and the block length."""
    if noise is None:
        return _NO_NOISE, math.inf
    block = noise.hold_periods * drive.period
    blocks = int(math.ceil(duration / block)) + 1
    return noise.sample(blocks), block


def _tickle_params(tickle: TickleSpec | None) -> np.ndarray:
    return _NO_TICKLE if tickle is None else tickle.packed()


def step_size(drive: DriveSpec, steps_per_period: int) -> float:
    """h = 2 pi / (omega * steps_per_period)."""
    return drive.period / steps_per_period


def recording_stride(steps_per_period: int) -> int:
    return max(steps_per_period // SAMPLES_PER_PERIOD, 1)


def integrate(model: FieldModel, drive: DriveSpec, particle: ParticleSpec,
              init: InitialCondition, term: TerminationSpec = TerminationSpec(),
              tickle: TickleSpec | None = None, noise: DriveNoiseSpec | None = None,
              record: bool = False, record_tail: float | None = None) -> SimOutcome:
    """
    Integrate one electron until it escapes or reaches the time cap.

    Args:
        model: Trap field model.
        drive: Microwave drive.
        particle: Trapped particle.
        init: Position, velocity and drive phase at t = 0.
        term: Time cap, escape boundary and steps per drive period.
        tickle: Optional auxiliary tone.
        noise: Optional drive amplitude noise.
        record: Keep a decimated trajectory (4 samples per drive period).
        record_tail: Keep only the final record_tail seconds of the trajectory.

    Returns:
        SimOutcome; storage_time is the interpolated boundary crossing for escapes.

    Raises:
        IntegrationDivergedError: The state became non-finite.
    """
    escape = np.asarray(term.escape_radius, dtype=np.float64)
    start = np.asarray(init.position)
    if np.any(np.abs(start) > escape):
        raise InvalidArgumentError(
            f"initial position {list(init.position)} lies outside the escape boundary {list(term.escape_radius)}"
        )
    if model.validity_extent < float(np.max(escape)):
        raise InvalidArgumentError(
            f"model validity extent {model.validity_extent:.6g} m does not cover the escape boundary"
        )

    h = step_size(drive, term.steps_per_period)
    n_steps = int(math.floor(term.time_cap / h + 1e-9))
    stride = recording_stride(term.steps_per_period)

    if record:
        record_from = 0
        if record_tail is not None:
            record_from = max(n_steps - int(math.ceil(record_tail / h)), 0)
        records = np.empty(((n_steps - record_from) // stride + 2, 4))
    else:
        record_from = n_steps + 1
        records = _NO_RECORDS

    noise_values, noise_dt = _noise_table(noise, drive, term.time_cap)
    status, stop_time, state, n_rec = run_trajectory(
        init.state(), 0.0, h, n_steps, model.packed(),
        _drive_params(drive, particle, init.phase), _tickle_params(tickle),
        noise_values, noise_dt, escape, stride, record_from, records,
    )

    if status == STATUS_DIVERGED:
        raise IntegrationDivergedError(
            f"integration diverged at t = {stop_time:.9e} s", last_time=float(stop_time)
        )

    trajectory = None
    if record:
        kept = records[:n_rec]
        trajectory = Trajectory(times=kept[:, 0].copy(), positions=kept[:, 1:].copy(),
                                decimation=stride)

    escaped = status == STATUS_ESCAPED
    return SimOutcome(
        storage_time=float(stop_time) if escaped else term.time_cap,
        escaped=escaped,
        capped=status == STATUS_CAPPED,
        final_position=state[:3].copy(),
        final_velocity=state[3:].copy(),
        trajectory=trajectory,
    )


def total_force(model: FieldModel, drive: DriveSpec, particle: ParticleSpec, state,
                time: float, tickle: TickleSpec | None = None,
                noise: DriveNoiseSpec | None = None, phase: float = 0.0) -> np.ndarray:
    """Force (N) on the particle at state[:3] and time, as used by the integrator."""
    state = np.asarray(state, dtype=np.float64)
    if not (np.all(np.isfinite(state)) and math.isfinite(time) and math.isfinite(phase)):
        raise InvalidArgumentError("state, time and phase must be finite")
    noise_values, noise_dt = _noise_table(noise, drive, max(time, 0.0))
    fx, fy, fz = force(time, state[0], state[1], state[2], model.packed(),
                       _drive_params(drive, particle, phase), _tickle_params(tickle),
                       noise_values, noise_dt)
    return np.array([fx, fy, fz])


def convergence_probe(model: FieldModel, drive: DriveSpec, particle: ParticleSpec,
                      init: InitialCondition, term: TerminationSpec = TerminationSpec(),
                      tickle: TickleSpec | None = None,
                      noise: DriveNoiseSpec | None = None) -> tuple[SimOutcome, SimOutcome]:
    """Integrate at steps_per_period and at twice that resolution."""
    coarse = integrate(model, drive, particle, init, term, tickle, noise)
    fine = integrate(model, drive, particle, init, term.refined(2), tickle, noise)
    return coarse, fine


def propagate(model: FieldModel, drive: DriveSpec, particle: ParticleSpec, state,
              t_start: float, t_end: float, steps_per_period: int = 128,
              phase: float = 0.0) -> np.ndarray:
    """Propagate (x, y, z, vx, vy, vz) from t_start to t_end; t_end may precede t_start."""
    state = np.asarray(state, dtype=np.float64)
    if state.shape != (6,):
        raise InvalidArgumentError("state must be (x, y, z, vx, vy, vz)")
    span = t_end - t_start
    if span == 0:
        return state.copy()
    n_steps = int(math.ceil(abs(span) / step_size(drive, steps_per_period) - 1e-9))
    h = span / n_steps
    unbounded = np.full(3, np.inf)
    status, stop_time, final, _ = run_trajectory(
        state, t_start, h, n_steps, model.packed(), _drive_params(drive, particle, phase),
        _NO_TICKLE, _NO_NOISE, math.inf, unbounded, 1, n_steps + 1, _NO_RECORDS,
    )
    if status == STATUS_DIVERGED:
        raise IntegrationDivergedError(
            f"integration diverged at t = {stop_time:.9e} s", last_time=float(stop_time)
        )
    return final


def export_trajectory(trajectory: Trajectory, path: str | Path,
                      header: list[str] | None = None) -> Path:
    """Write (time_s, x_m, y_m, z_m) rows; the decimation factor goes in the header."""
    lines = list(header or [])
    lines.append(f"decimation = {trajectory.decimation}")
    return write_table(trajectory.to_frame(), path, lines)


def import_trajectory(path: str | Path) -> Trajectory:
    frame, header = read_table(path)
    return Trajectory.from_frame(frame, int(header.get("decimation", 1)))
