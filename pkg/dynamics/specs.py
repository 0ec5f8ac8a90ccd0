"""Initial conditions, termination, perturbations and outcomes of a trajectory."""

import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from core.error_handler import InvalidArgumentError


def _vector(values, name: str) -> tuple[float, float, float]:
    arr = np.atleast_1d(np.asarray(values, dtype=np.float64))
    if arr.size == 1:
        arr = np.array([arr[0], 0.0, 0.0])
    if arr.shape != (3,) or not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{name} must be a finite scalar or 3-vector")
    return (float(arr[0]), float(arr[1]), float(arr[2]))


@dataclass(frozen=True)
class InitialCondition:
    """State at ionization; phase is the drive phase at t = 0, normalized to [0, 2pi)."""
    position: tuple = (0.0, 0.0, 0.0)
    velocity: tuple = (0.0, 0.0, 0.0)
    phase: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "position", _vector(self.position, "position"))
        object.__setattr__(self, "velocity", _vector(self.velocity, "velocity"))
        if not math.isfinite(self.phase):
            raise InvalidArgumentError("phase must be finite")
        object.__setattr__(self, "phase", float(self.phase) % (2 * math.pi))

    @classmethod
    def at_rest(cls, x0: float, phase: float = 0.0) -> "InitialCondition":
        """Electron created at rest at distance x0 along x."""
        return cls(position=(x0, 0.0, 0.0), velocity=(0.0, 0.0, 0.0), phase=phase)

    def state(self) -> np.ndarray:
        return np.array(self.position + self.velocity, dtype=np.float64)


@dataclass(frozen=True)
class TerminationSpec:
    """Storage-time cap, escape boundary per axis, and integration resolution."""
    time_cap: float = 1e-3
    escape_radius: tuple = (500e-6, 500e-6, 500e-6)
    steps_per_period: int = 128

    def __post_init__(self):
        radius = np.atleast_1d(np.asarray(self.escape_radius, dtype=np.float64))
        if radius.size == 1:
            radius = np.repeat(radius, 3)
        if radius.shape != (3,):
            raise InvalidArgumentError("escape_radius must be a scalar or one value per axis")
        object.__setattr__(self, "escape_radius", tuple(float(r) for r in radius))
        if not (math.isfinite(self.time_cap) and self.time_cap > 0):
            raise InvalidArgumentError(f"time_cap must be > 0, got {self.time_cap}")
        if not all(r > 0 for r in self.escape_radius):
            raise InvalidArgumentError("escape_radius must be > 0")
        if int(self.steps_per_period) < 32:
            raise InvalidArgumentError(
                f"steps_per_period must be >= 32, got {self.steps_per_period}"
            )
        object.__setattr__(self, "steps_per_period", int(self.steps_per_period))

    def refined(self, factor: int = 2) -> "TerminationSpec":
        return TerminationSpec(self.time_cap, self.escape_radius, self.steps_per_period * factor)


# Unit vector at 45 degrees in the x-z plane
DEFAULT_TICKLE_DIRECTION = (math.sqrt(0.5), 0.0, math.sqrt(0.5))


@dataclass(frozen=True)
class TickleSpec:
    """Auxiliary rf tone: amplitude * direction * cos(omega_tickle t) inside the window.

    gradient_length, when set, makes the field fall off along its direction:
    amplitude * direction * (1 + direction.r / gradient_length).
    """
    omega_tickle: float
    field_amplitude: float
    direction: tuple = DEFAULT_TICKLE_DIRECTION
    window: tuple = (0.0, math.inf)
    gradient_length: float | None = None

    def __post_init__(self):
        direction = np.asarray(self.direction, dtype=np.float64)
        norm = float(np.linalg.norm(direction))
        if direction.shape != (3,) or not math.isclose(norm, 1.0, rel_tol=1e-9):
            raise InvalidArgumentError(f"tickle direction must be a unit 3-vector, |d| = {norm}")
        object.__setattr__(self, "direction", tuple(float(d) for d in direction))
        if not (math.isfinite(self.field_amplitude) and self.field_amplitude >= 0):
            raise InvalidArgumentError("tickle field_amplitude must be >= 0")
        if not math.isfinite(self.omega_tickle):
            raise InvalidArgumentError("omega_tickle must be finite")
        t_on, t_off = self.window
        if not t_on < t_off:
            raise InvalidArgumentError(f"tickle window needs t_on < t_off, got {self.window}")
        if self.gradient_length is not None and not self.gradient_length > 0:
            raise InvalidArgumentError("gradient_length must be > 0 when set")

    def packed(self) -> np.ndarray:
        inv_length = 0.0 if self.gradient_length is None else 1.0 / self.gradient_length
        return np.array([
            self.field_amplitude, self.omega_tickle, *self.direction,
            self.window[0], self.window[1], inv_length,
        ], dtype=np.float64)


@dataclass(frozen=True)
class DriveNoiseSpec:
    """Piecewise-constant multiplicative drive amplitude noise (1 + eps).

    eps ~ Normal(0, relative_sigma), redrawn every hold_periods RF periods.
    """
    relative_sigma: float
    hold_periods: int = 1
    seed: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.relative_sigma) and self.relative_sigma >= 0):
            raise InvalidArgumentError("relative_sigma must be >= 0")
        if int(self.hold_periods) < 1:
            raise InvalidArgumentError("hold_periods must be >= 1")

    def sample(self, blocks: int) -> np.ndarray:
        """First `blocks` amplitude offsets eps; prefixes agree for any length."""
        rng = np.random.Generator(np.random.PCG64(self.seed))
        return rng.standard_normal(max(int(blocks), 1)) * self.relative_sigma


@dataclass
class Trajectory:
    """Decimated position samples."""
    times: np.ndarray
    positions: np.ndarray
    decimation: int

    def __len__(self):
        return len(self.times)

    @property
    def sample_interval(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "time_s": self.times,
            "x_m": self.positions[:, 0],
            "y_m": self.positions[:, 1],
            "z_m": self.positions[:, 2],
        })

    @classmethod
    def from_frame(cls, frame: pd.DataFrame, decimation: int) -> "Trajectory":
        return cls(
            times=frame["time_s"].to_numpy(dtype=np.float64),
            positions=frame[["x_m", "y_m", "z_m"]].to_numpy(dtype=np.float64),
            decimation=decimation,
        )


@dataclass
class SimOutcome:
    """Result of one integration."""
    storage_time: float
    escaped: bool
    capped: bool
    final_position: np.ndarray
    final_velocity: np.ndarray
    trajectory: Trajectory | None = field(default=None, repr=False)

    def same_classification(self, other: "SimOutcome") -> bool:
        return self.escaped == other.escaped and self.capped == other.capped
