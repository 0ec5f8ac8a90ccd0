"""Abstract base class for trap field models."""

import math
from abc import ABC, abstractmethod
from typing import ClassVar

import numpy as np

from core.error_handler import InvalidArgumentError
from .kernels import rf_envelope, static_acceleration
from .specs import DriveSpec, ParticleSpec


def as_position(position) -> np.ndarray:
    """Coerce a scalar x or an (x, y, z) sequence into a 3-vector."""
    arr = np.atleast_1d(np.asarray(position, dtype=np.float64))
    if arr.size == 1:
        arr = np.array([arr[0], 0.0, 0.0])
    if arr.shape != (3,):
        raise InvalidArgumentError(f"position must be a scalar or a 3-vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError("position must be finite")
    return arr


class FieldModel(ABC):
    """Analytic RF trap field with an optional static part.

    Subclasses are immutable; every evaluation goes through the packed
    parameter array so Python and compiled code agree exactly.
    """

    variant: ClassVar[str]
    dimension: ClassVar[int] = 1

    @abstractmethod
    def packed(self) -> np.ndarray:
        """Flat parameter array consumed by the compiled kernels."""

    @property
    @abstractmethod
    def validity_extent(self) -> float:
        """Largest |coordinate| (meters) for which the closed form is trusted."""

    @abstractmethod
    def origin_gradients(self) -> np.ndarray:
        """RF field gradient dE_i/dx_i at the origin per axis (V/m^2)."""

    @abstractmethod
    def to_params(self) -> dict:
        """Serialize to configuration keys."""

    def axial_omega(self) -> float:
        """Static axial angular frequency (rad/s); zero for 1D variants."""
        return 0.0

    def static_curvatures(self) -> np.ndarray:
        """Static acceleration per unit displacement along x, y, z (1/s^2)."""
        return np.zeros(3)

    def check_domain(self, position: np.ndarray):
        """Raise if the position lies outside the validity domain."""
        if np.any(np.abs(position) > self.validity_extent):
            raise InvalidArgumentError(
                f"position {position.tolist()} outside validity domain "
                f"|x| <= {self.validity_extent:.6g} m"
            )

    def envelope(self, position) -> np.ndarray:
        """RF field amplitude vector (V/m) at unit amplitude_scale."""
        pos = as_position(position)
        self.check_domain(pos)
        return np.array(rf_envelope(self.packed(), pos[0], pos[1], pos[2]))

    def static_field(self, position, particle: ParticleSpec) -> np.ndarray:
        """Static electric field (V/m) producing the configured axial frequency."""
        pos = as_position(position)
        acc = np.array(static_acceleration(self.packed(), pos[0], pos[1], pos[2]))
        return acc / particle.charge_to_mass

    def static_potential(self, position, particle: ParticleSpec) -> float:
        """Static electric potential (V), zero at the origin."""
        pos = as_position(position)
        wz2 = self.axial_omega() ** 2
        x, y, z = pos
        return (wz2 / (2.0 * particle.charge_to_mass)) * (z * z - 0.5 * (x * x + y * y))

    def instantaneous(self, drive: DriveSpec, position, time: float, phase: float) -> np.ndarray:
        """RF field (V/m) at a position and time."""
        if not (math.isfinite(time) and math.isfinite(phase)):
            raise InvalidArgumentError("time and phase must be finite")
        factor = drive.amplitude_scale * math.cos(drive.omega * time + phase)
        return self.envelope(position) * factor

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.to_params().items() if k != "variant")
        return f"{type(self).__name__}({args})"
