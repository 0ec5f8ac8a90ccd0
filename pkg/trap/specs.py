"""Particle and drive specifications."""

import math
from dataclasses import dataclass

from scipy import constants

from core.error_handler import InvalidArgumentError

ELECTRON_CHARGE: float = -constants.e
ELECTRON_MASS: float = constants.m_e
REFERENCE_DRIVE_OMEGA: float = 2 * math.pi * 1.6e9


@dataclass(frozen=True)
class ParticleSpec:
    """Charged particle; defaults to the electron."""
    charge: float = ELECTRON_CHARGE
    mass: float = ELECTRON_MASS

    def __post_init__(self):
        if not (math.isfinite(self.charge) and math.isfinite(self.mass)):
            raise InvalidArgumentError("particle charge and mass must be finite")
        if self.mass <= 0:
            raise InvalidArgumentError(f"particle mass must be > 0, got {self.mass}")
        if self.charge == 0:
            raise InvalidArgumentError("particle charge must be non-zero")

    @property
    def charge_to_mass(self) -> float:
        return self.charge / self.mass


@dataclass(frozen=True)
class DriveSpec:
    """Microwave drive. Field time dependence is cos(omega * t + phi)."""
    omega: float = REFERENCE_DRIVE_OMEGA
    amplitude_scale: float = 1.0

    phase_convention = "cos(omega*t + phi)"

    def __post_init__(self):
        if not (math.isfinite(self.omega) and math.isfinite(self.amplitude_scale)):
            raise InvalidArgumentError("drive parameters must be finite")
        if self.omega <= 0:
            raise InvalidArgumentError(f"drive omega must be > 0, got {self.omega}")
        if self.amplitude_scale < 0:
            raise InvalidArgumentError(
                f"amplitude_scale must be >= 0, got {self.amplitude_scale}"
            )

    @property
    def frequency(self) -> float:
        """Drive frequency in Hz."""
        return self.omega / (2 * math.pi)

    @property
    def period(self) -> float:
        return 2 * math.pi / self.omega
