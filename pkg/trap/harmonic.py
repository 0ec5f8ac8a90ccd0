"""Ideal linear RF quadrupole field along one axis."""

import math
from dataclasses import dataclass

import numpy as np

from core.error_handler import InvalidArgumentError
from .base import FieldModel
from .kernels import KIND_HARMONIC, pack_model

HARMONIC_VALIDITY_EXTENT = 10e-3


@dataclass(frozen=True, repr=False)
class HarmonicRF1D(FieldModel):
    """E(x, t) = gradient * x * cos(omega t + phi)."""
    gradient: float

    variant = "harmonic"

    def __post_init__(self):
        if not math.isfinite(self.gradient):
            raise InvalidArgumentError("gradient must be finite")

    def packed(self) -> np.ndarray:
        return pack_model(KIND_HARMONIC, self.gradient)

    @property
    def validity_extent(self) -> float:
        return HARMONIC_VALIDITY_EXTENT

    def origin_gradients(self) -> np.ndarray:
        return np.array([self.gradient, 0.0, 0.0])

    def to_params(self) -> dict:
        return {"variant": self.variant, "gradient_V_per_m2": self.gradient}
