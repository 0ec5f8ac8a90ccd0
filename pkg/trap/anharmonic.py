"""Calibrated anharmonic surrogate for the slot-trap field."""

import math
from dataclasses import dataclass

import numpy as np

from core.error_handler import InvalidArgumentError
from .base import FieldModel
from .kernels import KIND_ANHARMONIC, pack_model


@dataclass(frozen=True, repr=False)
class Anharmonic1D(FieldModel):
    """E(x, t) = gradient * x * (1 + |x/rolloff_scale|**rolloff_exponent)**(-rolloff_order) * cos(omega t + phi).

    Linear near the origin; rolls off beyond rolloff_scale so the pseudopotential
    has a finite maximum whenever rolloff_order * rolloff_exponent > 1.
    With rolloff_exponent = 2 this is the quadratic roll-off family.
    """
    gradient: float
    rolloff_scale: float
    rolloff_order: float
    rolloff_exponent: float = 2.0

    variant = "anharmonic"

    def __post_init__(self):
        values = (self.gradient, self.rolloff_scale, self.rolloff_order, self.rolloff_exponent)
        if not all(math.isfinite(v) for v in values):
            raise InvalidArgumentError("anharmonic field parameters must be finite")
        if self.rolloff_scale <= 0:
            raise InvalidArgumentError(f"rolloff_scale must be > 0, got {self.rolloff_scale}")
        if self.rolloff_order < 0:
            raise InvalidArgumentError(f"rolloff_order must be >= 0, got {self.rolloff_order}")
        if self.rolloff_exponent < 2:
            raise InvalidArgumentError(
                f"rolloff_exponent must be >= 2 to keep the origin linear, got {self.rolloff_exponent}"
            )

    def packed(self) -> np.ndarray:
        return pack_model(
            KIND_ANHARMONIC, self.gradient, self.rolloff_scale,
            self.rolloff_order, self.rolloff_exponent,
        )

    @property
    def validity_extent(self) -> float:
        return 10.0 * self.rolloff_scale

    @property
    def has_finite_depth(self) -> bool:
        return self.rolloff_order * self.rolloff_exponent > 1.0

    def depth_location(self) -> float:
        """Analytic position of the pseudopotential maximum (meters)."""
        pn = self.rolloff_order * self.rolloff_exponent
        if pn <= 1.0:
            return math.inf
        return self.rolloff_scale * (1.0 / (pn - 1.0)) ** (1.0 / self.rolloff_exponent)

    def origin_gradients(self) -> np.ndarray:
        return np.array([self.gradient, 0.0, 0.0])

    def to_params(self) -> dict:
        return {
            "variant": self.variant,
            "gradient_V_per_m2": self.gradient,
            "rolloff_scale_um": self.rolloff_scale * 1e6,
            "rolloff_order": self.rolloff_order,
            "rolloff_exponent": self.rolloff_exponent,
        }
