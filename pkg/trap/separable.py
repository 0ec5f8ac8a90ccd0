"""Separable 3D trap: radial RF quadrupole plus static axial confinement."""

import math
from dataclasses import dataclass

import numpy as np

from core.error_handler import InvalidArgumentError
from .base import FieldModel
from .harmonic import HarmonicRF1D
from .anharmonic import Anharmonic1D
from .kernels import P_IS_3D, P_OMEGA_Z2


@dataclass(frozen=True, repr=False)
class Separable3D(FieldModel):
    """Radial 1D model applied along x and, with opposite sign, along y.

    The static part confines along z at omega_z and anti-confines each
    transverse axis with curvature -omega_z**2 / 2, so its Laplacian vanishes.
    """
    radial: HarmonicRF1D | Anharmonic1D
    omega_z: float

    variant = "separable3d"
    dimension = 3

    def __post_init__(self):
        if not isinstance(self.radial, (HarmonicRF1D, Anharmonic1D)):
            raise InvalidArgumentError("radial model must be a 1D field model")
        if not math.isfinite(self.omega_z) or self.omega_z < 0:
            raise InvalidArgumentError(f"omega_z must be finite and >= 0, got {self.omega_z}")

    def packed(self) -> np.ndarray:
        packed = self.radial.packed()
        packed[P_IS_3D] = 1.0
        packed[P_OMEGA_Z2] = self.omega_z * self.omega_z
        return packed

    @property
    def validity_extent(self) -> float:
        return self.radial.validity_extent

    def origin_gradients(self) -> np.ndarray:
        g = self.radial.origin_gradients()[0]
        return np.array([g, -g, 0.0])

    def axial_omega(self) -> float:
        return self.omega_z

    def static_curvatures(self) -> np.ndarray:
        """Static acceleration per unit displacement along x, y, z (1/s^2); negative confines."""
        wz2 = self.omega_z ** 2
        return np.array([0.5 * wz2, 0.5 * wz2, -wz2])

    def to_params(self) -> dict:
        params = self.radial.to_params()
        params["radial_variant"] = params.pop("variant")
        params["variant"] = self.variant
        params["axial_freq_MHz"] = self.omega_z / (2 * math.pi) / 1e6
        return params
