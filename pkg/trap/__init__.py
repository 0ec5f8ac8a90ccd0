"""Trap field models package."""

import math

from core.error_handler import ConfigError
from .base import FieldModel, as_position
from .specs import DriveSpec, ParticleSpec
from .harmonic import HarmonicRF1D
from .anharmonic import Anharmonic1D
from .separable import Separable3D
from .pseudopotential import (
    PseudopotentialSample,
    instantaneous_field,
    pseudopotential,
    trap_depth,
)
from .calibration import (
    CalibrationReport,
    CalibrationTargets,
    calibrate_anharmonic,
    calibrated_model,
    default_calibrated_model,
    gradient_for_secular_frequency,
)

__all__ = [
    "FieldModel", "DriveSpec", "ParticleSpec",
    "HarmonicRF1D", "Anharmonic1D", "Separable3D",
    "PseudopotentialSample", "instantaneous_field", "pseudopotential", "trap_depth",
    "CalibrationReport", "CalibrationTargets", "calibrate_anharmonic", "calibrated_model",
    "default_calibrated_model",
    "gradient_for_secular_frequency", "create_field_model", "field_model_from_params",
    "as_position",
]


def create_field_model(variant: str, **params) -> FieldModel:
    """Create a field model from its variant name and SI parameters."""
    model_classes = {
        "harmonic": HarmonicRF1D,
        "anharmonic": Anharmonic1D,
        "separable3d": Separable3D,
    }
    model_class = model_classes.get(variant)
    if model_class is None:
        raise ConfigError(
            f"Unknown variant: {variant}. Choose from: {list(model_classes.keys())}",
            key="variant", accepted=", ".join(model_classes),
        )
    return model_class(**params)


def field_model_from_params(params: dict) -> FieldModel:
    """Inverse of FieldModel.to_params (configuration units)."""
    variant = params["variant"]
    if variant == "separable3d":
        radial = dict(params)
        radial["variant"] = params.get("radial_variant", "anharmonic")
        omega_z = 2 * math.pi * float(params["axial_freq_MHz"]) * 1e6
        return Separable3D(field_model_from_params(radial), omega_z)
    if variant == "harmonic":
        return HarmonicRF1D(float(params["gradient_V_per_m2"]))
    if variant == "anharmonic":
        return Anharmonic1D(
            float(params["gradient_V_per_m2"]),
            float(params["rolloff_scale_um"]) * 1e-6,
            float(params["rolloff_order"]),
            float(params.get("rolloff_exponent", 2.0)),
        )
    return create_field_model(variant)
