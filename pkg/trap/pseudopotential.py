"""Instantaneous fields, the pseudopotential and the trap depth."""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from core.error_handler import InvalidArgumentError, UnboundedDepthError
from .base import FieldModel, as_position
from .specs import DriveSpec, ParticleSpec

DEPTH_SAMPLES = 4001
DEPTH_RTOL = 1e-6


@dataclass(frozen=True)
class PseudopotentialSample:
    """Pseudopotential at one position and its deviation from the harmonic fit."""
    position: np.ndarray
    u_p: float
    delta: float


def instantaneous_field(model: FieldModel, drive: DriveSpec, position, time: float,
                        phase: float) -> np.ndarray:
    """E(position) * cos(omega * time + phase), V/m."""
    return model.instantaneous(drive, position, time, phase)


def _prefactor(drive: DriveSpec, particle: ParticleSpec) -> float:
    """q^2 s^2 / (4 m omega^2), so that u_p = prefactor * |E|^2."""
    if drive.omega == 0:
        raise InvalidArgumentError("pseudopotential is singular at omega = 0")
    scale = drive.amplitude_scale
    return (particle.charge * scale) ** 2 / (4.0 * particle.mass * drive.omega ** 2)


def pseudopotential(model: FieldModel, drive: DriveSpec, particle: ParticleSpec,
                    position) -> PseudopotentialSample:
    """Time-averaged confining energy U_p = q^2 |E|^2 / (4 m omega^2).

    delta compares against the harmonic potential sharing the origin curvature:
    delta = (U_p - U_h) / U_h, and 0 wherever U_h vanishes.
    """
    pos = as_position(position)
    prefactor = _prefactor(drive, particle)
    field = model.envelope(pos)
    u_p = prefactor * float(np.dot(field, field))
    linear = model.origin_gradients() * pos
    u_h = prefactor * float(np.dot(linear, linear))
    delta = (u_p - u_h) / u_h if u_h > 0 else 0.0
    return PseudopotentialSample(position=pos, u_p=u_p, delta=delta)


def pseudopotential_profile(model: FieldModel, drive: DriveSpec, particle: ParticleSpec,
                            xs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """u_p and delta sampled along the x axis."""
    samples = [pseudopotential(model, drive, particle, float(x)) for x in xs]
    return (np.array([s.u_p for s in samples]), np.array([s.delta for s in samples]))


def trap_depth(model: FieldModel, drive: DriveSpec, particle: ParticleSpec,
               search_extent: float) -> tuple[float, float]:
    """Maximum of u_p along x within [0, search_extent] and its location.

    Dense sampling locates the bracket, bounded scalar minimization refines it.
    """
    if not (math.isfinite(search_extent) and search_extent > 0):
        raise InvalidArgumentError(f"search_extent must be finite and > 0, got {search_extent}")
    extent = min(search_extent, model.validity_extent)
    xs = np.linspace(0.0, extent, DEPTH_SAMPLES)
    u, _ = pseudopotential_profile(model, drive, particle, xs)
    i = int(np.argmax(u))
    if i >= len(xs) - 1:
        raise UnboundedDepthError(
            f"pseudopotential is unbounded within extent {extent:.6g} m "
            f"(still rising at the edge)"
        )
    if i == 0:
        raise UnboundedDepthError("pseudopotential has no interior maximum")

    lo, hi = xs[i - 1], xs[i + 1]
    result = minimize_scalar(
        lambda x: -pseudopotential(model, drive, particle, x).u_p,
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": DEPTH_RTOL * xs[i]},
    )
    location = float(result.x)
    depth = pseudopotential(model, drive, particle, location).u_p
    if depth < u[i]:
        return float(u[i]), float(xs[i])
    return depth, location
