"""Mathieu parameters, Floquet stability classification and secular-frequency estimates.

For a field E = E' x cos(omega t + phi) and a static acceleration k x, the
substitution tau = (omega t + phi) / 2 gives u'' + (a - 2 q cos 2 tau) u = 0 with

    q = 2 |charge| s E' / (m omega**2),   a = -4 k / omega**2.

A confining static curvature (k < 0) gives a > 0.
"""

import math
from dataclasses import dataclass

import numpy as np
import pandas as pd

from core.error_handler import InvalidArgumentError
from dynamics.kernels import mathieu_monodromy
from trap.base import FieldModel
from trap.specs import DriveSpec, ParticleSpec

MONODROMY_STEPS = 512
STABILITY_TOLERANCE = 1e-9
AXES = ("x", "y", "z")


@dataclass(frozen=True)
class MathieuParams:
    a: float
    q: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.q)):
            raise InvalidArgumentError(f"Mathieu parameters must be finite, got a={self.a}, q={self.q}")


@dataclass(frozen=True)
class StabilityVerdict:
    """Floquet classification of one (a, q) point."""
    stable: bool
    multiplier_magnitude: float
    beta: float
    secular_frequency: float
    determinant: float
    saturated: bool = False


def mathieu_params(model: FieldModel, drive: DriveSpec,
                   particle: ParticleSpec) -> dict[str, MathieuParams]:
    """
    Linearize the model at the origin.

    Returns:
        Parameters per axis: {"x"} for 1D models, {"x", "y", "z"} for 3D models.
    """
    gradients = np.asarray(model.origin_gradients(), dtype=np.float64)
    curvatures = np.asarray(model.static_curvatures(), dtype=np.float64)
    if not (np.all(np.isfinite(gradients)) and np.all(np.isfinite(curvatures))):
        raise InvalidArgumentError(f"{model!r} cannot be linearized at the origin")

    omega2 = drive.omega ** 2
    q_scale = 2.0 * abs(particle.charge) * drive.amplitude_scale / (particle.mass * omega2)
    axes = AXES[:3] if model.dimension == 3 else AXES[:1]
    return {
        axis: MathieuParams(a=-4.0 * curvatures[i] / omega2 + 0.0,
                            q=abs(q_scale * gradients[i]))
        for i, axis in enumerate(axes)
    }


def classify_stability(params: MathieuParams, drive: DriveSpec | None = None,
                       steps: int = MONODROMY_STEPS) -> StabilityVerdict:
    """
    Classify a point by the eigenvalues of its one-period monodromy matrix.

    Args:
        params: Mathieu (a, q).
        drive: Drive used to convert beta into a secular frequency.
        steps: Integration steps per drive period.

    Returns:
        StabilityVerdict; beta and secular_frequency are nan when unstable.
    """
    drive = drive or DriveSpec()
    monodromy = mathieu_monodromy(params.a, params.q, steps)

    if not np.all(np.isfinite(monodromy)):
        return StabilityVerdict(stable=False, multiplier_magnitude=math.inf, beta=math.nan,
                                secular_frequency=math.nan, determinant=math.nan, saturated=True)

    determinant = float(np.linalg.det(monodromy))
    multiplier = float(np.max(np.abs(np.linalg.eigvals(monodromy))))
    stable = multiplier <= 1.0 + STABILITY_TOLERANCE
    if not stable:
        return StabilityVerdict(stable=False, multiplier_magnitude=multiplier, beta=math.nan,
                                secular_frequency=math.nan, determinant=determinant)

    half_trace = float(np.clip(np.trace(monodromy) / 2.0, -1.0, 1.0))
    beta = math.acos(half_trace) / math.pi
    return StabilityVerdict(
        stable=True,
        multiplier_magnitude=multiplier,
        beta=beta,
        secular_frequency=beta * drive.omega / 2.0,
        determinant=determinant,
    )


def linear_secular_frequency(model: FieldModel, drive: DriveSpec, particle: ParticleSpec,
                             axis: str = "x") -> float | None:
    """Floquet secular frequency (Hz) of small oscillations along one axis, None when unstable."""
    omega = classify_stability(mathieu_params(model, drive, particle)[axis], drive).secular_frequency
    return omega / (2.0 * math.pi) if math.isfinite(omega) else None


def secular_estimate(params: MathieuParams, drive: DriveSpec, order: str = "lowest") -> float:
    """
    Closed-form secular angular frequency beta * omega / 2.

    "lowest" is beta**2 = a + q**2 / 2, accurate only for q << 1 (about 6% low
    at q = 0.53). "series" is the small-q continued expansion through q**6,
    valid for |a| < 1 in the first stability region.
    """
    a, q = params.a, params.q
    if order == "lowest":
        beta2 = a + q * q / 2.0
    elif order == "series":
        if a >= 1.0 or 2.0 * (a - 1.0) ** 2 <= q * q:
            raise InvalidArgumentError(f"series estimate is undefined at a={a}, q={q}")
        q2 = q * q
        beta2 = (a - (a - 1.0) * q2 / (2.0 * (a - 1.0) ** 2 - q2)
                 - (5.0 * a + 7.0) * q2 * q2 / (32.0 * (a - 1.0) ** 3 * (a - 4.0))
                 - (9.0 * a * a + 58.0 * a + 29.0) * q2 ** 3
                 / (64.0 * (a - 1.0) ** 5 * (a - 4.0) * (a - 9.0)))
    else:
        raise InvalidArgumentError(f"Unknown estimate order: {order}. Choose from: ['lowest', 'series']")

    if beta2 < 0:
        raise InvalidArgumentError(
            f"no real secular frequency at this order: a + q^2/2 = {beta2:.6g} < 0"
        )
    return drive.omega / 2.0 * math.sqrt(beta2)


def stability_diagram(a_values, q_values, drive: DriveSpec | None = None) -> pd.DataFrame:
    """Grid scan with columns (a, q, stable, beta); rows ordered by a, then q."""
    rows = []
    for a in np.asarray(a_values, dtype=np.float64):
        for q in np.asarray(q_values, dtype=np.float64):
            verdict = classify_stability(MathieuParams(float(a), float(q)), drive)
            rows.append((float(a), float(q), verdict.stable, verdict.beta))
    return pd.DataFrame(rows, columns=["a", "q", "stable", "beta"])


def stability_transitions(diagram: pd.DataFrame) -> list[float]:
    """q values of the first unstable point after each stable run, per a row."""
    edges = []
    for _, row in diagram.groupby("a", sort=True):
        stable = row["stable"].to_numpy()
        q = row["q"].to_numpy()
        for i in range(1, len(stable)):
            if stable[i - 1] and not stable[i]:
                edges.append(float(q[i]))
    return edges
