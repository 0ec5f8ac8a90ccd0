"""Calibration of the anharmonic surrogate to measured trap characteristics."""

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import constants
from scipy.optimize import brentq

from core.error_handler import CalibrationError, InvalidArgumentError
from .anharmonic import Anharmonic1D
from .harmonic import HarmonicRF1D
from .pseudopotential import pseudopotential, pseudopotential_profile, trap_depth
from .specs import DriveSpec, ParticleSpec

DEVIATION_SAMPLES = 2001
ORDER_GRID_POINTS = 400
MAX_ROLLOFF_ORDER = 64.0


@dataclass(frozen=True)
class CalibrationTargets:
    """Targets for the surrogate: radial secular frequency, depth, flatness."""
    secular_omega: float = 2 * math.pi * 300e6
    depth: float = 1.3 * constants.e
    max_deviation: float = 0.02
    deviation_extent: float = 200e-6
    drive: DriveSpec = DriveSpec()
    particle: ParticleSpec = ParticleSpec()
    frequency_tolerance: float = 1e-3
    depth_tolerance: float = 0.01
    deviation_margin: float = 0.95
    rolloff_exponents: tuple[float, ...] = (2.0, 4.0, 6.0, 8.0)


@dataclass
class CalibrationReport:
    """Targets, fitted parameters and per-target residuals."""
    targets: CalibrationTargets
    parameters: dict
    achieved: dict
    residuals: dict
    met: dict
    exponents_tried: list = field(default_factory=list)

    @property
    def all_met(self) -> bool:
        return all(self.met.values())


def gradient_for_secular_frequency(secular_omega: float, drive: DriveSpec,
                                   particle: ParticleSpec) -> float:
    """Invert omega_r = |q| s E' / (sqrt(2) m omega) for E'."""
    if drive.amplitude_scale == 0:
        raise InvalidArgumentError("amplitude_scale 0 cannot produce a secular frequency")
    return (math.sqrt(2.0) * particle.mass * drive.omega * secular_omega
            / (abs(particle.charge) * drive.amplitude_scale))


def secular_frequency_of_gradient(gradient: float, drive: DriveSpec,
                                  particle: ParticleSpec) -> float:
    """Lowest-order radial secular angular frequency for a linear gradient."""
    return (abs(particle.charge) * drive.amplitude_scale * abs(gradient)
            / (math.sqrt(2.0) * particle.mass * drive.omega))


def _rolloff_scale(depth: float, curvature: float, order: float, exponent: float) -> float:
    """Rolloff scale placing the pseudopotential maximum at the target depth."""
    s_star = 1.0 / (order * exponent - 1.0)
    shape = s_star ** (2.0 / exponent) * (1.0 + s_star) ** (-2.0 * order)
    return math.sqrt(depth / (curvature * shape))


def _edge_deviation(extent: float, depth: float, curvature: float, order: float,
                    exponent: float) -> float:
    scale = _rolloff_scale(depth, curvature, order, exponent)
    return 1.0 - (1.0 + (extent / scale) ** exponent) ** (-2.0 * order)


def _solve_order(targets: CalibrationTargets, curvature: float, exponent: float):
    """Rolloff order whose edge deviation hits margin * bound, or None."""
    goal = targets.deviation_margin * targets.max_deviation
    orders = np.geomspace(1.05 / exponent, MAX_ROLLOFF_ORDER, ORDER_GRID_POINTS)
    devs = np.array([
        _edge_deviation(targets.deviation_extent, targets.depth, curvature, p, exponent)
        for p in orders
    ])
    below = np.nonzero(devs <= goal)[0]
    if below.size == 0:
        return None, float(devs.min())
    i = int(below[0])
    if i == 0:
        return float(orders[0]), float(devs[0])
    order = brentq(
        lambda p: _edge_deviation(targets.deviation_extent, targets.depth, curvature, p, exponent) - goal,
        orders[i - 1], orders[i], xtol=1e-12, rtol=1e-12,
    )
    return float(order), goal


def evaluate_calibration(model: Anharmonic1D, targets: CalibrationTargets) -> CalibrationReport:
    """Re-evaluate all three targets on a model."""
    drive, particle = targets.drive, targets.particle
    omega = secular_frequency_of_gradient(model.gradient, drive, particle)
    depth, location = trap_depth(model, drive, particle, model.validity_extent)
    xs = np.linspace(0.0, targets.deviation_extent, DEVIATION_SAMPLES)[1:]
    _, deltas = pseudopotential_profile(model, drive, particle, xs)
    max_dev = float(np.max(np.abs(deltas)))

    residuals = {
        "secular_frequency": (omega - targets.secular_omega) / targets.secular_omega,
        "depth": (depth - targets.depth) / targets.depth,
        "deviation": max_dev - targets.max_deviation,
    }
    met = {
        "secular_frequency": abs(residuals["secular_frequency"]) <= targets.frequency_tolerance,
        "depth": abs(residuals["depth"]) <= targets.depth_tolerance,
        "deviation": max_dev <= targets.max_deviation,
    }
    return CalibrationReport(
        targets=targets,
        parameters=model.to_params(),
        achieved={
            "secular_omega": omega,
            "depth": depth,
            "depth_location": location,
            "max_deviation": max_dev,
        },
        residuals=residuals,
        met=met,
    )


def calibrate_anharmonic(targets: CalibrationTargets) -> tuple[Anharmonic1D, CalibrationReport]:
    """Fit (gradient, rolloff_scale, rolloff_order) to the targets.

    The gradient follows from the secular frequency in closed form. For each
    rolloff exponent in turn, the rolloff scale follows from the depth and the
    order is solved so the edge deviation equals margin * bound; the first
    exponent whose re-evaluation meets every target wins.
    """
    drive, particle = targets.drive, targets.particle
    if not (targets.depth > 0 and math.isfinite(targets.depth)):
        raise CalibrationError(f"infeasible target set: depth must be > 0, got {targets.depth}")
    if not (targets.max_deviation > 0 and targets.deviation_extent > 0):
        raise CalibrationError("infeasible target set: deviation bound and extent must be > 0")

    gradient = gradient_for_secular_frequency(targets.secular_omega, drive, particle)
    probe = 1e-3
    curvature = pseudopotential(HarmonicRF1D(gradient), drive, particle, probe).u_p / probe ** 2
    harmonic_at_edge = curvature * targets.deviation_extent ** 2
    if targets.depth <= harmonic_at_edge:
        raise CalibrationError(
            f"infeasible target set: depth {targets.depth:.4g} J does not exceed the harmonic "
            f"pseudopotential {harmonic_at_edge:.4g} J at the deviation extent"
        )

    best: CalibrationReport | None = None
    tried = []
    for exponent in targets.rolloff_exponents:
        order, predicted = _solve_order(targets, curvature, exponent)
        tried.append({"rolloff_exponent": exponent, "rolloff_order": order,
                      "predicted_deviation": predicted})
        if order is None:
            continue
        scale = _rolloff_scale(targets.depth, curvature, order, exponent)
        model = Anharmonic1D(gradient, scale, order, exponent)
        report = evaluate_calibration(model, targets)
        report.exponents_tried = list(tried)
        if report.all_met:
            return model, report
        if best is None or abs(report.residuals["deviation"]) < abs(best.residuals["deviation"]):
            best = report

    raise CalibrationError(
        "calibration failed: no rolloff exponent meets all targets "
        f"(tried {[t['rolloff_exponent'] for t in tried]})",
        report=best,
    )


@lru_cache(maxsize=8)
def calibrated_model(targets: CalibrationTargets = CalibrationTargets()) -> Anharmonic1D:
    """Calibrated surrogate for the given (default: reference) targets."""
    model, _ = calibrate_anharmonic(targets)
    return model


def default_calibrated_model() -> Anharmonic1D:
    """Surrogate calibrated to the reference trap (300 MHz, 1.3 eV, 2% within 200 um)."""
    return calibrated_model(CalibrationTargets())
