"""Detection efficiency chain and Poisson inversion of detection probabilities."""

import math
from dataclasses import dataclass

import numpy as np

from core.error_handler import InvalidArgumentError, SaturatedDetectorError


@dataclass(frozen=True)
class DetectionChain:
    """Probabilities that an extracted electron survives each detection stage."""
    extraction_efficiency: float = 1.0
    mesh_open_area: float = 0.5
    mcp_open_area: float = 0.6
    voltage_factor: float = 0.4

    def __post_init__(self):
        for name in ("extraction_efficiency", "mesh_open_area", "mcp_open_area", "voltage_factor"):
            value = getattr(self, name)
            if not (math.isfinite(value) and 0.0 <= value <= 1.0):
                raise InvalidArgumentError(f"{name} must lie in [0, 1], got {value}")


@dataclass(frozen=True)
class PoissonEstimate:
    """Mean electron number behind a measured probability of at least one detection."""
    p_detect: float
    lam: float
    mean_electrons: float
    efficiency: float
    p_sigma: float | None = None
    lambda_sigma: float | None = None
    mean_sigma: float | None = None

    def as_dict(self) -> dict:
        return {"p_detect": self.p_detect, "lambda": self.lam,
                "mean_electrons": self.mean_electrons, "efficiency": self.efficiency}

    def sigmas(self) -> dict:
        if self.p_sigma is None:
            return {}
        return {"p_detect": self.p_sigma, "lambda": self.lambda_sigma,
                "mean_electrons": self.mean_sigma}


def chain_efficiency(chain: DetectionChain) -> float:
    """Product of the four stage probabilities."""
    return (chain.extraction_efficiency * chain.mesh_open_area
            * chain.mcp_open_area * chain.voltage_factor)


def estimate_mean_electrons(p_detect: float, chain: DetectionChain = DetectionChain(),
                            cycles: int | None = None) -> PoissonEstimate:
    """
    Invert P(no detection) = exp(-lambda) and divide by the chain efficiency.

    Args:
        p_detect: Fraction of cycles with at least one detection, in [0, 1).
        chain: Detection chain.
        cycles: Number of cycles behind p_detect; adds binomial standard errors.

    Raises:
        SaturatedDetectorError: p_detect == 1.
    """
    if not (math.isfinite(p_detect) and 0.0 <= p_detect <= 1.0):
        raise InvalidArgumentError(f"p_detect must lie in [0, 1), got {p_detect}")
    if p_detect == 1.0:
        raise SaturatedDetectorError("p_detect = 1: every cycle has a detection, lambda diverges")
    efficiency = chain_efficiency(chain)
    if efficiency <= 0:
        raise InvalidArgumentError("detection chain efficiency is 0; the mean is unobservable")

    lam = -math.log1p(-p_detect)
    estimate = PoissonEstimate(p_detect=p_detect, lam=lam, mean_electrons=lam / efficiency,
                               efficiency=efficiency)
    if cycles is None:
        return estimate
    if cycles < 1:
        raise InvalidArgumentError(f"cycles must be >= 1, got {cycles}")
    p_sigma = math.sqrt(p_detect * (1.0 - p_detect) / cycles)
    lambda_sigma = p_sigma / (1.0 - p_detect)
    return PoissonEstimate(
        p_detect=p_detect, lam=lam, mean_electrons=lam / efficiency, efficiency=efficiency,
        p_sigma=p_sigma, lambda_sigma=lambda_sigma, mean_sigma=lambda_sigma / efficiency,
    )


def loading_electron_numbers(fit, t_load, chain: DetectionChain = DetectionChain(),
                             p_max: float = 1.0) -> np.ndarray:
    """
    Mean electron numbers implied by a saturating loading curve at the given load times.

    `fit` is a loading DecayFit or a bare loading time constant in seconds; a
    DecayFit supplies its own P_max.
    """
    if hasattr(fit, "params"):
        tau, p_max = fit.params["tau"], fit.params["P_max"]
    else:
        tau = float(fit)
    if not tau > 0:
        raise InvalidArgumentError(f"tau must be > 0, got {tau}")
    t_load = np.atleast_1d(np.asarray(t_load, dtype=np.float64))
    p = p_max * -np.expm1(-t_load / tau)
    return np.array([estimate_mean_electrons(float(pi), chain).mean_electrons for pi in p])
