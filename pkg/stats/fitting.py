"""Least-squares fits of loading and storage curves."""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import OptimizeWarning, curve_fit

from config import Config
from core.error_handler import FitError, InvalidArgumentError

MIN_LOADING_POINTS = 4
MIN_STORAGE_POINTS = 5
LONG_TAU_FLOOR = 10.0  # s
SIGNIFICANCE = 3.0


@dataclass
class DecayFit:
    """Fitted curve parameters with one-sigma uncertainties."""
    kind: str
    params: dict
    sigmas: dict
    residual_norm: float
    converged: bool = True
    identifiable: bool = True
    decaying_fraction: float | None = None
    point_count: int = 0
    extras: dict = field(default_factory=dict)

    def evaluate(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=np.float64)
        p = self.params
        if self.kind == "loading":
            return saturating(t, p["P_max"], p["tau"])
        if self.kind == "storage":
            return exp_plus_constant(t, p["A"], p["tau"], p["C"])
        return two_exponential(t, p["A"], p["tau"], p["C"], p["tau2"])


def saturating(t, p_max, tau):
    return p_max * -np.expm1(-t / tau)


def exp_plus_constant(t, a, tau, c):
    return a * np.exp(-t / tau) + c


def two_exponential(t, a, tau, c, tau2):
    return a * np.exp(-t / tau) + c * np.exp(-t / tau2)


def _as_points(points, minimum: int, sigma=None):
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] < 2:
        raise InvalidArgumentError("points must be a sequence of (t, p_detect) pairs")
    t, p = arr[:, 0], arr[:, 1]
    if len(t) < minimum:
        raise InvalidArgumentError(f"need at least {minimum} points, got {len(t)}")
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(p))):
        raise InvalidArgumentError("points must be finite")
    if np.any(t < 0):
        raise InvalidArgumentError("times must be >= 0")
    if sigma is None and arr.shape[1] >= 3:
        sigma = arr[:, 2]
    if sigma is not None:
        sigma = np.asarray(sigma, dtype=np.float64)
        if sigma.shape != t.shape or np.any(sigma <= 0):
            raise InvalidArgumentError("sigma must be one positive value per point")
    order = np.argsort(t, kind="stable")
    return t[order], p[order], None if sigma is None else sigma[order]


def _run_fit(model, t, p, p0, bounds, sigma, names):
    """curve_fit with bounded evaluations; returns (popt, perr, residual_norm)."""
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", OptimizeWarning)
            popt, pcov = curve_fit(
                model, t, p, p0=p0, sigma=sigma, absolute_sigma=sigma is not None,
                bounds=bounds, max_nfev=Config.FIT_MAX_EVALS,
            )
    except RuntimeError as exc:
        raise FitError(f"fit did not converge: {exc}", best=dict(zip(names, p0)),
                       converged=False) from exc
    diag = np.diag(pcov)
    perr = np.where(np.isfinite(diag) & (diag >= 0), np.sqrt(np.abs(diag)), np.inf)
    residual = float(np.linalg.norm(p - model(t, *popt)))
    return popt, perr, residual


def fit_loading(points, sigma=None) -> DecayFit:
    """
    Fit P(t) = P_max (1 - exp(-t / tau)) to loading data.

    Args:
        points: (t, p_detect) pairs, optionally with a third sigma column.
        sigma: One-sigma errors on p_detect; unweighted when omitted.

    Raises:
        FitError: No signal in the data or no convergence.
    """
    t, p, sigma = _as_points(points, MIN_LOADING_POINTS, sigma)
    if not np.any(p > 0):
        raise FitError("loading data contain no detections", best={}, converged=False)
    if np.ptp(t) == 0:
        raise FitError("loading data need more than one distinct time", best={}, converged=False)

    p_max0 = float(np.max(p))
    reached = np.nonzero(p >= (1.0 - math.exp(-1.0)) * p_max0)[0]
    tau0 = float(t[reached[0]]) if reached.size and t[reached[0]] > 0 else float(np.median(t[t > 0]))
    names = ("P_max", "tau")
    popt, perr, residual = _run_fit(
        saturating, t, p, [p_max0, tau0], ([0.0, 1e-300], [np.inf, np.inf]), sigma, names,
    )
    identifiable = bool(np.all(np.isfinite(perr)) and popt[0] > SIGNIFICANCE * perr[0])
    return DecayFit(
        kind="loading",
        params=dict(zip(names, map(float, popt))),
        sigmas=dict(zip(names, map(float, perr))),
        residual_norm=residual,
        identifiable=identifiable,
        point_count=len(t),
    )


def fit_storage(points, sigma=None, two_component: bool = False) -> DecayFit:
    """
    Fit a decaying population plus a long-lived one to storage data.

    The default model is A exp(-t / tau) + C. With two_component the long-lived
    part decays too, C exp(-t / tau2), with tau2 >= 10 s.

    Constant data leave tau unidentifiable; the fit is returned flagged rather
    than raised.
    """
    t, p, sigma = _as_points(points, MIN_STORAGE_POINTS, sigma)
    if not np.any(p > 0):
        raise FitError("storage data contain no detections", best={}, converged=False)

    tail = p[t >= t[0] + 0.8 * np.ptp(t)]
    c0 = max(float(np.mean(tail)), 0.0)
    a0 = max(float(p[0]) - c0, 1e-6 * max(float(np.max(p)), 1e-300))
    level = c0 + a0 * math.exp(-1.0)
    crossed = np.nonzero(p <= level)[0]
    tau0 = float(t[crossed[0]] - t[0]) if crossed.size and t[crossed[0]] > t[0] else max(float(np.ptp(t)) / 3.0, 1e-12)

    if two_component:
        names = ("A", "tau", "C", "tau2")
        model = two_exponential
        p0 = [a0, tau0, c0, 10.0 * LONG_TAU_FLOOR]
        bounds = ([0.0, 1e-300, 0.0, LONG_TAU_FLOOR], [np.inf, np.inf, np.inf, np.inf])
        kind = "storage_two_component"
    else:
        names = ("A", "tau", "C")
        model = exp_plus_constant
        p0 = [a0, tau0, c0]
        bounds = ([0.0, 1e-300, 0.0], [np.inf, np.inf, np.inf])
        kind = "storage"

    popt, perr, residual = _run_fit(model, t, p, p0, bounds, sigma, names)
    params = dict(zip(names, map(float, popt)))
    sigmas = dict(zip(names, map(float, perr)))
    # The decay must show up inside the sampled span, above the residual scatter.
    drop = params["A"] * -math.expm1(-float(np.ptp(t)) / params["tau"])
    scatter = residual / math.sqrt(len(t))
    identifiable = bool(
        math.isfinite(sigmas["tau"]) and math.isfinite(sigmas["A"])
        and drop > max(SIGNIFICANCE * scatter, 1e-6 * float(np.max(np.abs(p))))
        and params["A"] > SIGNIFICANCE * sigmas["A"]
    )
    total = params["A"] + params["C"]
    return DecayFit(
        kind=kind,
        params=params,
        sigmas=sigmas,
        residual_norm=residual,
        identifiable=identifiable,
        decaying_fraction=params["A"] / total if total > 0 else math.nan,
        point_count=len(t),
    )
