"""Stability, spectral, sweep and tickle analysis package."""

from .mathieu import (
    MathieuParams,
    StabilityVerdict,
    classify_stability,
    linear_secular_frequency,
    mathieu_params,
    secular_estimate,
    stability_diagram,
    stability_transitions,
)
from .spectrum import (
    MotionSummary,
    detect_subharmonic_lock,
    extract_amplitude,
    extract_secular_frequency,
    summarize_motion,
)
from .sweep import (
    SweepMap,
    SweepSpec,
    amplitude_jumps,
    lock_band,
    loss_boundary,
    phase_slice,
    run_sweep,
    sweep_findings,
)
from .tickle import Dip, TickleSpectrum, default_ensemble, detect_dips, tickle_scan

__all__ = [
    "MathieuParams", "StabilityVerdict", "classify_stability", "linear_secular_frequency",
    "mathieu_params", "secular_estimate", "stability_diagram", "stability_transitions",
    "MotionSummary", "detect_subharmonic_lock", "extract_amplitude",
    "extract_secular_frequency", "summarize_motion",
    "SweepMap", "SweepSpec", "amplitude_jumps", "lock_band", "loss_boundary",
    "phase_slice", "run_sweep", "sweep_findings",
    "Dip", "TickleSpectrum", "default_ensemble", "detect_dips", "tickle_scan",
]
