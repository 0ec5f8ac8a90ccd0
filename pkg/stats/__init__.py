"""Detection statistics: efficiency chain, TDC events, curve fits, cycle Monte Carlo."""

from .detection import (
    DetectionChain,
    PoissonEstimate,
    chain_efficiency,
    estimate_mean_electrons,
    loading_electron_numbers,
)
from .events import (
    EventStream,
    Histogram,
    ReadoutPeak,
    apply_deadtime,
    build_histogram,
    detection_probability,
    fit_readout_peak,
    read_events,
    window_sum,
    write_events,
)
from .fitting import DecayFit, fit_loading, fit_storage
from .cycles import CycleProtocol, simulate_cycles

__all__ = [
    "DetectionChain", "PoissonEstimate", "chain_efficiency", "estimate_mean_electrons",
    "loading_electron_numbers",
    "EventStream", "Histogram", "ReadoutPeak", "apply_deadtime", "build_histogram",
    "detection_probability", "fit_readout_peak", "read_events", "window_sum", "write_events",
    "DecayFit", "fit_loading", "fit_storage",
    "CycleProtocol", "simulate_cycles",
]
