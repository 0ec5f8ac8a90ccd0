"""Monte Carlo realization of the load / wait / extract / detect cycle."""

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from core.error_handler import InvalidArgumentError
from core.executor import ParallelExecutor
from .detection import DetectionChain, chain_efficiency
from .events import FWHM_PER_SIGMA, EventStream

CHUNK_CYCLES = 65536


@dataclass(frozen=True)
class CycleProtocol:
    """
    Timing of one experimental cycle.

    TDC timestamps are counted in ns from the extraction trigger; the readout
    window (offset_ns, width_ns) is where electron pulses are recorded.
    background_rate is the mean number of dark counts per cycle inside that window.
    """
    t_load: float = 10e-6
    t_wait: float = 0.0
    readout_offset_ns: float = 100.0
    readout_width_ns: float = 50.0
    background_rate: float = 1e-4
    peak_fwhm_ns: float = 2.0
    deadtime_ns: float = 60.0

    def __post_init__(self):
        for name in ("t_load", "t_wait", "readout_offset_ns", "background_rate", "deadtime_ns"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise InvalidArgumentError(f"{name} must be >= 0, got {value}")
        if not self.readout_width_ns > 0:
            raise InvalidArgumentError(f"readout_width_ns must be > 0, got {self.readout_width_ns}")
        if not self.peak_fwhm_ns > 0:
            raise InvalidArgumentError(f"peak_fwhm_ns must be > 0, got {self.peak_fwhm_ns}")

    @property
    def window(self) -> tuple[float, float]:
        return (self.readout_offset_ns, self.readout_width_ns)

    @property
    def window_center_ns(self) -> float:
        return self.readout_offset_ns + self.readout_width_ns / 2.0


def _chunk_generator(seed: int, chunk: int) -> np.random.Generator:
    # Each chunk owns a disjoint 2**128-draw block of the Philox stream keyed by seed.
    return np.random.Generator(np.random.Philox(key=seed).jumped(chunk))


def _simulate_chunk(args):
    protocol, true_mean, efficiency, seed, chunk, count = args
    rng = _chunk_generator(seed, chunk)
    trapped = rng.poisson(true_mean, count)
    detected = rng.binomial(trapped, efficiency)
    signal_idx = np.repeat(np.arange(count), detected)
    signal_t = rng.normal(protocol.window_center_ns, protocol.peak_fwhm_ns / FWHM_PER_SIGMA,
                          signal_idx.size)

    dark = rng.poisson(protocol.background_rate, count)
    dark_idx = np.repeat(np.arange(count), dark)
    dark_t = protocol.readout_offset_ns + protocol.readout_width_ns * rng.random(dark_idx.size)

    index = np.concatenate([signal_idx, dark_idx]) + chunk * CHUNK_CYCLES
    stamps = np.maximum(np.concatenate([signal_t, dark_t]), 0.0)
    order = np.lexsort((stamps, index))
    return index[order], stamps[order]


def simulate_cycles(protocol: CycleProtocol, true_mean_electrons: float,
                    chain: DetectionChain = DetectionChain(), cycles: int = 100000,
                    seed: int = 0, workers: int | None = None,
                    progress_callback: Callable[[str], None] | None = None) -> EventStream:
    """
    Raw (pre-deadtime) TDC events of `cycles` experimental cycles.

    Per cycle: trapped electrons ~ Poisson(true_mean), each detected with the
    chain efficiency at a Gaussian time around the readout window centre, plus
    Poisson dark counts uniform in the window. Output depends only on the seed,
    never on the worker count.
    """
    if cycles < 1:
        raise InvalidArgumentError(f"cycles must be >= 1, got {cycles}")
    if not (math.isfinite(true_mean_electrons) and true_mean_electrons >= 0):
        raise InvalidArgumentError(f"true_mean_electrons must be >= 0, got {true_mean_electrons}")
    if not 0 <= seed < 2 ** 64:
        raise InvalidArgumentError(f"seed must be a 64-bit unsigned integer, got {seed}")

    efficiency = chain_efficiency(chain)
    tasks = [
        (protocol, true_mean_electrons, efficiency, seed, chunk,
         min(CHUNK_CYCLES, cycles - chunk * CHUNK_CYCLES))
        for chunk in range(math.ceil(cycles / CHUNK_CYCLES))
    ]
    parts = ParallelExecutor(workers, progress_callback=progress_callback).map(
        _simulate_chunk, tasks, label="蒙特卡洛周期",
    )
    index = np.concatenate([p[0] for p in parts])
    stamps = np.concatenate([p[1] for p in parts])
    return EventStream(index, stamps, cycles, protocol.deadtime_ns)
