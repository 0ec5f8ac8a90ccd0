"""TDC event streams: deadtime, histograms and readout-peak fits."""

import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd
from numba import njit
from scipy.optimize import OptimizeWarning, curve_fit
from scipy.stats import norm

from config import Config
from core.error_handler import FitError, InvalidArgumentError, UnsortedEventsError
from core.reports import read_table, write_table

FWHM_PER_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))


@dataclass
class EventStream:
    """Pulse timestamps (ns after cycle start), ordered by cycle then time."""
    cycle_index: np.ndarray
    timestamps_ns: np.ndarray
    cycle_count: int
    deadtime_ns: float = 60.0

    def __post_init__(self):
        self.cycle_index = np.asarray(self.cycle_index, dtype=np.int64)
        self.timestamps_ns = np.asarray(self.timestamps_ns, dtype=np.float64)
        if self.cycle_index.shape != self.timestamps_ns.shape:
            raise InvalidArgumentError("cycle_index and timestamps_ns must have the same length")
        if not self.deadtime_ns >= 0:
            raise InvalidArgumentError(f"deadtime_ns must be >= 0, got {self.deadtime_ns}")
        if self.cycle_count < 0:
            raise InvalidArgumentError(f"cycle_count must be >= 0, got {self.cycle_count}")
        if len(self.cycle_index) and (self.cycle_index.min() < 0 or self.cycle_index.max() >= self.cycle_count):
            raise InvalidArgumentError("cycle_index outside [0, cycle_count)")

    def __len__(self):
        return len(self.timestamps_ns)

    @classmethod
    def from_cycles(cls, cycles: list[list[float]], deadtime_ns: float = 60.0) -> "EventStream":
        index = np.repeat(np.arange(len(cycles)), [len(c) for c in cycles])
        stamps = np.concatenate([np.asarray(c, dtype=np.float64) for c in cycles]) if cycles else np.empty(0)
        return cls(index, stamps, len(cycles), deadtime_ns)

    def to_cycles(self) -> list[list[float]]:
        cycles = [[] for _ in range(self.cycle_count)]
        for c, t in zip(self.cycle_index, self.timestamps_ns):
            cycles[int(c)].append(float(t))
        return cycles

    def check_sorted(self):
        """Raise unless ordered by cycle and non-decreasing in time within each cycle."""
        if len(self) < 2:
            return
        dc = np.diff(self.cycle_index)
        dt = np.diff(self.timestamps_ns)
        bad = np.nonzero((dc < 0) | ((dc == 0) & (dt < 0)))[0]
        if bad.size:
            i = int(bad[0]) + 1
            raise UnsortedEventsError(
                f"timestamps not sorted at event {i} (cycle {int(self.cycle_index[i])})"
            )


@dataclass
class Histogram:
    """Per-bin detection probability; bin k covers [k, k+1) * bin_width_ns."""
    bin_width_ns: float
    counts: np.ndarray
    cycle_count: int

    @property
    def probabilities(self) -> np.ndarray:
        return self.counts / self.cycle_count

    @property
    def edges(self) -> np.ndarray:
        return self.bin_width_ns * np.arange(len(self.counts) + 1)

    @property
    def span_ns(self) -> float:
        return self.bin_width_ns * len(self.counts)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"bin_start_ns": self.edges[:-1], "probability": self.probabilities})


@dataclass(frozen=True)
class ReadoutPeak:
    center_ns: float
    fwhm_ns: float
    area: float
    center_sigma: float
    fwhm_sigma: float


@njit(cache=True)
def _deadtime_mask(cycle_index, timestamps, deadtime):
    keep = np.zeros(timestamps.size, dtype=np.bool_)
    last_cycle = -1
    last_kept = 0.0
    for i in range(timestamps.size):
        if cycle_index[i] != last_cycle or timestamps[i] - last_kept >= deadtime:
            keep[i] = True
            last_cycle = cycle_index[i]
            last_kept = timestamps[i]
    return keep


def apply_deadtime(stream: EventStream) -> EventStream:
    """
    Drop every pulse closer than deadtime_ns to the previous kept pulse of its cycle.

    A pulse exactly deadtime_ns after a kept one survives.

    Raises:
        UnsortedEventsError: Timestamps are not sorted within a cycle.
    """
    stream.check_sorted()
    keep = _deadtime_mask(stream.cycle_index, stream.timestamps_ns, float(stream.deadtime_ns))
    return EventStream(stream.cycle_index[keep], stream.timestamps_ns[keep],
                       stream.cycle_count, stream.deadtime_ns)


def build_histogram(stream: EventStream, bin_width_ns: float = 1.0,
                    cycle_count: int | None = None, span_ns: float | None = None) -> Histogram:
    """Counts per bin divided by the number of cycles."""
    cycles = stream.cycle_count if cycle_count is None else cycle_count
    if cycles <= 0:
        raise InvalidArgumentError("cannot normalize a histogram over zero cycles")
    if not bin_width_ns > 0:
        raise InvalidArgumentError(f"bin_width_ns must be > 0, got {bin_width_ns}")
    stamps = stream.timestamps_ns
    if len(stamps) and stamps.min() < 0:
        raise InvalidArgumentError("timestamps must be >= 0 ns")
    if span_ns is None:
        span_ns = (float(stamps.max()) + bin_width_ns) if len(stamps) else bin_width_ns
    n_bins = max(int(math.ceil(span_ns / bin_width_ns - 1e-9)), 1)
    bins = np.floor(stamps / bin_width_ns).astype(np.int64)
    bins = bins[bins < n_bins]
    counts = np.bincount(bins, minlength=n_bins).astype(np.float64)
    return Histogram(bin_width_ns=float(bin_width_ns), counts=counts, cycle_count=int(cycles))


def window_sum(hist: Histogram, window: tuple[float, float]) -> float:
    """Summed probability of the bins starting inside [offset, offset + width)."""
    offset, width = window
    if offset < 0 or offset + width > hist.span_ns + 1e-9 or width <= 0:
        raise InvalidArgumentError(
            f"window {window} outside the histogram span [0, {hist.span_ns}] ns"
        )
    starts = hist.edges[:-1]
    mask = (starts >= offset - 1e-9) & (starts < offset + width - 1e-9)
    return float(np.sum(hist.probabilities[mask]))


def detection_probability(stream: EventStream, window: tuple[float, float] | None = None) -> float:
    """Fraction of cycles with at least one event inside [offset, offset + width)."""
    if stream.cycle_count <= 0:
        raise InvalidArgumentError("stream has no cycles")
    mask = np.ones(len(stream), dtype=bool)
    if window is not None:
        offset, width = window
        mask = (stream.timestamps_ns >= offset) & (stream.timestamps_ns < offset + width)
    return len(np.unique(stream.cycle_index[mask])) / stream.cycle_count


def fit_readout_peak(hist: Histogram, window: tuple[float, float] | None = None) -> ReadoutPeak:
    """Bin-integrated Gaussian fit of the readout peak."""
    starts = hist.edges[:-1]
    probs = hist.probabilities
    if window is not None:
        mask = (starts >= window[0]) & (starts < window[0] + window[1])
        starts, probs = starts[mask], probs[mask]
    total = float(np.sum(probs))
    if len(starts) < 4 or total <= 0:
        raise FitError("readout peak fit needs at least 4 bins with events")

    width = hist.bin_width_ns
    centers = starts + width / 2.0
    mu0 = float(np.sum(centers * probs) / total)
    sigma0 = max(float(np.sqrt(np.sum(probs * (centers - mu0) ** 2) / total)), width / 2.0)

    def binned(x, area, mu, sigma):
        return area * (norm.cdf(x + width, mu, sigma) - norm.cdf(x, mu, sigma))

    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", OptimizeWarning)
            popt, pcov = curve_fit(
                binned, starts, probs, p0=[total, mu0, sigma0],
                bounds=([0.0, starts[0], 1e-3 * width], [np.inf, starts[-1] + width, np.inf]),
                max_nfev=Config.FIT_MAX_EVALS,
            )
    except RuntimeError as exc:
        raise FitError(f"readout peak fit did not converge: {exc}",
                       best={"area": total, "center_ns": mu0, "sigma_ns": sigma0}) from exc

    errors = np.sqrt(np.clip(np.diag(pcov), 0.0, np.inf))
    return ReadoutPeak(center_ns=float(popt[1]), fwhm_ns=float(popt[2] * FWHM_PER_SIGMA),
                       area=float(popt[0]), center_sigma=float(errors[1]),
                       fwhm_sigma=float(errors[2] * FWHM_PER_SIGMA))


def write_events(stream: EventStream, path: str | Path, header: list[str] | None = None) -> Path:
    """Delimited (cycle_index, timestamp_ns) rows."""
    lines = list(header or [])
    lines += [f"cycle_count = {stream.cycle_count}", f"deadtime_ns = {stream.deadtime_ns!r}"]
    frame = pd.DataFrame({"cycle_index": stream.cycle_index, "timestamp_ns": stream.timestamps_ns})
    return write_table(frame, path, lines)


def read_events(path: str | Path) -> EventStream:
    frame, header = read_table(path)
    cycle_count = int(header.get("cycle_count", int(frame["cycle_index"].max()) + 1 if len(frame) else 0))
    return EventStream(frame["cycle_index"].to_numpy(), frame["timestamp_ns"].to_numpy(),
                       cycle_count, float(header.get("deadtime_ns", 60.0)))
