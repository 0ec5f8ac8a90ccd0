"""Tests for storage-time sweeps and their summaries."""

import math
import unittest
from dataclasses import replace

import numpy as np

from analysis import (
    SweepMap,
    SweepSpec,
    amplitude_jumps,
    lock_band,
    loss_boundary,
    phase_slice,
    run_sweep,
    sweep_findings,
)
from analysis.spectrum import MotionSummary
from analysis.sweep import SweepCell
from core.error_handler import InvalidArgumentError, OffGridError
from dynamics import SimOutcome, TerminationSpec
from trap import HarmonicRF1D

REFERENCE_GRADIENT = 1.524e8


def small_spec(gradient: float = REFERENCE_GRADIENT, workers: int = 1) -> SweepSpec:
    return SweepSpec(
        model=HarmonicRF1D(gradient),
        distance_min=50e-6,
        distance_max=200e-6,
        distance_count=3,
        phase_count=4,
        term=TerminationSpec(time_cap=1e-6),
        workers=workers,
    )


def summary_cell(distance: float, phase: float, amplitude: float | None,
                 capped: bool = True, lock_order: int | None = None,
                 frequency: float = 300e6) -> SweepCell:
    outcome = SimOutcome(storage_time=1e-3 if capped else 1e-7, escaped=not capped, capped=capped,
                         final_position=np.zeros(3), final_velocity=np.zeros(3))
    summary = None
    if amplitude is not None:
        summary = MotionSummary(secular_frequency=frequency, amplitude=amplitude,
                                lock_order=lock_order, spectral_peak_height=amplitude)
    return SweepCell(distance, phase, outcome, summary)


class TestRunSweep(unittest.TestCase):
    """Test cases for run_sweep on the harmonic trap."""

    @classmethod
    def setUpClass(cls):
        cls.sweep = run_sweep(small_spec())

    def test_all_cells_capped(self):
        """Test every cell of a stable harmonic trap survives to the cap."""
        self.assertTrue(np.all(self.sweep.capped()))
        np.testing.assert_array_equal(self.sweep.storage_times(), np.full((3, 4), 1e-6))

    def test_grid_axes(self):
        """Test the distance axis is inclusive and phases are uniform in [0, 2 pi)."""
        np.testing.assert_allclose(self.sweep.distances, [50e-6, 125e-6, 200e-6])
        np.testing.assert_allclose(self.sweep.phases, [0.0, math.pi / 2, math.pi, 3 * math.pi / 2])

    def test_summaries_track_floquet_frequency(self):
        """Test captured cells report the linear secular frequency."""
        frame = self.sweep.to_frame()
        self.assertEqual(len(frame), 12)
        self.assertTrue(frame["secular_MHz"].notna().all())
        self.assertLess(float(np.max(np.abs(frame["secular_MHz"] / 319.4 - 1.0))), 0.02)

    def test_core_cells_not_locked(self):
        """Test cells at the linear frequency next to f_drive / 5 carry no lock order."""
        self.assertAlmostEqual(self.sweep.spec.linear_frequency / 319.7e6, 1.0, delta=1e-3)
        self.assertTrue(self.sweep.to_frame()["lock_order"].isna().all())
        findings = sweep_findings(self.sweep)
        self.assertEqual(findings["linear_near_subharmonic"], 5)
        self.assertAlmostEqual(findings["linear_freq_MHz"] / 319.7, 1.0, delta=1e-3)

    def test_amplitude_grows_with_distance(self):
        """Test the steady amplitude increases with the ionization distance."""
        column = phase_slice(self.sweep, 0.0)
        amplitudes = column["amplitude_um"].to_numpy()
        self.assertTrue(np.all(np.diff(amplitudes) > 0))

    def test_phase_slice_off_grid(self):
        """Test an off-grid phase names the nearest grid phase."""
        with self.assertRaises(OffGridError) as ctx:
            phase_slice(self.sweep, 1.0)
        self.assertAlmostEqual(ctx.exception.nearest, math.pi / 2)

    def test_phase_slice_snap(self):
        """Test snapping picks the nearest grid phase."""
        snapped = phase_slice(self.sweep, 1.0, snap=True)
        exact = phase_slice(self.sweep, math.pi / 2)
        self.assertTrue(snapped.equals(exact))

    def test_no_loss_boundary(self):
        """Test a fully stable map has no loss boundary."""
        boundary = loss_boundary(self.sweep)
        self.assertEqual(len(boundary), 4)
        self.assertTrue(boundary["loss_x0_um"].isna().all())
        self.assertAlmostEqual(sweep_findings(self.sweep)["stable_radius_um"], 200.0)


class TestSweepDeterminism(unittest.TestCase):
    """Test cases for worker-count independence."""

    def test_worker_count_does_not_change_result(self):
        """Test one and two workers give identical maps."""
        single = run_sweep(small_spec(workers=1)).to_frame()
        double = run_sweep(small_spec(workers=2)).to_frame()
        self.assertTrue(single.equals(double))


class TestUnstableSweep(unittest.TestCase):
    """Test cases for a sweep beyond the stability edge."""

    def test_everything_lost(self):
        """Test q above the first region loses every cell and has no stable radius."""
        sweep = run_sweep(small_spec(gradient=2.0 * REFERENCE_GRADIENT))
        self.assertFalse(np.any(sweep.capped()))
        boundary = loss_boundary(sweep)
        self.assertTrue(np.allclose(boundary["loss_x0_um"], 50.0))
        self.assertTrue(boundary["last_stable_x0_um"].isna().all())
        self.assertTrue(math.isnan(sweep_findings(sweep)["stable_radius_um"]))


class TestSweepSummaries(unittest.TestCase):
    """Test cases for jump, boundary and lock-band extraction on a hand-built map."""

    def setUp(self):
        spec = SweepSpec(model=HarmonicRF1D(REFERENCE_GRADIENT), distance_min=100e-6,
                         distance_max=300e-6, distance_count=3, phase_count=2)
        d = spec.distances
        p = spec.phases
        cells = [
            [summary_cell(d[0], p[0], 100e-6), summary_cell(d[0], p[1], 100e-6)],
            [summary_cell(d[1], p[0], 130e-6, lock_order=6, frequency=1600e6 / 6),
             summary_cell(d[1], p[1], 110e-6, frequency=1600e6 / 7)],
            [summary_cell(d[2], p[0], 140e-6, lock_order=6, frequency=1600e6 / 6),
             summary_cell(d[2], p[1], None, capped=False)],
        ]
        self.sweep = SweepMap(spec=spec, cells=cells)

    def test_amplitude_jump(self):
        """Test a growth above 20% between neighbours is reported once per phase."""
        jumps = amplitude_jumps(self.sweep)
        self.assertAlmostEqual(jumps["x0_um"][0], 200.0)
        self.assertAlmostEqual(jumps["amplitude_before_um"][0], 100.0)
        self.assertEqual(jumps["lock_order"][0], 6)
        self.assertTrue(math.isnan(jumps["x0_um"][1]))

    def test_loss_boundary_last_stable(self):
        """Test the boundary reports the last capped cell before the loss."""
        boundary = loss_boundary(self.sweep)
        self.assertTrue(math.isnan(boundary["loss_x0_um"][0]))
        self.assertAlmostEqual(boundary["loss_x0_um"][1], 300.0)
        self.assertAlmostEqual(boundary["last_stable_x0_um"][1], 200.0)
        self.assertAlmostEqual(boundary["secular_MHz"][1], 1600.0 / 7)

    def test_lock_band(self):
        """Test only sixth-order locked cells form the band."""
        band = lock_band(self.sweep, 6)
        self.assertEqual(len(band), 2)
        self.assertTrue(np.allclose(band["secular_MHz"], 1600.0 / 6))

    def test_findings(self):
        """Test the findings dictionary gathers the summaries."""
        findings = sweep_findings(self.sweep)
        self.assertAlmostEqual(findings["stable_radius_um"], 200.0)
        self.assertAlmostEqual(findings["boundary_freq_MHz"], 1600.0 / 7)
        self.assertEqual(findings["lock_band_cells"], 2)
        self.assertEqual(findings["diverged_cells"], 0)

    def test_boundary_against_loss_onset(self):
        """Test the boundary is judged against f_drive over the configured onset order."""
        findings = sweep_findings(self.sweep)
        self.assertAlmostEqual(findings["boundary_offset_MHz"], 0.0)
        self.assertTrue(findings["boundary_reproduced"])
        spec = replace(self.sweep.spec, loss_onset_order=6)
        findings = sweep_findings(SweepMap(spec=spec, cells=self.sweep.cells))
        self.assertAlmostEqual(findings["boundary_offset_MHz"], 1600.0 / 7 - 1600.0 / 6)
        self.assertFalse(findings["boundary_reproduced"])


class TestSweepSpec(unittest.TestCase):
    """Test cases for SweepSpec validation."""

    def test_single_point_axis_rejected(self):
        """Test an axis with one point is rejected."""
        with self.assertRaises(InvalidArgumentError):
            SweepSpec(model=HarmonicRF1D(REFERENCE_GRADIENT), distance_min=1e-6,
                      distance_max=1e-4, distance_count=1, phase_count=4)

    def test_beyond_escape_rejected(self):
        """Test a distance axis past the escape boundary is rejected."""
        with self.assertRaises(InvalidArgumentError):
            SweepSpec(model=HarmonicRF1D(REFERENCE_GRADIENT), distance_min=1e-6,
                      distance_max=600e-6, distance_count=3, phase_count=4)

    def test_loss_onset_order_validated(self):
        """Test an onset order below 2 is rejected."""
        with self.assertRaises(InvalidArgumentError):
            SweepSpec(model=HarmonicRF1D(REFERENCE_GRADIENT), distance_min=1e-6,
                      distance_max=1e-4, distance_count=3, phase_count=4, loss_onset_order=1)


if __name__ == "__main__":
    unittest.main()
