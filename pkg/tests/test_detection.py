"""Tests for the detection chain and Poisson inversion."""

import math
import unittest

import numpy as np

from core.error_handler import InvalidArgumentError, SaturatedDetectorError
from stats import DetectionChain, chain_efficiency, estimate_mean_electrons, loading_electron_numbers
from stats.fitting import DecayFit

LOADING_TAU = 80.3e-6


class TestDetectionChain(unittest.TestCase):
    """Test cases for DetectionChain and chain_efficiency."""

    def test_default_efficiency(self):
        """Test the default chain detects 12% of electrons."""
        self.assertAlmostEqual(chain_efficiency(DetectionChain()), 0.12, places=12)

    def test_saturated_voltage(self):
        """Test a unit voltage factor leaves the mesh and MCP open areas."""
        chain = DetectionChain(1.0, 0.5, 0.6, 1.0)
        self.assertAlmostEqual(chain_efficiency(chain), 0.30, places=12)

    def test_out_of_range_rejected(self):
        """Test a stage probability outside [0, 1] is rejected."""
        with self.assertRaises(InvalidArgumentError):
            DetectionChain(mesh_open_area=1.5)
        with self.assertRaises(InvalidArgumentError):
            DetectionChain(voltage_factor=-0.1)


class TestEstimateMeanElectrons(unittest.TestCase):
    """Test cases for estimate_mean_electrons."""

    def test_one_over_e(self):
        """Test p = 1 - 1/e gives lambda = 1 and N of about 8.33."""
        estimate = estimate_mean_electrons(1.0 - math.exp(-1.0))
        self.assertAlmostEqual(estimate.lam, 1.0, places=12)
        self.assertAlmostEqual(estimate.mean_electrons, 1.0 / 0.12, places=9)
        self.assertAlmostEqual(estimate.mean_electrons, 8.33, delta=0.01)

    def test_ten_microsecond_load(self):
        """Test the 10 us loading point implies about one electron."""
        p = 1.0 - math.exp(-10.0 / 80.3)
        self.assertAlmostEqual(p, 0.1171, delta=5e-4)
        self.assertAlmostEqual(estimate_mean_electrons(p).mean_electrons, 1.04, delta=0.01)

    def test_zero_probability(self):
        """Test no detections imply no electrons."""
        estimate = estimate_mean_electrons(0.0)
        self.assertEqual(estimate.lam, 0.0)
        self.assertEqual(estimate.mean_electrons, 0.0)

    def test_saturated(self):
        """Test p = 1 is a saturated detector."""
        with self.assertRaises(SaturatedDetectorError):
            estimate_mean_electrons(1.0)

    def test_invalid_probability(self):
        """Test probabilities outside [0, 1] are rejected."""
        for p in (-0.1, 1.2, math.nan):
            with self.assertRaises(InvalidArgumentError):
                estimate_mean_electrons(p)

    def test_zero_efficiency(self):
        """Test a dead chain cannot be inverted."""
        with self.assertRaises(InvalidArgumentError):
            estimate_mean_electrons(0.3, DetectionChain(voltage_factor=0.0))

    def test_binomial_errors(self):
        """Test the standard errors propagate from the binomial error on p."""
        estimate = estimate_mean_electrons(0.5, cycles=100)
        self.assertAlmostEqual(estimate.p_sigma, 0.05, places=12)
        self.assertAlmostEqual(estimate.lambda_sigma, 0.1, places=12)
        self.assertAlmostEqual(estimate.mean_sigma, 0.1 / 0.12, places=9)
        self.assertEqual(set(estimate.sigmas()), {"p_detect", "lambda", "mean_electrons"})

    def test_no_cycles_no_errors(self):
        """Test sigmas are absent without a cycle count."""
        estimate = estimate_mean_electrons(0.5)
        self.assertIsNone(estimate.mean_sigma)
        self.assertEqual(estimate.sigmas(), {})
        self.assertEqual(estimate.as_dict()["lambda"], estimate.lam)


class TestLoadingElectronNumbers(unittest.TestCase):
    """Test cases for loading_electron_numbers."""

    def test_loading_cross_check(self):
        """Test about one electron at 10 us and about 20.8 at 200 us."""
        numbers = loading_electron_numbers(LOADING_TAU, [10e-6, 200e-6])
        self.assertAlmostEqual(numbers[0] / 1.0, 1.0, delta=0.05)
        self.assertAlmostEqual(numbers[1] / 20.8, 1.0, delta=0.05)
        self.assertAlmostEqual(numbers[1], 20.76, delta=0.01)

    def test_fit_supplies_p_max(self):
        """Test a loading fit contributes its own P_max."""
        fit = DecayFit(kind="loading", params={"P_max": 0.5, "tau": LOADING_TAU},
                       sigmas={"P_max": 0.01, "tau": 1e-6}, residual_norm=0.0)
        from_fit = loading_electron_numbers(fit, [50e-6])
        expected = -math.log1p(-0.5 * -math.expm1(-50e-6 / LOADING_TAU)) / 0.12
        self.assertAlmostEqual(from_fit[0], expected, places=9)

    def test_monotone_in_load_time(self):
        """Test longer loading implies more electrons."""
        numbers = loading_electron_numbers(LOADING_TAU, np.linspace(1e-6, 300e-6, 30))
        self.assertTrue(np.all(np.diff(numbers) > 0))

    def test_non_positive_tau(self):
        """Test tau must be positive."""
        with self.assertRaises(InvalidArgumentError):
            loading_electron_numbers(0.0, [10e-6])


if __name__ == "__main__":
    unittest.main()
