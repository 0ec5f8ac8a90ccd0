"""Tests for trap field models, the pseudopotential and calibration."""

import math
import unittest

import numpy as np
from scipy import constants

from core.error_handler import CalibrationError, ConfigError, InvalidArgumentError, UnboundedDepthError
from trap import (
    Anharmonic1D,
    CalibrationTargets,
    DriveSpec,
    HarmonicRF1D,
    ParticleSpec,
    Separable3D,
    calibrate_anharmonic,
    calibrated_model,
    create_field_model,
    default_calibrated_model,
    field_model_from_params,
    gradient_for_secular_frequency,
    instantaneous_field,
    pseudopotential,
    trap_depth,
)

REFERENCE_GRADIENT = 1.524e8


class TestSpecs(unittest.TestCase):
    """Test cases for particle and drive specifications."""

    def test_default_particle_is_electron(self):
        """Test the default particle carries CODATA electron values."""
        particle = ParticleSpec()
        self.assertEqual(particle.charge, -constants.e)
        self.assertEqual(particle.mass, constants.m_e)

    def test_negative_mass_rejected(self):
        """Test a negative mass is an invalid argument."""
        with self.assertRaises(InvalidArgumentError):
            ParticleSpec(mass=-1.0)

    def test_zero_omega_rejected(self):
        """Test the drive frequency must be positive."""
        with self.assertRaises(InvalidArgumentError):
            DriveSpec(omega=0.0)


class TestInstantaneousField(unittest.TestCase):
    """Test cases for instantaneous_field."""

    def setUp(self):
        self.drive = DriveSpec()
        self.model = HarmonicRF1D(REFERENCE_GRADIENT)

    def test_zero_at_origin(self):
        """Test the harmonic field vanishes at the origin at any time."""
        for t in (0.0, 1.3e-10, 7.7e-9):
            field = instantaneous_field(self.model, self.drive, 0.0, t, 0.4)
            self.assertEqual(float(np.abs(field).max()), 0.0)

    def test_linear_value(self):
        """Test E'x at 100 um and zero phase."""
        field = instantaneous_field(self.model, self.drive, 100e-6, 0.0, 0.0)
        self.assertAlmostEqual(field[0], 1.524e4, delta=1e-6)

    def test_odd_symmetry(self):
        """Test E(-x) = -E(x) for the anharmonic model."""
        model = Anharmonic1D(REFERENCE_GRADIENT, 700e-6, 1.65, 4.0)
        for x in np.linspace(10e-6, 2e-3, 17):
            plus = instantaneous_field(model, self.drive, x, 2.1e-10, 0.3)
            minus = instantaneous_field(model, self.drive, -x, 2.1e-10, 0.3)
            self.assertEqual(plus[0], -minus[0])

    def test_non_finite_rejected(self):
        """Test non-finite time is an invalid argument."""
        with self.assertRaises(InvalidArgumentError):
            instantaneous_field(self.model, self.drive, 1e-6, math.nan, 0.0)

    def test_outside_validity_rejected(self):
        """Test positions outside the validity domain are rejected."""
        with self.assertRaises(InvalidArgumentError):
            instantaneous_field(self.model, self.drive, 0.02, 0.0, 0.0)

    def test_harmonic_limit(self):
        """Test a very wide rolloff agrees with the harmonic model within 1 mm."""
        wide = Anharmonic1D(REFERENCE_GRADIENT, 1e3, 1.0)
        for x in np.linspace(-1e-3, 1e-3, 21):
            a = instantaneous_field(wide, self.drive, x, 0.0, 0.0)[0]
            h = instantaneous_field(self.model, self.drive, x, 0.0, 0.0)[0]
            self.assertLessEqual(abs(a - h), 1e-6 * abs(h) + 1e-300)


class TestPseudopotential(unittest.TestCase):
    """Test cases for pseudopotential and trap_depth."""

    def setUp(self):
        self.drive = DriveSpec()
        self.particle = ParticleSpec()

    def test_zero_field_gives_zero(self):
        """Test u_p vanishes where the field does."""
        sample = pseudopotential(HarmonicRF1D(REFERENCE_GRADIENT), self.drive, self.particle, 0.0)
        self.assertEqual(sample.u_p, 0.0)
        self.assertEqual(sample.delta, 0.0)

    def test_megavolt_per_meter(self):
        """Test |E| = 1e6 V/m at 1.6 GHz gives about 6.97e-17 J (435 eV)."""
        model = HarmonicRF1D(1e10)
        sample = pseudopotential(model, self.drive, self.particle, 1e-4)
        self.assertAlmostEqual(sample.u_p / 6.97e-17, 1.0, delta=2e-3)
        self.assertAlmostEqual(sample.u_p / constants.e, 435.0, delta=1.0)

    def test_harmonic_delta_zero(self):
        """Test the harmonic model is its own harmonic fit."""
        model = HarmonicRF1D(REFERENCE_GRADIENT)
        for x in (1e-6, 50e-6, 300e-6):
            self.assertAlmostEqual(pseudopotential(model, self.drive, self.particle, x).delta, 0.0,
                                   places=12)

    def test_scaling(self):
        """Test u_p scales as amplitude_scale squared and as 1/omega squared."""
        model = HarmonicRF1D(REFERENCE_GRADIENT)
        base = pseudopotential(model, self.drive, self.particle, 80e-6).u_p
        doubled = pseudopotential(model, DriveSpec(amplitude_scale=2.0), self.particle, 80e-6).u_p
        slower = pseudopotential(model, DriveSpec(omega=self.drive.omega / 2), self.particle, 80e-6).u_p
        self.assertAlmostEqual(doubled / base, 4.0, places=12)
        self.assertAlmostEqual(slower / base, 4.0, places=12)

    def test_harmonic_depth_unbounded(self):
        """Test the harmonic model has no finite depth."""
        with self.assertRaises(UnboundedDepthError):
            trap_depth(HarmonicRF1D(REFERENCE_GRADIENT), self.drive, self.particle, 1e-3)

    def test_depth_quadruples_with_amplitude(self):
        """Test doubling amplitude_scale quadruples the depth."""
        model = default_calibrated_model()
        depth, location = trap_depth(model, self.drive, self.particle, model.validity_extent)
        depth2, location2 = trap_depth(model, DriveSpec(amplitude_scale=2.0), self.particle,
                                       model.validity_extent)
        self.assertAlmostEqual(depth2 / depth, 4.0, delta=1e-6)
        self.assertAlmostEqual(location2 / location, 1.0, delta=1e-4)


class TestCalibration(unittest.TestCase):
    """Test cases for calibrate_anharmonic."""

    def test_gradient_for_300_mhz(self):
        """Test the linear gradient giving 2pi x 300 MHz at 1.6 GHz is about 1.524e8 V/m^2."""
        gradient = gradient_for_secular_frequency(2 * math.pi * 300e6, DriveSpec(), ParticleSpec())
        self.assertAlmostEqual(gradient / REFERENCE_GRADIENT, 1.0, delta=1e-3)

    def test_reference_targets_met(self):
        """Test the reference targets are all met on re-evaluation."""
        model, report = calibrate_anharmonic(CalibrationTargets())
        self.assertTrue(report.all_met)
        self.assertLessEqual(abs(report.residuals["depth"]), 0.01)
        self.assertLessEqual(abs(report.residuals["secular_frequency"]), 1e-3)
        self.assertLessEqual(report.achieved["max_deviation"], 0.02)
        self.assertAlmostEqual(report.achieved["depth"] / constants.e, 1.3, delta=0.013)
        self.assertIsInstance(model, Anharmonic1D)
        self.assertGreater(len(report.exponents_tried), 0)

    def test_depth_zero_infeasible(self):
        """Test a zero depth target is infeasible."""
        with self.assertRaises(CalibrationError):
            calibrate_anharmonic(CalibrationTargets(depth=0.0))

    def test_default_model_cached(self):
        """Test the default calibrated model is computed once."""
        self.assertIs(default_calibrated_model(), calibrated_model(CalibrationTargets()))


class TestSeparable3D(unittest.TestCase):
    """Test cases for the separable 3D model."""

    def setUp(self):
        self.model = Separable3D(HarmonicRF1D(REFERENCE_GRADIENT), 2 * math.pi * 40e6)
        self.particle = ParticleSpec()

    def test_static_laplacian_zero(self):
        """Test the static potential is divergence-free by finite differences."""
        rng = np.random.default_rng(7)
        h = 1e-6
        for point in rng.uniform(-200e-6, 200e-6, size=(5, 3)):
            second = []
            for axis in range(3):
                step = np.zeros(3)
                step[axis] = h
                v_plus = self.model.static_potential(point + step, self.particle)
                v_minus = self.model.static_potential(point - step, self.particle)
                v_0 = self.model.static_potential(point, self.particle)
                second.append((v_plus - 2 * v_0 + v_minus) / h ** 2)
            scale = max(abs(s) for s in second)
            self.assertLessEqual(abs(sum(second)), 1e-6 * scale)

    def test_curvatures_sum_to_zero(self):
        """Test the analytic curvatures cancel exactly."""
        self.assertEqual(float(np.sum(self.model.static_curvatures())), 0.0)

    def test_quadrupole_signs(self):
        """Test the RF gradient has opposite signs along x and y."""
        g = self.model.origin_gradients()
        self.assertEqual(g[0], -g[1])
        self.assertEqual(g[2], 0.0)


class TestRegistry(unittest.TestCase):
    """Test cases for the field model registry."""

    def test_unknown_variant(self):
        """Test an unknown variant lists the accepted ones."""
        with self.assertRaises(ConfigError) as ctx:
            create_field_model("octupole")
        self.assertIn("harmonic", str(ctx.exception))

    def test_params_round_trip(self):
        """Test to_params and field_model_from_params are inverse."""
        model = Separable3D(Anharmonic1D(REFERENCE_GRADIENT, 700e-6, 1.65, 4.0), 2 * math.pi * 40e6)
        rebuilt = field_model_from_params(model.to_params())
        self.assertEqual(rebuilt.variant, "separable3d")
        self.assertEqual(rebuilt.radial.gradient, model.radial.gradient)
        self.assertAlmostEqual(rebuilt.radial.rolloff_scale / model.radial.rolloff_scale, 1.0, places=12)
        self.assertEqual(rebuilt.radial.rolloff_exponent, 4.0)
        self.assertAlmostEqual(rebuilt.omega_z / model.omega_z, 1.0, places=12)


if __name__ == "__main__":
    unittest.main()
