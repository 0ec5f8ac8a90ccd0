"""Tests for the command-line application."""

import contextlib
import io
import tempfile
import unittest
from pathlib import Path

import numpy as np

from app import main
from core.reports import read_table, write_table
from runner import points_frame


def run_cli(argv: list[str]) -> tuple[int, str]:
    stderr = io.StringIO()
    with contextlib.redirect_stderr(stderr):
        code = main(argv)
    return code, stderr.getvalue()


def report_values(path: Path) -> dict:
    """key = value lines of a text report, without '#' header lines."""
    values = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.startswith("#") or "=" not in line:
            continue
        key, _, value = line.partition("=")
        values[key.strip()] = value.split("±")[0].split("  #")[0].strip()
    return values


class TestEstimateCommand(unittest.TestCase):
    """Test cases for estimate-n."""

    def test_one_over_e(self):
        """Test p = 0.6321 reports lambda of 1.0 and N of about 8.33."""
        with tempfile.TemporaryDirectory() as tmp:
            out = Path(tmp) / "estimate.txt"
            code, _ = run_cli(["estimate-n", "--p", "0.6321", "--output", str(out), "--quiet"])
            self.assertEqual(code, 0)
            values = report_values(out)
            text = out.read_text(encoding="utf-8")
        self.assertAlmostEqual(float(values["lambda"]), 1.0, delta=1e-3)
        self.assertAlmostEqual(float(values["mean_electrons"]), 8.33, delta=0.01)
        self.assertIn("# command = estimate-n", text)
        self.assertIn("mesh_open_area = 0.5  # [profile]", text)

    def test_with_cycles(self):
        """Test a cycle count adds standard errors."""
        with tempfile.TemporaryDirectory() as tmp:
            out = Path(tmp) / "estimate.txt"
            code, _ = run_cli(["estimate-n", "--p", "0.5", "--cycles", "100", "--output", str(out),
                               "--quiet"])
            text = out.read_text(encoding="utf-8")
        self.assertEqual(code, 0)
        line = next(row for row in text.splitlines() if row.startswith("p_detect = "))
        self.assertAlmostEqual(float(line.split("±")[1]), 0.05, places=12)

    def test_saturated_exit_code(self):
        """Test p = 1 fails with a single-line diagnostic and exit code 1."""
        with tempfile.TemporaryDirectory() as tmp:
            code, err = run_cli(["estimate-n", "--p", "1", "--output", str(Path(tmp) / "e.txt"),
                                 "--quiet"])
        self.assertEqual(code, 1)
        self.assertIn("error[saturated_detector]", err)
        self.assertEqual(len(err.strip().splitlines()), 1)

    def test_missing_key_exit_code(self):
        """Test a missing required key exits with code 2 naming the key."""
        code, err = run_cli(["estimate-n", "--quiet"])
        self.assertEqual(code, 2)
        self.assertIn("error[config]", err)
        self.assertIn("p_detect", err)

    def test_bad_assignment(self):
        """Test a malformed --set is a configuration error."""
        code, err = run_cli(["estimate-n", "--set", "p_detect", "--quiet"])
        self.assertEqual(code, 2)
        self.assertIn("KEY=VALUE", err)

    def test_unit_mismatch(self):
        """Test a wrong unit on a flag value exits with code 2."""
        code, err = run_cli(["estimate-n", "--p", "0.5", "--set", "drive_freq_GHz=3 eV", "--quiet"])
        self.assertEqual(code, 2)
        self.assertIn("drive_freq_GHz", err)


class TestStabilityDiagramCommand(unittest.TestCase):
    """Test cases for stability-diagram."""

    def test_edge_in_header(self):
        """Test the a = 0 scan reports its transition near q = 0.908."""
        with tempfile.TemporaryDirectory() as tmp:
            out = Path(tmp) / "diagram.csv"
            code, _ = run_cli(["stability-diagram", "--qmin", "0.85", "--qmax", "0.95",
                               "--qstep", "0.001", "--output", str(out), "--quiet"])
            frame, header = read_table(out)
        self.assertEqual(code, 0)
        self.assertEqual(len(frame), 101)
        edge = float(header["transitions_q"])
        self.assertGreaterEqual(edge, 0.905)
        self.assertLessEqual(edge, 0.911)

    def test_worker_count_not_in_output(self):
        """Test outputs are identical for different worker counts."""
        with tempfile.TemporaryDirectory() as tmp:
            one, two = Path(tmp) / "one.csv", Path(tmp) / "two.csv"
            base = ["stability-diagram", "--qmin", "0.1", "--qmax", "0.2", "--qstep", "0.05", "--quiet"]
            run_cli(base + ["--workers", "1", "--output", str(one)])
            run_cli(base + ["--workers", "3", "--output", str(two)])
            self.assertEqual(one.read_bytes(), two.read_bytes())


class TestFitCommands(unittest.TestCase):
    """Test cases for fit-loading and fit-storage."""

    def test_fit_loading(self):
        """Test a loading table gives tau and the implied electron number."""
        t = np.linspace(0.0, 400e-6, 41)
        with tempfile.TemporaryDirectory() as tmp:
            data = write_table(points_frame(t, -np.expm1(-t / 80.3e-6)), Path(tmp) / "loading.csv")
            out = Path(tmp) / "loading.txt"
            code, _ = run_cli(["fit-loading", str(data), "--output", str(out), "--quiet"])
            values = report_values(out)
        self.assertEqual(code, 0)
        self.assertAlmostEqual(float(values["tau"]) / 80.3e-6, 1.0, delta=1e-3)
        self.assertAlmostEqual(float(values["mean_electrons"]), 1.04, delta=0.01)

    def test_fit_storage_constant(self):
        """Test constant storage data succeed with tau flagged unidentifiable."""
        t = np.linspace(0.0, 0.15, 31)
        with tempfile.TemporaryDirectory() as tmp:
            data = write_table(points_frame(t, np.full(len(t), 0.3)), Path(tmp) / "storage.csv")
            out = Path(tmp) / "storage.txt"
            code, _ = run_cli(["fit-storage", str(data), "--output", str(out), "--quiet"])
            values = report_values(out)
        self.assertEqual(code, 0)
        self.assertEqual(values["identifiable"], "false")

    def test_missing_input(self):
        """Test a missing input file exits with code 1."""
        code, err = run_cli(["fit-loading", "/nonexistent/points.csv", "--quiet"])
        self.assertEqual(code, 1)
        self.assertIn("FileNotFoundError", err)


class TestSimulateCyclesCommand(unittest.TestCase):
    """Test cases for simulate-cycles."""

    def test_outputs(self):
        """Test events, histogram and report are written and agree."""
        with tempfile.TemporaryDirectory() as tmp:
            base = Path(tmp) / "cycles.csv"
            code, _ = run_cli(["simulate-cycles", "--n-mean", "1.04", "--cycles", "20000",
                               "--seed", "4", "--output", str(base), "--quiet"])
            events, header = read_table(Path(tmp) / "cycles.events.csv")
            values = report_values(Path(tmp) / "cycles.txt")
            self.assertTrue((Path(tmp) / "cycles.histogram.csv").exists())
        self.assertEqual(code, 0)
        self.assertEqual(int(header["cycle_count"]), 20000)
        self.assertEqual(int(values["kept_events"]), len(events))
        self.assertLessEqual(int(values["kept_events"]), int(values["raw_events"]))
        self.assertAlmostEqual(float(values["p_detect"]), 0.1174, delta=0.01)


if __name__ == "__main__":
    unittest.main()
