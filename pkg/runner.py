"""Simulation runner that dispatches one configured command and writes its outputs."""

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
import pandas as pd

from config import Config
from core.error_handler import NoSecularMotionError, SaturatedDetectorError
from core.reports import ReportBuilder, format_value, read_table, write_table, write_text
from core.run_config import RunConfig
from analysis import (
    SweepSpec,
    default_ensemble,
    linear_secular_frequency,
    run_sweep,
    stability_diagram,
    stability_transitions,
    summarize_motion,
    sweep_findings,
    tickle_scan,
)
from analysis.sweep import REFERENCE_FINDINGS
from analysis.tickle import scan_header
from dynamics import DriveNoiseSpec, InitialCondition, TerminationSpec, export_trajectory, integrate
from stats import (
    CycleProtocol,
    DetectionChain,
    apply_deadtime,
    build_histogram,
    detection_probability,
    estimate_mean_electrons,
    fit_loading,
    fit_storage,
    loading_electron_numbers,
    simulate_cycles,
    window_sum,
    write_events,
)
from trap import (
    CalibrationTargets,
    DriveSpec,
    FieldModel,
    ParticleSpec,
    Separable3D,
    calibrate_anharmonic,
    calibrated_model,
    field_model_from_params,
)


@dataclass
class RunResult:
    """Files written by one command and a short summary."""
    command: str
    paths: list[Path] = field(default_factory=list)
    summary: dict = field(default_factory=dict)


class SimulationRunner:
    """Runs exactly one command of a validated RunConfig."""

    def __init__(self, config: RunConfig,
                 progress_callback: Callable[[str], None] | None = None):
        self.config = config
        self.progress_callback = progress_callback

    def _progress(self, message: str):
        if self.progress_callback:
            self.progress_callback(message)

    # ------------------------------------------------------------------
    # Shared builders

    def drive(self) -> DriveSpec:
        freq = self.config.si("drive_freq_GHz")
        if freq is None:
            return DriveSpec(amplitude_scale=self.config.get("amplitude_scale"))
        return DriveSpec(omega=2 * math.pi * freq, amplitude_scale=self.config.get("amplitude_scale"))

    def particle(self) -> ParticleSpec:
        return ParticleSpec(charge=self.config.si("particle_charge_e"),
                            mass=self.config.si("particle_mass_me"))

    def chain(self) -> DetectionChain:
        c = self.config
        return DetectionChain(c.get("extraction_efficiency"), c.get("mesh_open_area"),
                              c.get("mcp_open_area"), c.get("voltage_factor"))

    def _radial_model(self, variant: str) -> FieldModel:
        if variant == "calibrated":
            targets = CalibrationTargets(drive=self.drive(), particle=self.particle())
            return calibrated_model(targets)
        params = {k: v for k, v in self.config.values.items() if v is not None}
        params["variant"] = variant
        return field_model_from_params(params)

    def model(self, three_d: bool = False) -> FieldModel:
        """Configured field model; three_d wraps a 1D model in the separable 3D trap."""
        variant = self.config.get("variant")
        if variant == "separable3d" or three_d:
            radial_variant = self.config.get("radial_variant") if variant == "separable3d" else variant
            omega_z = 2 * math.pi * self.config.si("axial_freq_MHz")
            return Separable3D(self._radial_model(radial_variant), omega_z)
        return self._radial_model(variant)

    def termination(self) -> TerminationSpec:
        c = self.config
        return TerminationSpec(time_cap=c.si("cap_ms"), escape_radius=c.si("escape_radius_um"),
                               steps_per_period=c.get("steps_per_period"))

    def output_path(self, suffix: str) -> Path:
        output = self.config.get("output")
        if output:
            return Path(output)
        return Config.ensure_output_dir() / f"{self.config.command}{suffix}"

    def header(self, title: str) -> list[str]:
        return [title, f"version = {Config.VERSION}"] + self.config.echo_lines()

    def report_header(self, title: str) -> str:
        return ReportBuilder.header(title, Config.VERSION, self.config.command,
                                    self.config.echo_lines())

    # ------------------------------------------------------------------
    # Commands

    def run(self) -> RunResult:
        handlers = {
            "trajectory": self.run_trajectory,
            "sweep": self.run_sweep,
            "tickle": self.run_tickle,
            "stability-diagram": self.run_stability_diagram,
            "calibrate": self.run_calibrate,
            "fit-loading": self.run_fit_loading,
            "fit-storage": self.run_fit_storage,
            "estimate-n": self.run_estimate,
            "simulate-cycles": self.run_simulate_cycles,
        }
        handler = handlers[self.config.command]
        result = handler()
        for path in result.paths:
            self._progress(f"✅ 已写入 {path}")
        return result

    def run_trajectory(self) -> RunResult:
        c = self.config
        self._progress(f"🔄 正在积分单电子轨迹 (x0 = {c.get('x0_um')} um)...")
        drive = self.drive()
        noise = None
        if c.get("noise_sigma") > 0:
            noise = DriveNoiseSpec(c.get("noise_sigma"), c.get("noise_hold_periods"), c.seed)
        init = InitialCondition.at_rest(c.si("x0_um"), c.get("phase_rad"))
        model = self.model()
        outcome = integrate(model, drive, self.particle(), init, self.termination(),
                            noise=noise, record=True, record_tail=c.si("record_tail_us"))

        summary = {
            "storage_time_s": outcome.storage_time,
            "escaped": outcome.escaped,
            "capped": outcome.capped,
        }
        if outcome.capped:
            try:
                linear = linear_secular_frequency(model, drive, self.particle())
                motion = summarize_motion(outcome.trajectory, drive.omega,
                                          c.si("lock_tolerance_MHz"), linear_frequency=linear)
                summary.update(secular_MHz=motion.secular_frequency / 1e6,
                               amplitude_um=motion.amplitude * 1e6,
                               lock_order=motion.lock_order)
            except NoSecularMotionError:
                self._progress("⚠️ 轨迹中没有可辨识的久期运动")

        header = self.header("trajectory") + [f"{k} = {format_value(v)}" for k, v in summary.items()]
        path = export_trajectory(outcome.trajectory, self.output_path(".csv"), header)
        return RunResult("trajectory", [path], summary)

    def run_sweep(self) -> RunResult:
        c = self.config
        n, m = c.grid
        self._progress(f"🔄 正在运行参数扫描 ({n}×{m})...")
        spec = SweepSpec(
            model=self.model(), distance_min=c.si("x0_min_um"), distance_max=c.si("x0_max_um"),
            distance_count=n, phase_count=m, term=self.termination(), drive=self.drive(),
            particle=self.particle(), workers=c.workers,
            capture_window=c.si("capture_window_us"), lock_tolerance=c.si("lock_tolerance_MHz"),
            loss_onset_order=c.get("loss_onset_order"), seed=c.seed,
        )
        sweep = run_sweep(spec, progress_callback=self.progress_callback)
        path = write_table(sweep.to_frame(), self.output_path(".csv"),
                           self.header("sweep") + spec.header())

        self._progress("📊 正在汇总扫描结果...")
        findings = sweep_findings(sweep)
        grid = {"grid": c.get("grid"), "cells": n * m,
                "capped_cells": int(np.sum(sweep.capped()))}
        text = self.report_header("sweep summary") + "\n" + ReportBuilder.sweep_summary(
            grid, findings, REFERENCE_FINDINGS)
        summary_path = write_text(text, path.with_name(path.stem + ".summary.txt"))
        return RunResult("sweep", [path, summary_path], findings)

    def run_tickle(self) -> RunResult:
        c = self.config
        scan = (c.si("fmin_MHz"), c.si("fmax_MHz"), c.si("step_MHz"))
        model = self.model(three_d=True)
        ensemble = default_ensemble(c.get("ensemble_size"), c.si("core_radius_um"), c.seed)
        self._progress(f"🔄 正在扫描激励频率 ({c.get('fmin_MHz')}–{c.get('fmax_MHz')} MHz)...")
        spectrum = tickle_scan(
            ensemble, model, self.drive(), scan, c.si("tickle_amp_V_per_m"),
            c.si("tickle_duration_us"), particle=self.particle(),
            gradient_length=c.si("gradient_length_um"), escape_radius=c.si("escape_radius_um"),
            steps_per_period=c.get("steps_per_period"), workers=c.workers,
            progress_callback=self.progress_callback,
        )
        header = self.header("tickle") + scan_header(
            scan, c.si("tickle_amp_V_per_m"), c.si("tickle_duration_us"), len(ensemble), c.seed,
        )
        header += [f"baseline = {spectrum.baseline!r}", f"threshold = {spectrum.threshold!r}"]
        header += [
            f"dip_{k} = center_MHz {d.center / 1e6!r}, depth {d.depth!r}, width_MHz {d.width / 1e6!r}"
            for k, d in enumerate(spectrum.dips)
        ]
        path = write_table(spectrum.to_frame(), self.output_path(".csv"), header)
        return RunResult("tickle", [path], {"dips_MHz": [d.center / 1e6 for d in spectrum.dips]})

    def run_stability_diagram(self) -> RunResult:
        c = self.config
        q_count = int(math.floor((c.get("qmax") - c.get("qmin")) / c.get("qstep") + 1e-9)) + 1
        q_values = c.get("qmin") + c.get("qstep") * np.arange(q_count)
        if c.get("a_max") is not None and c.get("a_step") is not None:
            a_count = int(math.floor((c.get("a_max") - c.get("a")) / c.get("a_step") + 1e-9)) + 1
            a_values = c.get("a") + c.get("a_step") * np.arange(max(a_count, 1))
        else:
            a_values = np.array([c.get("a")])
        self._progress(f"🔄 正在计算稳定图 ({len(a_values)}×{len(q_values)})...")
        diagram = stability_diagram(a_values, q_values, self.drive())
        transitions = stability_transitions(diagram)
        header = self.header("stability diagram") + [
            "transitions_q = " + ", ".join(repr(q) for q in transitions)
        ]
        path = write_table(diagram, self.output_path(".csv"), header)
        return RunResult("stability-diagram", [path], {"transitions_q": transitions})

    def run_calibrate(self) -> RunResult:
        c = self.config
        self._progress("🔄 正在校准非谐代理模型...")
        targets = CalibrationTargets(
            secular_omega=2 * math.pi * c.si("target_freq_MHz"),
            depth=c.si("depth_eV"),
            max_deviation=c.si("dev_pct"),
            deviation_extent=c.si("extent_um"),
            drive=self.drive(),
            particle=self.particle(),
        )
        _, report = calibrate_anharmonic(targets)
        text = self.report_header("calibration") + "\n" + ReportBuilder.calibration(report)
        path = write_text(text, self.output_path(".txt"))
        return RunResult("calibrate", [path], dict(report.parameters))

    def _read_points(self) -> np.ndarray:
        frame, _ = read_table(self.config.get("input"))
        if {"t_s", "p_detect"} <= set(frame.columns):
            columns = ["t_s", "p_detect"] + (["sigma"] if "sigma" in frame.columns else [])
            frame = frame[columns]
        return frame.iloc[:, :3].to_numpy(dtype=np.float64)

    def _fit_report(self, title: str, fit, extra: str = "") -> Path:
        text = self.report_header(title) + "\n" + ReportBuilder.fit(fit) + extra
        return write_text(text, self.output_path(".txt"))

    def run_fit_loading(self) -> RunResult:
        self._progress("🔄 正在拟合装载曲线...")
        fit = fit_loading(self._read_points())
        extra = ""
        t_load = self.config.si("t_load_us")
        if t_load and fit.params["P_max"] > 0:
            try:
                n = loading_electron_numbers(fit, t_load, self.chain())[0]
                extra = "\n" + ReportBuilder.estimate({"t_load_us": self.config.get("t_load_us"),
                                                      "mean_electrons": float(n)})
            except SaturatedDetectorError:
                self._progress("⚠️ 装载曲线在该装载时间已饱和")
        path = self._fit_report("loading fit", fit, extra)
        return RunResult("fit-loading", [path], {**fit.params})

    def run_fit_storage(self) -> RunResult:
        self._progress("🔄 正在拟合存储曲线...")
        fit = fit_storage(self._read_points(), two_component=self.config.get("two_component"))
        if not fit.identifiable:
            self._progress("⚠️ 衰减常数无法辨识，数据接近常数")
        path = self._fit_report("storage fit", fit)
        return RunResult("fit-storage", [path], {**fit.params, "identifiable": fit.identifiable})

    def run_estimate(self) -> RunResult:
        c = self.config
        estimate = estimate_mean_electrons(c.get("p_detect"), self.chain(), c.get("cycles"))
        text = self.report_header("electron number estimate") + "\n" + ReportBuilder.estimate(
            estimate.as_dict(), estimate.sigmas())
        path = write_text(text, self.output_path(".txt"))
        return RunResult("estimate-n", [path], estimate.as_dict())

    def run_simulate_cycles(self) -> RunResult:
        c = self.config
        protocol = CycleProtocol(
            t_load=c.si("t_load_us"), t_wait=c.si("t_wait_ms"),
            readout_offset_ns=c.get("readout_offset_ns"), readout_width_ns=c.get("readout_width_ns"),
            background_rate=c.get("background_rate"), peak_fwhm_ns=c.get("peak_fwhm_ns"),
            deadtime_ns=c.get("deadtime_ns"),
        )
        self._progress(f"🔄 正在模拟 {c.get('cycles')} 个实验周期...")
        raw = simulate_cycles(protocol, c.get("n_mean"), self.chain(), c.get("cycles"),
                              c.seed, c.workers, self.progress_callback)
        kept = apply_deadtime(raw)
        span = protocol.readout_offset_ns + protocol.readout_width_ns + protocol.deadtime_ns
        hist = build_histogram(kept, c.get("bin_width_ns"), span_ns=span)
        p_detect = detection_probability(kept, protocol.window)
        values = {
            "cycles": kept.cycle_count,
            "raw_events": len(raw),
            "kept_events": len(kept),
            "p_detect": p_detect,
            "window_sum": window_sum(hist, protocol.window),
        }
        sigmas = {}
        if p_detect < 1.0:
            estimate = estimate_mean_electrons(p_detect, self.chain(), kept.cycle_count)
            values.update(mean_electrons=estimate.mean_electrons)
            sigmas = {"p_detect": estimate.p_sigma, "mean_electrons": estimate.mean_sigma}

        base = self.output_path(".csv")
        header = self.header("simulated cycles")
        events_path = write_events(kept, base.with_name(base.stem + ".events.csv"), header)
        hist_path = write_table(hist.to_frame(), base.with_name(base.stem + ".histogram.csv"),
                                header + [f"cycle_count = {hist.cycle_count}"])
        text = self.report_header("simulated cycles") + "\n" + ReportBuilder.estimate(values, sigmas)
        report_path = write_text(text, base.with_name(base.stem + ".txt"))
        return RunResult("simulate-cycles", [events_path, hist_path, report_path], values)


def points_frame(t, p, sigma=None) -> pd.DataFrame:
    """Fit input table with the column names the fit commands read."""
    frame = pd.DataFrame({"t_s": np.asarray(t, dtype=np.float64),
                          "p_detect": np.asarray(p, dtype=np.float64)})
    if sigma is not None:
        frame["sigma"] = np.asarray(sigma, dtype=np.float64)
    return frame
