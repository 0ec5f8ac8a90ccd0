"""Report templates and delimited table I/O."""

import math
from pathlib import Path

import pandas as pd
from scipy import constants

FLOAT_FORMAT = "%.17g"

REPORT_HEADER_TEMPLATE = """# {title}
# version = {version}
# command = {command}
"""

PARAMETER_LINE_TEMPLATE = "{name} = {value}{sigma}{annotation}"

CALIBRATION_TEMPLATE = """[targets]
{targets}

[parameters]
{parameters}

[achieved]
{achieved}

[residuals]
{residuals}

[met]
{met}

[rolloff_exponents_tried]
{tried}
"""

FIT_TEMPLATE = """[fit]
kind = {kind}
converged = {converged}
identifiable = {identifiable}
residual_norm = {residual_norm}

[parameters]
{parameters}
{derived}"""

ESTIMATE_TEMPLATE = """[estimate]
{lines}
"""

SWEEP_SUMMARY_TEMPLATE = """[grid]
{grid}

[findings]
{findings}

[reference]
{reference}
"""


def format_value(value) -> str:
    """Render a scalar so that parsing it back reproduces it exactly."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return "none"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return repr(value)
    return str(value)


class ReportBuilder:
    """Builds structured-text reports for each command."""

    @staticmethod
    def header(title: str, version: str, command: str, echo: list[str] | None = None) -> str:
        """Report header followed by the resolved configuration echo."""
        text = REPORT_HEADER_TEMPLATE.format(title=title, version=version, command=command)
        for line in echo or []:
            text += f"# {line}\n"
        return text

    @staticmethod
    def parameter_lines(values: dict, sigmas: dict | None = None,
                        annotations: dict | None = None) -> str:
        lines = []
        for name, value in values.items():
            sigma = ""
            if sigmas and name in sigmas:
                sigma = f" ± {format_value(sigmas[name])}"
            annotation = ""
            if annotations and annotations.get(name):
                annotation = f"  # {annotations[name]}"
            lines.append(PARAMETER_LINE_TEMPLATE.format(
                name=name, value=format_value(value), sigma=sigma, annotation=annotation,
            ))
        return "\n".join(lines)

    @staticmethod
    def calibration(report) -> str:
        targets = report.targets
        target_values = {
            "secular_freq_MHz": targets.secular_omega / (2 * math.pi) / 1e6,
            "depth_eV": targets.depth / constants.e,
            "max_deviation": targets.max_deviation,
            "deviation_extent_um": targets.deviation_extent * 1e6,
        }
        achieved = dict(report.achieved)
        achieved_values = {
            "secular_freq_MHz": achieved["secular_omega"] / (2 * math.pi) / 1e6,
            "depth_eV": achieved["depth"] / constants.e,
            "depth_location_um": achieved["depth_location"] * 1e6,
            "max_deviation": achieved["max_deviation"],
        }
        tried = "\n".join(
            ReportBuilder.parameter_lines({f"n={t['rolloff_exponent']:g}": t["rolloff_order"]})
            for t in report.exponents_tried
        )
        return CALIBRATION_TEMPLATE.format(
            targets=ReportBuilder.parameter_lines(target_values),
            parameters=ReportBuilder.parameter_lines(report.parameters),
            achieved=ReportBuilder.parameter_lines(achieved_values),
            residuals=ReportBuilder.parameter_lines(report.residuals),
            met=ReportBuilder.parameter_lines(report.met),
            tried=tried,
        )

    @staticmethod
    def fit(fit) -> str:
        derived = ""
        if fit.decaying_fraction is not None:
            derived = f"\n[derived]\ndecaying_fraction = {format_value(fit.decaying_fraction)}\n"
        return FIT_TEMPLATE.format(
            kind=fit.kind,
            converged=format_value(fit.converged),
            identifiable=format_value(fit.identifiable),
            residual_norm=format_value(fit.residual_norm),
            parameters=ReportBuilder.parameter_lines(fit.params, fit.sigmas),
            derived=derived,
        )

    @staticmethod
    def estimate(values: dict, sigmas: dict | None = None) -> str:
        return ESTIMATE_TEMPLATE.format(lines=ReportBuilder.parameter_lines(values, sigmas))

    @staticmethod
    def sweep_summary(grid: dict, findings: dict, reference: dict) -> str:
        return SWEEP_SUMMARY_TEMPLATE.format(
            grid=ReportBuilder.parameter_lines(grid),
            findings=ReportBuilder.parameter_lines(findings),
            reference=ReportBuilder.parameter_lines(reference),
        )


def write_table(frame: pd.DataFrame, path: str | Path, header: list[str] | None = None) -> Path:
    """
    Write a delimited table preceded by '#' comment lines.

    Args:
        frame: Table to write.
        path: Destination file.
        header: Comment lines (without the leading '#').

    Returns:
        The written path.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for line in header or []:
            handle.write(f"# {line}\n")
        frame.to_csv(handle, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def read_table(path: str | Path) -> tuple[pd.DataFrame, dict]:
    """Read a table written by write_table; returns (frame, header key/values)."""
    header = {}
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            if not line.startswith("#"):
                break
            content = line[1:].strip()
            if "=" in content:
                key, _, value = content.partition("=")
                header[key.strip()] = value.split("  #")[0].strip()
    frame = pd.read_csv(path, comment="#", skip_blank_lines=True)
    return frame, header


def write_text(text: str, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="\n")
    return path
