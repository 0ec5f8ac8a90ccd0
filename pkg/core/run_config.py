"""Run configuration: dotenv-format key files with unit-annotated values."""

import math
import re
from dataclasses import dataclass, field
from io import StringIO
from pathlib import Path

from dotenv import dotenv_values
from scipy import constants

from config import Config
from core.error_handler import ConfigError
from core.reports import format_value

UNITS = {
    "frequency": {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6, "GHz": 1e9},
    "length": {"m": 1.0, "mm": 1e-3, "um": 1e-6, "nm": 1e-9},
    "time": {"s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9},
    "energy": {"J": 1.0, "eV": constants.e, "meV": 1e-3 * constants.e},
    "field": {"V_per_m": 1.0},
    "gradient": {"V_per_m2": 1.0},
    "charge": {"C": 1.0, "e": constants.e},
    "mass": {"kg": 1.0, "me": constants.m_e},
    "angle": {"rad": 1.0},
    "percent": {"pct": 1e-2},
    "dimensionless": {"": 1.0},
}

COMMANDS = (
    "trajectory", "sweep", "tickle", "stability-diagram", "calibrate",
    "fit-loading", "fit-storage", "estimate-n", "simulate-cycles",
)

_NUMBER = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?|[-+]?nan|[-+]?inf)\s*([A-Za-z_]*)\s*$")
_GRID = re.compile(r"^\s*(\d+)\s*[xX×]\s*(\d+)\s*$")


@dataclass(frozen=True)
class KeySpec:
    """One configuration key: value kind, unit, accepted range and default."""
    kind: str = "float"
    unit: str = ""
    dimension: str = "dimensionless"
    default: object = None
    minimum: float | None = None
    maximum: float | None = None
    exclusive_minimum: bool = False
    choices: tuple = ()

    def accepted(self) -> str:
        if self.choices:
            return ", ".join(self.choices)
        if self.kind == "grid":
            return "NxM with N, M >= 2"
        lo = "-inf" if self.minimum is None else format_value(self.minimum)
        hi = "inf" if self.maximum is None else format_value(self.maximum)
        left = "(" if self.exclusive_minimum or self.minimum is None else "["
        units = "/".join(u for u in UNITS[self.dimension] if u)
        if not units:
            return f"{left}{lo}, {hi}]"
        return f"{left}{lo}, {hi}] {self.unit} (units: {units})"


def _f(unit="", dimension="dimensionless", default=None, minimum=None, maximum=None,
       exclusive_minimum=False):
    return KeySpec("float", unit, dimension, default, minimum, maximum, exclusive_minimum)


def _i(default=None, minimum=None, maximum=None):
    return KeySpec("int", default=default, minimum=minimum, maximum=maximum)


KEY_SPECS: dict[str, KeySpec] = {
    # Trap and drive
    "variant": KeySpec("str", default="calibrated",
                       choices=("calibrated", "harmonic", "anharmonic", "separable3d")),
    "radial_variant": KeySpec("str", default="calibrated",
                              choices=("calibrated", "harmonic", "anharmonic")),
    "drive_freq_GHz": _f("GHz", "frequency", None, 0.0, None, True),
    "amplitude_scale": _f(default=1.0, minimum=0.0),
    "gradient_V_per_m2": _f("V_per_m2", "gradient", None, 0.0, None, True),
    "rolloff_scale_um": _f("um", "length", None, 0.0, None, True),
    "rolloff_order": _f(default=None, minimum=0.0, exclusive_minimum=True),
    "rolloff_exponent": _f(default=2.0, minimum=0.0, exclusive_minimum=True),
    "axial_freq_MHz": _f("MHz", "frequency", 40.0, 0.0),
    "loss_onset_order": _i(7, 2),
    "particle_charge_e": _f("e", "charge", -1.0),
    "particle_mass_me": _f("me", "mass", 1.0, 0.0, None, True),
    # Integration
    "steps_per_period": _i(128, 32),
    "escape_radius_um": _f("um", "length", 500.0, 0.0, None, True),
    "cap_ms": _f("ms", "time", 1.0, 0.0, None, True),
    "noise_sigma": _f(default=0.0, minimum=0.0),
    "noise_hold_periods": _i(1, 1),
    # trajectory
    "x0_um": _f("um", "length", None, -1e6, 1e6),
    "phase_rad": _f("rad", "angle", 0.0),
    "record_tail_us": _f("us", "time", None, 0.0, None, True),
    # sweep
    "grid": KeySpec("grid", default="100x50"),
    "x0_min_um": _f("um", "length", 1.0, 0.0),
    "x0_max_um": _f("um", "length", 450.0, 0.0, None, True),
    "capture_window_us": _f("us", "time", 20.0, 0.0, None, True),
    "lock_tolerance_MHz": _f("MHz", "frequency", 1.0, 0.0, None, True),
    # tickle
    "fmin_MHz": _f("MHz", "frequency", 20.0, 0.0, None, True),
    "fmax_MHz": _f("MHz", "frequency", 350.0, 0.0, None, True),
    "step_MHz": _f("MHz", "frequency", 1.0, 0.0, None, True),
    "tickle_amp_V_per_m": _f("V_per_m", "field", None, 0.0),
    "tickle_duration_us": _f("us", "time", 10.0, 0.0, None, True),
    "gradient_length_um": _f("um", "length", None, 0.0, None, True),
    "ensemble_size": _i(16, 1),
    "core_radius_um": _f("um", "length", 50.0, 0.0, None, True),
    # stability-diagram
    "a": _f(default=0.0),
    "a_max": _f(default=None),
    "a_step": _f(default=None, minimum=0.0, exclusive_minimum=True),
    "qmin": _f(default=0.0, minimum=0.0),
    "qmax": _f(default=1.0, minimum=0.0),
    "qstep": _f(default=0.001, minimum=0.0, exclusive_minimum=True),
    # calibrate
    "target_freq_MHz": _f("MHz", "frequency", 300.0, 0.0, None, True),
    "depth_eV": _f("eV", "energy", 1.3, 0.0, None, True),
    "dev_pct": _f("pct", "percent", 2.0, 0.0, 100.0, True),
    "extent_um": _f("um", "length", 200.0, 0.0, None, True),
    # fits
    "input": KeySpec("path"),
    "two_component": KeySpec("bool", default=False),
    # detection chain and estimate
    "extraction_efficiency": _f(default=1.0, minimum=0.0, maximum=1.0),
    "mesh_open_area": _f(default=0.5, minimum=0.0, maximum=1.0),
    "mcp_open_area": _f(default=0.6, minimum=0.0, maximum=1.0),
    "voltage_factor": _f(default=0.4, minimum=0.0, maximum=1.0),
    "p_detect": _f(default=None, minimum=0.0, maximum=1.0),
    "cycles": _i(None, 1),
    # simulate-cycles
    "n_mean": _f(default=None, minimum=0.0),
    "t_load_us": _f("us", "time", 10.0, 0.0),
    "t_wait_ms": _f("ms", "time", 0.0, 0.0),
    "readout_offset_ns": _f("ns", "time", 100.0, 0.0),
    "readout_width_ns": _f("ns", "time", 50.0, 0.0, None, True),
    "background_rate": _f(default=1e-4, minimum=0.0),
    "deadtime_ns": _f("ns", "time", 60.0, 0.0),
    "bin_width_ns": _f("ns", "time", 1.0, 0.0, None, True),
    "peak_fwhm_ns": _f("ns", "time", 2.0, 0.0, None, True),
    # run
    "seed": _i(Config.DEFAULT_SEED, 0, 2 ** 64 - 1),
    "workers": _i(Config.WORKERS, 1),
    "output": KeySpec("path"),
}

_MODEL_KEYS = ("drive_freq_GHz",)

REQUIRED_KEYS = {
    "trajectory": _MODEL_KEYS + ("x0_um", "cap_ms"),
    "sweep": _MODEL_KEYS + ("grid", "cap_ms"),
    "tickle": _MODEL_KEYS + ("tickle_amp_V_per_m",),
    "stability-diagram": (),
    "calibrate": _MODEL_KEYS,
    "fit-loading": ("input",),
    "fit-storage": ("input",),
    "estimate-n": ("p_detect",),
    "simulate-cycles": ("n_mean", "cycles"),
}

VARIANT_KEYS = {
    "harmonic": ("gradient_V_per_m2",),
    "anharmonic": ("gradient_V_per_m2", "rolloff_scale_um", "rolloff_order"),
}


def convert_value(key: str, raw) -> object:
    """Parse one raw value into the key's kind and unit."""
    spec = KEY_SPECS[key]
    text = str(raw).strip()

    if spec.kind == "str":
        if text not in spec.choices:
            raise ConfigError(
                f"key '{key}': unknown value {text!r}. Choose from: {list(spec.choices)}",
                key=key, accepted=spec.accepted(),
            )
        return text
    if spec.kind == "path":
        if not text:
            raise ConfigError(f"key '{key}': empty path", key=key, accepted="a file path")
        return text
    if spec.kind == "bool":
        lowered = text.lower()
        if lowered in ("true", "1", "yes", "on"):
            return True
        if lowered in ("false", "0", "no", "off"):
            return False
        raise ConfigError(f"key '{key}': expected true/false, got {text!r}", key=key,
                          accepted="true, false")
    if spec.kind == "grid":
        match = _GRID.match(text)
        if not match or int(match.group(1)) < 2 or int(match.group(2)) < 2:
            raise ConfigError(f"key '{key}': expected NxM, got {text!r}", key=key,
                              accepted=spec.accepted())
        return f"{int(match.group(1))}x{int(match.group(2))}"

    match = _NUMBER.match(text)
    if not match:
        raise ConfigError(f"key '{key}': cannot parse {text!r} as a number", key=key,
                          accepted=spec.accepted())
    number, unit = match.group(1), match.group(2)
    if spec.kind == "int":
        if unit:
            raise ConfigError(f"key '{key}': integers take no unit, got {unit!r}", key=key,
                              accepted=spec.accepted())
        try:
            value = int(number)
        except ValueError:
            value = float(number)
            if not (math.isfinite(value) and value == int(value)):
                raise ConfigError(f"key '{key}': expected an integer, got {text!r}", key=key,
                                  accepted=spec.accepted())
            value = int(value)
    else:
        value = float(number)
        if unit and unit != spec.unit:
            table = UNITS[spec.dimension]
            if unit not in table:
                raise ConfigError(
                    f"key '{key}': unit mismatch, {unit!r} is not a {spec.dimension} unit",
                    key=key, accepted="/".join(u for u in table if u) or "no unit",
                )
            value = value * table[unit] / table[spec.unit]
        if not math.isfinite(value):
            raise ConfigError(f"key '{key}': value must be finite, got {text!r}", key=key,
                              accepted=spec.accepted())

    below = spec.minimum is not None and (
        value <= spec.minimum if spec.exclusive_minimum else value < spec.minimum
    )
    above = spec.maximum is not None and value > spec.maximum
    if below or above:
        raise ConfigError(
            f"key '{key}': value {format_value(value)} outside accepted range {spec.accepted()}",
            key=key, accepted=spec.accepted(),
        )
    return value


@dataclass
class RunConfig:
    """Validated run configuration; values in key units, SI through si()."""
    command: str
    values: dict
    sources: dict = field(default_factory=dict)
    annotations: dict = field(default_factory=dict)
    profile: str | None = None

    def get(self, key: str, default=None):
        value = self.values.get(key)
        return default if value is None else value

    def si(self, key: str) -> float | None:
        """Value of a numeric key in SI units."""
        value = self.values.get(key)
        if value is None:
            return None
        spec = KEY_SPECS[key]
        return float(value) * UNITS[spec.dimension][spec.unit]

    @property
    def seed(self) -> int:
        return int(self.values["seed"])

    @property
    def workers(self) -> int:
        return int(self.values["workers"])

    @property
    def grid(self) -> tuple[int, int]:
        n, m = self.values["grid"].split("x")
        return int(n), int(m)

    def echo_lines(self) -> list[str]:
        """Resolved configuration for output headers, one key per line."""
        lines = [f"command = {self.command}"]
        if self.profile:
            lines.append(f"profile = {self.profile}")
        for key, value in self.values.items():
            if value is None or key in ("output", "workers"):
                continue
            note = self.annotations.get(key, "")
            suffix = f"  # [{self.sources.get(key, 'default')}] {note}".rstrip()
            lines.append(f"{key} = {format_value(value)}{suffix}")
        return lines

    def emit(self) -> str:
        return emit_config(self)


def emit_config(config: RunConfig) -> str:
    """Render a configuration in the same key=value format parse_config reads."""
    lines = [f"command={config.command}"]
    for key, value in config.values.items():
        if value is None:
            continue
        note = config.annotations.get(key)
        lines.append(f"{key}={format_value(value)}" + (f"  # {note}" if note else ""))
    return "\n".join(lines) + "\n"


def _read_annotations(text: str) -> dict:
    """Inline '# note' comments after unquoted values."""
    notes = {}
    for line in text.splitlines():
        stripped = line.strip()
        if not stripped or stripped.startswith("#") or "=" not in stripped:
            continue
        key, _, rest = stripped.partition("=")
        if " #" in rest:
            notes[key.strip()] = rest.split(" #", 1)[1].strip()
    return notes


def load_profile(name: str) -> tuple[dict, dict]:
    """Raw values and annotations of a bundled profile."""
    path = Config.profile_path(name)
    if not path.exists():
        raise ConfigError(f"key 'profile': unknown profile {name!r}", key="profile",
                          accepted=Config.DEFAULT_PROFILE)
    text = path.read_text(encoding="utf-8")
    return dict(dotenv_values(stream=StringIO(text))), _read_annotations(text)


def parse_config(text: str = "", command: str | None = None, profile: str | None = None,
                 overrides: dict | None = None) -> RunConfig:
    """
    Build a RunConfig from config text, an optional profile and flag overrides.

    Precedence: key defaults < profile < config text < overrides.

    Args:
        text: dotenv-format key=value lines; may set `command` and `profile`.
        command: Subcommand; overrides the one named in the text.
        profile: Bundled profile name, or None/"none" for none.
        overrides: Raw flag values keyed like the config keys.

    Raises:
        ConfigError: Unknown, missing, malformed or out-of-range keys.
    """
    raw = {k: v for k, v in dotenv_values(stream=StringIO(text or "")).items() if v is not None}
    text_notes = _read_annotations(text or "")
    command = command or raw.pop("command", None)
    raw.pop("command", None)
    if command not in COMMANDS:
        raise ConfigError(f"key 'command': unknown command {command!r}. Choose from: {list(COMMANDS)}",
                          key="command", accepted=", ".join(COMMANDS))
    profile = raw.pop("profile", None) if profile is None else profile
    if profile in ("none", ""):
        profile = None

    layers = []
    annotations = {}
    if profile:
        profile_values, profile_notes = load_profile(profile)
        layers.append(("profile", profile_values))
        annotations.update(profile_notes)
    layers.append(("config", raw))
    annotations.update(text_notes)
    layers.append(("flag", {k: v for k, v in (overrides or {}).items() if v is not None}))

    values = {key: spec.default for key, spec in KEY_SPECS.items()}
    sources = {key: "default" for key in KEY_SPECS}
    for source, layer in layers:
        for key, value in layer.items():
            if key not in KEY_SPECS:
                raise ConfigError(f"key '{key}': unknown key", key=key,
                                  accepted="see profiles/reference_trap.env")
            values[key] = convert_value(key, value)
            sources[key] = source

    missing = [k for k in REQUIRED_KEYS[command] if values.get(k) is None]
    if command in ("trajectory", "sweep", "tickle", "calibrate"):
        variant = values["variant"]
        if variant == "separable3d":
            variant = values["radial_variant"]
        missing += [k for k in VARIANT_KEYS.get(variant, ()) if values.get(k) is None]
    if missing:
        raise ConfigError(
            f"key '{missing[0]}': missing required key for {command} (missing: {', '.join(missing)})",
            key=missing[0], accepted=KEY_SPECS[missing[0]].accepted(),
        )
    if command == "stability-diagram" and values["qmax"] < values["qmin"]:
        raise ConfigError("key 'qmax': qmax must be >= qmin", key="qmax", accepted=f">= {values['qmin']}")
    if command == "sweep" and values["x0_max_um"] <= values["x0_min_um"]:
        raise ConfigError("key 'x0_max_um': must exceed x0_min_um", key="x0_max_um",
                          accepted=f"> {values['x0_min_um']}")
    if command == "tickle" and values["fmax_MHz"] < values["fmin_MHz"]:
        raise ConfigError("key 'fmax_MHz': must be >= fmin_MHz", key="fmax_MHz",
                          accepted=f">= {values['fmin_MHz']}")

    return RunConfig(command=command, values=values, sources=sources,
                     annotations=annotations, profile=profile)


def load_run_config(command: str, config_path: str | Path | None = None,
                    profile: str | None = None,
                    overrides: dict | None = None) -> RunConfig:
    """
    parse_config over an optional config file.

    Without a --profile flag or a profile key in the file, the bundled
    reference profile applies.
    """
    text = ""
    if config_path is not None:
        path = Path(config_path)
        if not path.exists():
            raise ConfigError(f"key 'config': file not found: {path}", key="config",
                              accepted="an existing file")
        text = path.read_text(encoding="utf-8")
    if profile is None and not re.search(r"^\s*profile\s*=", text, re.MULTILINE):
        profile = Config.DEFAULT_PROFILE
    return parse_config(text, command=command, profile=profile, overrides=overrides)
