"""Command-line application for the electron trap simulator."""

import argparse
import sys

from config import Config
from core.error_handler import ErrorClassifier, TrapSimError, format_error_context
from core.run_config import load_run_config
from runner import SimulationRunner

# Subcommand flags and the configuration keys they set
COMMAND_FLAGS = {
    "trajectory": [
        ("--x0-um", "x0_um", "ionization distance (um)"),
        ("--phase-rad", "phase_rad", "drive phase at ionization (rad)"),
        ("--cap-ms", "cap_ms", "storage-time cap (ms)"),
        ("--record-tail-us", "record_tail_us", "keep only the final window of the trajectory (us)"),
        ("--noise-sigma", "noise_sigma", "relative drive amplitude noise"),
    ],
    "sweep": [
        ("--grid", "grid", "distance x phase grid, e.g. 100x50"),
        ("--cap-ms", "cap_ms", "storage-time cap (ms)"),
        ("--x0-min-um", "x0_min_um", "innermost ionization distance (um)"),
        ("--x0-max-um", "x0_max_um", "outermost ionization distance (um)"),
    ],
    "tickle": [
        ("--fmin-mhz", "fmin_MHz", "scan start (MHz)"),
        ("--fmax-mhz", "fmax_MHz", "scan end (MHz)"),
        ("--step-mhz", "step_MHz", "scan increment (MHz)"),
        ("--amp", "tickle_amp_V_per_m", "tickle field amplitude (V/m)"),
        ("--duration-us", "tickle_duration_us", "tickle hold per frequency (us)"),
    ],
    "stability-diagram": [
        ("--a", "a", "Mathieu a (first row when scanning a)"),
        ("--a-max", "a_max", "last Mathieu a of a 2D scan"),
        ("--a-step", "a_step", "Mathieu a increment of a 2D scan"),
        ("--qmin", "qmin", "first Mathieu q"),
        ("--qmax", "qmax", "last Mathieu q"),
        ("--qstep", "qstep", "Mathieu q increment"),
    ],
    "calibrate": [
        ("--freq-mhz", "target_freq_MHz", "target radial secular frequency (MHz)"),
        ("--depth-ev", "depth_eV", "target trap depth (eV)"),
        ("--dev-pct", "dev_pct", "bound on the harmonic deviation (%)"),
        ("--extent-um", "extent_um", "extent of the deviation bound (um)"),
    ],
    "fit-loading": [],
    "fit-storage": [
        ("--two-component", "two_component", "let the long-lived population decay too (true/false)"),
    ],
    "estimate-n": [
        ("--p", "p_detect", "measured detection probability"),
        ("--cycles", "cycles", "number of cycles behind p (adds standard errors)"),
    ],
    "simulate-cycles": [
        ("--n-mean", "n_mean", "true mean electron number"),
        ("--cycles", "cycles", "number of cycles"),
    ],
}

FILE_COMMANDS = ("fit-loading", "fit-storage")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="etrap",
        description="Single-electron microwave Paul trap simulator and detection statistics.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {Config.VERSION}")
    subparsers = parser.add_subparsers(dest="command", required=True)

    for command, flags in COMMAND_FLAGS.items():
        sub = subparsers.add_parser(command)
        if command in FILE_COMMANDS:
            sub.add_argument("input", help="delimited (t_s, p_detect[, sigma]) table")
        for flag, key, help_text in flags:
            sub.add_argument(flag, dest=key, default=None, help=help_text)
        sub.add_argument("--config", default=None, help="key=value configuration file")
        sub.add_argument("--profile", default=None,
                         help=f"bundled profile name or 'none' (default: {Config.DEFAULT_PROFILE})")
        sub.add_argument("--output", default=None, help="output file")
        sub.add_argument("--set", dest="assignments", action="append", default=[],
                         metavar="KEY=VALUE", help="set any configuration key (repeatable)")
        sub.add_argument("--workers", default=None, help="parallel workers")
        sub.add_argument("--seed", default=None, help="random seed")
        sub.add_argument("--quiet", action="store_true", help="suppress progress lines")
    return parser


def collect_overrides(args: argparse.Namespace) -> dict:
    """Flag values keyed by configuration key; --set assignments come first."""
    overrides = {}
    for assignment in args.assignments:
        key, sep, value = assignment.partition("=")
        if not sep:
            raise argparse.ArgumentTypeError(f"--set expects KEY=VALUE, got {assignment!r}")
        overrides[key.strip()] = value.strip()
    for _, key, _ in COMMAND_FLAGS[args.command]:
        if getattr(args, key) is not None:
            overrides[key] = getattr(args, key)
    for key in ("input", "output", "workers", "seed"):
        if getattr(args, key, None) is not None:
            overrides[key] = getattr(args, key)
    return overrides


def main(argv: list[str] | None = None) -> int:
    """Run one command; returns 0 on success, 1 on domain errors, 2 on config errors."""
    parser = build_parser()
    args = parser.parse_args(argv)

    def progress(message: str):
        if not args.quiet:
            print(message, file=sys.stderr)

    try:
        overrides = collect_overrides(args)
        config = load_run_config(args.command, args.config, args.profile, overrides)
        SimulationRunner(config, progress_callback=progress).run()
    except argparse.ArgumentTypeError as exc:
        print(f"error[config]: {exc}", file=sys.stderr)
        return 2
    except TrapSimError as exc:
        print(format_error_context(exc), file=sys.stderr)
        return ErrorClassifier.classify(exc).exit_code
    except (OSError, ValueError, KeyError) as exc:
        print(format_error_context(exc), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
