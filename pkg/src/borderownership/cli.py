#!/usr/bin/env python3
"""
Command-line interface for the border-ownership simulator.

Usage:
    borderownership run --experiment zhou_battery --out out/
    borderownership run --experiment all --config model.yaml --threads 4
    borderownership dump-kernels --out kernels/
    borderownership render-stimulus --kind c_shape --side right --out c.pgm
    borderownership validate-config model.yaml
    borderownership tune --gain 5 10 20 --sampling point area --out tuning/

Exit codes:
    0  success
    1  a report check failed
    2  configuration or usage error (including validate-config failures)
    3  unexpected system error
"""

from __future__ import annotations

import argparse
import logging
import pathlib
import sys
import textwrap
from typing import Any

import numpy as np

from .bos_types import (
    ExitCode,
    ModelError,
    OperationResult,
    ShapeKind,
    Side,
    StimulusError,
    create_structured_error,
)
from .config_schema import (
    EXPERIMENTS,
    FAMILY_MODES,
    POTENTIAL_MODES,
    SURROUND_SAMPLING,
    ConfigError,
    ModelConfig,
    load_config,
    validate_config_file,
)
from .experiments import run_experiment
from .file_operations import dump_kernel_bank
from .filters import build_kernel_bank
from .output_formatter import (
    create_success_result,
    format_report_summary,
    format_tuning_summary,
    output_result,
)
from .stimulus import StimulusSpec, render_stimulus, write_pgm
from .tuning import best_point, run_tuning, tuning_grid

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(levelname)s %(name)s: %(message)s"


def configure_logging(verbose: bool = False, quiet: bool = False) -> None:
    """Configure root logging once (``--verbose`` DEBUG, ``--quiet`` WARNING, else INFO)."""
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr, force=True)


# =============================================================================
# Argument Parsing
# =============================================================================


def build_parser() -> argparse.ArgumentParser:
    """Build the argument parser with its five subcommands."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--format",
        choices=["human", "json"],
        default="human",
        help="Output format (default: %(default)s)",
    )
    common.add_argument("--quiet", action="store_true", help="Suppress non-essential output")
    common.add_argument("--verbose", action="store_true", help="Debug logging")
    common.add_argument("--config", type=pathlib.Path, help="YAML configuration file")

    parser = argparse.ArgumentParser(
        prog="borderownership",
        description="Border-ownership simulator with dorsal modulation and relaxation labeling",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=textwrap.dedent("""
        Examples:
          %(prog)s run --experiment zhou_battery --out out/
          %(prog)s run --experiment all --threads 4
          %(prog)s validate-config model.yaml
        """),
    )
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", parents=[common], help="Run an experiment")
    run.add_argument("--experiment", choices=EXPERIMENTS, help="Experiment protocol")
    run.add_argument("--out", type=pathlib.Path, help="Output directory")
    run.add_argument("--neuron", help="Neuron selector 'orientation,feature,side'")
    run.add_argument(
        "--seed",
        type=int,
        help="Seed recorded in the report (the model draws no random numbers)",
    )
    run.add_argument("--threads", type=int, help="Worker threads")
    run.add_argument(
        "--dump-maps",
        action="store_true",
        help="Also dump intermediate volumes, populations and per-iteration confidences",
    )

    tune = commands.add_parser(
        "tune", parents=[common], help="Score relaxation and surround settings"
    )
    tune.add_argument("--gain", type=float, nargs="+", help="Potential gains to try")
    tune.add_argument("--mode", choices=POTENTIAL_MODES, nargs="+", help="Potential forms")
    tune.add_argument("--sampling", choices=SURROUND_SAMPLING, nargs="+", help="Surround sampling")
    tune.add_argument("--families", choices=FAMILY_MODES, help="Neurons measured by the battery")
    tune.add_argument("--threads", type=int, help="Worker threads")
    tune.add_argument("--out", type=pathlib.Path, help="Directory for tuning.csv")

    kernels = commands.add_parser(
        "dump-kernels", parents=[common], help="Write the kernel bank as text grids"
    )
    kernels.add_argument("--out", type=pathlib.Path, default=pathlib.Path("kernels"))

    render = commands.add_parser(
        "render-stimulus", parents=[common], help="Write one stimulus as a PGM"
    )
    render.add_argument("--kind", choices=[k.value for k in ShapeKind], default="square")
    render.add_argument("--side", choices=[s.value for s in Side], default="left")
    render.add_argument("--size-deg", type=float)
    render.add_argument("--offset-px", type=int)
    render.add_argument("--rotation", type=int, choices=[0, 90])
    render.add_argument("--count", type=int)
    render.add_argument("--figure-lum", type=float)
    render.add_argument("--ground-lum", type=float)
    render.add_argument("--out", type=pathlib.Path, default=pathlib.Path("stimulus.pgm"))

    validate = commands.add_parser(
        "validate-config", parents=[common], help="Check a configuration file"
    )
    validate.add_argument("path", type=pathlib.Path, help="Configuration file")
    return parser


def _given(args: argparse.Namespace, names: dict[str, str]) -> dict[str, Any]:
    """Map the flags that were actually passed onto config keys."""
    values = {key: getattr(args, flag) for flag, key in names.items()}
    return {key: value for key, value in values.items() if value is not None}


def resolve_config(args: argparse.Namespace) -> ModelConfig:
    """Load the config file and apply ``run`` flag overrides to the experiment section."""
    config = load_config(args.config)
    if args.command != "run":
        return config
    overrides = _given(
        args,
        {
            "experiment": "name",
            "neuron": "neuron",
            "seed": "seed",
            "threads": "threads",
        },
    )
    if args.out is not None:
        overrides["output_dir"] = str(args.out)
    if args.dump_maps:
        overrides["dump_maps"] = True
    return config.with_overrides("experiment", **overrides) if overrides else config


# =============================================================================
# Commands
# =============================================================================


def command_run(args: argparse.Namespace) -> OperationResult:
    """Run the selected experiment and summarize its checks."""
    config = resolve_config(args)
    out_dir = pathlib.Path(config.experiment.output_dir)
    logger.info("Running %s into %s", config.experiment.name, out_dir)
    report = run_experiment(config, out_dir)
    data = {
        "experiment": report.experiment,
        "report": str(out_dir / report.experiment / "report.json"),
        "flagged": report.flagged,
        "summary": format_report_summary(report.to_dict()),
    }
    if report.flagged:
        failed = [
            f"{c.name}: {c.detail}" if c.detail else c.name
            for c in report.checks
            if not c.passed
        ]
        return OperationResult(
            success=False,
            exit_code=ExitCode.REPORT_FAILURE,
            message=f"Experiment '{report.experiment}' finished with failed checks",
            data=data,
            errors=failed,
            warnings=[],
        )
    return create_success_result(f"Experiment '{report.experiment}' passed all checks", data)


def command_dump_kernels(args: argparse.Namespace) -> OperationResult:
    """Write every kernel of the configured bank."""
    config = resolve_config(args)
    bank = build_kernel_bank(config.filters, config.canvas.px_per_deg, config.dorsal.gain)
    manifest = dump_kernel_bank(bank, args.out)
    count = sum(1 for _ in bank.named())
    return create_success_result(
        f"Wrote {count} kernels to {args.out}", {"manifest": str(manifest), "count": count}
    )


def command_render_stimulus(args: argparse.Namespace) -> OperationResult:
    """Render one stimulus from the configured defaults and flag overrides."""
    config = resolve_config(args)
    overrides = _given(
        args,
        {
            "size_deg": "size_deg",
            "offset_px": "offset_px",
            "rotation": "rotation",
            "count": "count",
            "figure_lum": "figure_lum",
            "ground_lum": "ground_lum",
        },
    )
    spec = StimulusSpec.from_config(
        ShapeKind(args.kind),
        config.stimulus,
        config.canvas,
        figure_side=Side(args.side),
        **overrides,
    )
    canvas = render_stimulus(spec)
    path = write_pgm(canvas, args.out)
    metadata = {k: v for k, v in canvas.metadata.items() if not isinstance(v, np.ndarray)}
    warnings = ["Figure clipped by the canvas"] if canvas.metadata.get("clipped") else []
    return create_success_result(
        f"Wrote {spec.shape_kind} stimulus to {path}",
        {"path": str(path), "digest": canvas.digest(), "metadata": metadata},
        warnings,
    )


def command_tune(args: argparse.Namespace) -> OperationResult:
    """Score a grid of relaxation and surround settings on the acceptance protocols."""
    config = resolve_config(args)
    overrides = _given(args, {"families": "families", "threads": "threads"})
    if overrides:
        config = config.with_overrides("experiment", **overrides)
    points = tuning_grid(
        args.gain or [config.relax.potential_gain],
        args.mode or [config.relax.potential_mode],
        args.sampling or [config.surround.sampling],
    )
    logger.info("Scoring %d settings", len(points))
    rows = run_tuning(config, points, args.out)
    best = best_point(rows)
    data: dict[str, Any] = {
        "rows": rows,
        "best": best,
        "summary": format_tuning_summary(rows, best),
    }
    if args.out is not None:
        data["table"] = str(args.out / "tuning.csv")
    return create_success_result(f"Scored {len(rows)} settings", data)


def command_validate_config(args: argparse.Namespace) -> OperationResult:
    """Validate a configuration file, reporting every problem with its line."""
    result = validate_config_file(args.path)
    if result.is_valid:
        return create_success_result(f"Configuration is valid: {args.path}", result.context)
    return create_structured_error(
        f"Configuration is invalid: {args.path}",
        ExitCode.CONFIG_ERROR,
        result.errors,
        {"file": str(args.path)},
    )


COMMANDS = {
    "run": command_run,
    "dump-kernels": command_dump_kernels,
    "render-stimulus": command_render_stimulus,
    "validate-config": command_validate_config,
    "tune": command_tune,
}


# =============================================================================
# Entry Points
# =============================================================================


def cli_main(argv: list[str] | None = None) -> int:
    """
    Parse arguments, run one command and return its exit code.

    Parameters
    ----------
    argv : list[str] | None, optional
        Command line arguments, by default ``sys.argv[1:]``

    Returns
    -------
    int
        Process exit code (see ``ExitCode``); usage errors give 2
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    configure_logging(args.verbose, args.quiet)
    try:
        result = COMMANDS[args.command](args)
    except (ConfigError, StimulusError) as e:
        result = create_structured_error(str(e), ExitCode.CONFIG_ERROR, [str(e)])
    except ModelError as e:
        logger.exception("Model error")
        result = create_structured_error(str(e), ExitCode.SYSTEM_ERROR, [str(e)])
    except OSError as e:
        result = create_structured_error(f"File system error: {e}", ExitCode.SYSTEM_ERROR, [str(e)])

    output_result(result, args.format, args.quiet)
    return result.exit_code.value


def main(argv: list[str] | None = None) -> None:
    """Console entry point."""
    sys.exit(cli_main(argv))


if __name__ == "__main__":
    main()
