#!/usr/bin/env python3
"""
Parameter sweeps over the acceptance protocols.

Key Features:
- Cartesian grid over the relaxation potential and surround sampling settings
- One score row per setting from the battery, overlap and Kanizsa protocols
- CSV table of the sweep through the shared report writer
"""

from __future__ import annotations

import itertools
import logging
import pathlib
from collections.abc import Iterable
from typing import Any, NamedTuple

from .config_schema import ModelConfig
from .experiments import run_kanizsa, run_overlap_vmi, run_zhou_battery
from .file_operations import write_csv
from .pipeline import Pipeline

logger = logging.getLogger(__name__)

TUNING_COLUMNS = [
    "potential_gain",
    "potential_mode",
    "sampling",
    "mean_improvement",
    "regressions",
    "overlap_fraction",
    "kanizsa_single_fraction",
    "failed_checks",
]


class TuningPoint(NamedTuple):

    """One setting of the swept parameters."""

    potential_gain: float
    potential_mode: str
    sampling: str

    def apply(self, config: ModelConfig) -> ModelConfig:
        """Configuration with this setting applied (validated)."""
        relaxed = config.with_overrides(
            "relax", potential_gain=self.potential_gain, potential_mode=self.potential_mode
        )
        return relaxed.with_overrides("surround", sampling=self.sampling)


def tuning_grid(
    gains: Iterable[float], modes: Iterable[str], samplings: Iterable[str]
) -> list[TuningPoint]:
    """Every combination of the given values, gains varying slowest."""
    return [TuningPoint(*values) for values in itertools.product(gains, modes, samplings)]


def score(config: ModelConfig) -> dict[str, Any]:
    """
    Run the battery, overlap and Kanizsa protocols and collect their headline numbers.

    Returns
    -------
    dict[str, Any]
        Mean square-pair improvement (percent), regressed pairs, overlap and
        single-inducer agreement fractions, and the number of failed checks
    """
    pipeline = Pipeline(config, threads=config.experiment.threads, cache_size=64)
    battery = run_zhou_battery(config, None, pipeline)
    overlap = run_overlap_vmi(config, None, pipeline)
    kanizsa = run_kanizsa(config, None, pipeline)
    reports = (battery, overlap, kanizsa)
    return {
        "mean_improvement": battery.data["mean_improvement_square_pairs"],
        "regressions": battery.data["regressions"],
        "overlap_fraction": overlap.data["agreement_post"]["fraction"],
        "kanizsa_single_fraction": kanizsa.data["1"]["into_pacman"]["fraction"],
        "failed_checks": sum(not c.passed for r in reports for c in r.checks),
    }


def run_tuning(
    config: ModelConfig, points: list[TuningPoint], out_dir: pathlib.Path | None = None
) -> list[dict[str, Any]]:
    """
    Score every point of a sweep.

    Parameters
    ----------
    config : ModelConfig
        Base configuration; each point overrides its own keys
    points : list[TuningPoint]
        Settings to score
    out_dir : pathlib.Path | None, optional
        Directory for ``tuning.csv``, by default None (nothing written)

    Returns
    -------
    list[dict[str, Any]]
        One row per point in ``TUNING_COLUMNS`` order
    """
    rows = []
    for point in points:
        logger.info("Scoring %s", point)
        row = {**point._asdict(), **score(point.apply(config))}
        logger.info(
            "gain %.3g %s %s: improvement %s %%, %d regressions",
            point.potential_gain,
            point.potential_mode,
            point.sampling,
            row["mean_improvement"],
            row["regressions"],
        )
        rows.append(row)
    if out_dir is not None:
        write_csv(rows, pathlib.Path(out_dir) / "tuning.csv", TUNING_COLUMNS)
    return rows


def best_point(rows: list[dict[str, Any]]) -> dict[str, Any] | None:
    """Row with the fewest failed checks, then fewest regressions, then largest improvement."""
    if not rows:
        return None
    return min(
        rows,
        key=lambda row: (
            row["failed_checks"],
            row["regressions"],
            -(row["mean_improvement"] if row["mean_improvement"] is not None else float("-inf")),
        ),
    )
