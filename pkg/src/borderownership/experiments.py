#!/usr/bin/env python3
"""
Experiment protocols and report assembly.

Each protocol renders its displays, runs the pipeline on every canvas, reads
the responses at the probe, and returns an ``ExperimentReport`` carrying the
metric rows and a list of recorded checks. Failing checks flag the report;
they never abort the run.

Output layout under ``<out>/<experiment>/``::

    report.json  metrics.csv  <table>.csv
    <stimulus_id>/maps/*.pgm  <stimulus_id>/csv/readings.csv  <stimulus_id>/json/summary.json
    <stimulus_id>/dumps/...   (only with ``experiment.dump_maps``)
"""

from __future__ import annotations

import logging
import pathlib
from collections.abc import Callable, Iterable
from typing import Any, NamedTuple

import numpy as np

from .bos_types import (
    FEATURES,
    ORIENTATIONS,
    Feature,
    Neuron,
    Polarity,
    ShapeKind,
    Side,
    all_neurons,
)
from .config_schema import ModelConfig
from .file_operations import (
    REPORT_SCHEMA_VERSION,
    dump_confidences,
    dump_population,
    dump_volume,
    ensure_directory,
    pipeline_hash,
    write_csv,
    write_graymap,
    write_json,
)
from .metrics import (
    DIRECTION_SIDES,
    DirectionMap,
    direction_agreement,
    improvement_pct,
    max_direction_map,
    normalized_difference,
    vmi_field,
)
from .pipeline import Pipeline, PipelineResult
from .stimulus import (
    Canvas,
    StimulusSpec,
    central_patch_digest,
    odd_px,
    pair_spec,
    polarity_luminances,
    render_stimulus,
    write_pgm,
    zhou_battery,
)

logger = logging.getLogger(__name__)

ROW_COLUMNS = [
    "stimulus_id",
    "pair_id",
    "role",
    "neuron",
    "preferred",
    "R_pre",
    "R_post",
    "D_pre",
    "D_post",
    "improvement_pct",
    "iterations",
]
READING_COLUMNS = ["stimulus_id", "neuron", "R_pre", "R_post", "iterations"]
SQUARE_PAIRS = (
    "1_small_square",
    "2_small_square_reversed",
    "3_large_square",
    "4_large_square_reversed",
)
PREFERENCE_MARGIN = 0.05


# =============================================================================
# Report Types
# =============================================================================


class Check(NamedTuple):

    """A recorded assertion."""

    name: str
    passed: bool
    detail: str = ""


class ExperimentReport(NamedTuple):

    """Self-describing result of one experiment."""

    experiment: str
    config: dict[str, Any]
    rows: list[dict[str, Any]]
    checks: list[Check]
    artifacts: list[str]
    pipeline_version: str
    data: dict[str, Any]
    schema_version: str = REPORT_SCHEMA_VERSION

    @property
    def flagged(self) -> bool:
        """True when any recorded check failed."""
        return any(not check.passed for check in self.checks)

    def to_dict(self) -> dict[str, Any]:
        """Plain dictionary for JSON output."""
        return {
            "schema_version": self.schema_version,
            "experiment": self.experiment,
            "pipeline_version": self.pipeline_version,
            "flagged": self.flagged,
            "config": self.config,
            "checks": [c._asdict() for c in self.checks],
            "artifacts": self.artifacts,
            "rows": self.rows,
            "data": self.data,
        }


class Reading(NamedTuple):

    """Probe responses of one neuron on one canvas."""

    pre: float
    post: float
    iterations: int


class PairMetrics(NamedTuple):

    """Preferred vs non-preferred comparison of one A/B pair."""

    r_pref_pre: float
    r_nonpref_pre: float
    r_pref_post: float
    r_nonpref_post: float
    d_pre: float | None
    d_post: float | None
    improvement: float | None


def pair_metrics(preferred: Reading, nonpreferred: Reading) -> PairMetrics:
    """Normalized differences before and after relaxation."""
    d_pre = normalized_difference(preferred.pre, nonpreferred.pre)
    d_post = normalized_difference(preferred.post, nonpreferred.post)
    return PairMetrics(
        preferred.pre,
        nonpreferred.pre,
        preferred.post,
        nonpreferred.post,
        d_pre,
        d_post,
        improvement_pct(d_pre, d_post),
    )


def _fmt(value: float | None) -> str:
    return "n/a" if value is None else f"{value:.4g}"


# =============================================================================
# Report Builder
# =============================================================================


class ReportBuilder:

    """Collects rows, checks and artifacts; writes files when an output root is set."""

    def __init__(self, experiment: str, config: ModelConfig, out_dir: pathlib.Path | None):
        """Initialize the builder."""
        self.experiment = experiment
        self.config = config
        self.root = pathlib.Path(out_dir) / experiment if out_dir is not None else None
        self.rows: list[dict[str, Any]] = []
        self.checks: list[Check] = []
        self.artifacts: list[str] = []
        self.tables: dict[str, list[dict[str, Any]]] = {}
        self.iterations: list[int] = []
        self.potential_bounds = [0.0, 0.0]

    def check(self, name: str, passed: bool, detail: str = "") -> None:
        """Record an assertion."""
        self.checks.append(Check(name, bool(passed), detail))
        if not passed:
            logger.warning("%s: check '%s' failed %s", self.experiment, name, detail)

    def add_artifact(self, path: pathlib.Path) -> None:
        """Record a written file relative to the experiment directory."""
        assert self.root is not None
        self.artifacts.append(path.relative_to(self.root).as_posix())

    def read(
        self, pipeline: Pipeline, stimulus_id: str, canvas: Canvas, neurons: Iterable[Neuron]
    ) -> dict[Neuron, Reading]:
        """Run one canvas and read the probe responses of ``neurons``."""
        result = pipeline.run(canvas)
        neurons = list(dict.fromkeys(neurons))
        iterations = result.relaxation.iterations
        readings = {
            n: Reading(result.readout(n, final=False), result.readout(n), iterations)
            for n in neurons
        }
        self.observe(result)
        self.write_stimulus(stimulus_id, result, readings)
        return readings

    def observe(self, result: PipelineResult) -> None:
        """Track relaxation iterations and potential bounds."""
        low, high = result.potential_range
        self.iterations.append(result.relaxation.iterations)
        lowest, highest = self.potential_bounds
        self.potential_bounds = [min(lowest, low), max(highest, high)]

    def write_stimulus(
        self,
        stimulus_id: str,
        result: PipelineResult,
        readings: dict[Neuron, Reading],
        extra: dict[str, Any] | None = None,
    ) -> None:
        """Write the per-stimulus ``maps``, ``csv`` and ``json`` artifacts."""
        if self.root is None:
            return
        base = self.root / stimulus_id
        self.add_artifact(write_pgm(result.canvas, base / "maps" / "stimulus.pgm"))
        for neuron in readings:
            stem = f"{neuron.orientation}_{neuron.feature}_{neuron.side}"
            for tag, pop in (("pre", result.initial), ("post", result.final)):
                path = base / "maps" / f"{stem}_{tag}.pgm"
                write_graymap(pop.response(neuron), path)
                self.add_artifact(path)
        rows = [
            {
                "stimulus_id": stimulus_id,
                "neuron": str(n),
                "R_pre": r.pre,
                "R_post": r.post,
                "iterations": r.iterations,
            }
            for n, r in readings.items()
        ]
        self.add_artifact(write_csv(rows, base / "csv" / "readings.csv", READING_COLUMNS))
        metadata = {
            k: v for k, v in result.canvas.metadata.items() if not isinstance(v, np.ndarray)
        }
        summary = {
            "stimulus_id": stimulus_id,
            "canvas_digest": result.canvas.digest(),
            "central_patch_digest": central_patch_digest(result.canvas),
            "metadata": metadata,
            "relaxation": {
                "iterations": result.relaxation.iterations,
                "converged": result.relaxation.converged,
                "max_deltas": result.relaxation.max_deltas,
                "potential_range": list(result.potential_range),
            },
            **(extra or {}),
        }
        self.add_artifact(write_json(summary, base / "json" / "summary.json"))
        if self.config.experiment.dump_maps:
            self.write_dumps(base / "dumps", result)

    def write_dumps(self, directory: pathlib.Path, result: PipelineResult) -> None:
        """Dump intermediate volumes, both populations and the relaxation history."""
        if result.volumes is None:
            logger.warning("%s: no volumes kept, skipping map dumps", self.experiment)
            return
        for name, volume in result.volumes.items():
            self.add_artifact(dump_volume(volume, directory / name))
        for pop in (result.initial, result.final):
            self.add_artifact(dump_population(pop, directory / "populations"))
        history = result.relaxation.history
        if history is not None:
            self.add_artifact(dump_confidences(history, all_neurons(), directory / "relaxation"))

    def add_pair_rows(
        self,
        pair_id: str,
        neuron: Neuron,
        stimulus_ids: dict[str, str],
        readings: dict[str, Reading],
        preferred_role: str,
    ) -> PairMetrics:
        """Append one row per role for a neuron on an A/B pair and return its metrics."""
        other = next(role for role in readings if role != preferred_role)
        metrics = pair_metrics(readings[preferred_role], readings[other])
        for role, reading in readings.items():
            self.rows.append(
                {
                    "stimulus_id": stimulus_ids[role],
                    "pair_id": pair_id,
                    "role": role,
                    "neuron": str(neuron),
                    "preferred": role == preferred_role,
                    "R_pre": reading.pre,
                    "R_post": reading.post,
                    "D_pre": metrics.d_pre,
                    "D_post": metrics.d_post,
                    "improvement_pct": metrics.improvement,
                    "iterations": reading.iterations,
                }
            )
        return metrics

    def table(self, name: str, rows: list[dict[str, Any]]) -> None:
        """Attach an extra CSV table (written as ``<name>.csv``)."""
        self.tables.setdefault(name, []).extend(rows)

    def relaxation_checks(self) -> None:
        """Iteration bound and potential range over every canvas of the run."""
        max_iter = self.config.relax.max_iter
        worst = max(self.iterations, default=0)
        self.check("rl_iterations_bounded", worst <= max_iter, f"max {worst} of {max_iter}")
        low, high = self.potential_bounds
        self.check(
            "multiplier_in_range",
            -0.5 <= low and high <= 0.5,
            f"1+P in [{1 + low:.4g}, {1 + high:.4g}]",
        )

    def finish(self, data: dict[str, Any] | None = None) -> ExperimentReport:
        """Assemble the report and write ``metrics.csv``, tables and ``report.json``."""
        if self.root is not None:
            ensure_directory(self.root)
            self.add_artifact(write_csv(self.rows, self.root / "metrics.csv", ROW_COLUMNS))
            for name, rows in self.tables.items():
                columns = list(rows[0]) if rows else []
                self.add_artifact(write_csv(rows, self.root / f"{name}.csv", columns))
        report = ExperimentReport(
            experiment=self.experiment,
            config=self.config.to_dict(),
            rows=self.rows,
            checks=self.checks,
            artifacts=sorted(self.artifacts),
            pipeline_version=pipeline_hash(),
            data={**(data or {}), "tables": self.tables},
        )
        if self.root is not None:
            write_json(report.to_dict(), self.root / "report.json")
        logger.info(
            "%s: %d rows, %d/%d checks passed",
            self.experiment,
            len(self.rows),
            sum(c.passed for c in self.checks),
            len(self.checks),
        )
        return report


# =============================================================================
# Helpers
# =============================================================================


def families(config: ModelConfig) -> list[Neuron]:
    """Neurons under test: the selector, or one per (orientation, feature) family."""
    if config.experiment.families == "all":
        return [Neuron(o, f, o.sides[0]) for o in ORIENTATIONS for f in FEATURES]
    return [config.experiment.selected_neuron]


def matched_pair(
    config: ModelConfig,
    neuron: Neuron,
    kind: ShapeKind,
    matching: bool = True,
    **overrides: Any,
) -> tuple[StimulusSpec, StimulusSpec]:
    """
    ``(preferred, non-preferred)`` specs for ``neuron``: a display with the
    figure on the neuron's side and its contrast-matched partner.
    """
    orientation = neuron.orientation
    polarity = neuron.feature.polarity
    if not matching:
        polarity = Polarity.NEGATIVE if polarity is Polarity.POSITIVE else Polarity.POSITIVE
    figure_lum, ground_lum = polarity_luminances(polarity, config.stimulus)
    values: dict[str, Any] = {"figure_lum": figure_lum, "ground_lum": ground_lum}
    values.update(overrides)
    spec_a = StimulusSpec.from_config(
        kind, config.stimulus, config.canvas, figure_side=orientation.sides[0], **values
    )
    spec_b = pair_spec(spec_a)
    return (spec_a, spec_b) if neuron.side is orientation.sides[0] else (spec_b, spec_a)


def _measure_pair(
    builder: ReportBuilder,
    pipeline: Pipeline,
    neuron: Neuron,
    pair_id: str,
    specs: tuple[StimulusSpec, StimulusSpec],
) -> PairMetrics:
    ids = {"pref": f"{pair_id}_pref", "nonpref": f"{pair_id}_nonpref"}
    readings = {
        role: builder.read(pipeline, ids[role], render_stimulus(spec), [neuron])[neuron]
        for role, spec in zip(("pref", "nonpref"), specs, strict=True)
    }
    return builder.add_pair_rows(pair_id, neuron, ids, readings, "pref")


def _runner(config: ModelConfig, pipeline: Pipeline | None) -> Pipeline:
    return pipeline or Pipeline(config, threads=config.experiment.threads)


# =============================================================================
# Protocols
# =============================================================================


def run_zhou_battery(
    config: ModelConfig, out_dir: pathlib.Path | None = None, pipeline: Pipeline | None = None
) -> ExperimentReport:
    """
    Six-pair side-of-figure battery for each family and its opposite-side twin.

    Records probe responses for roles A and B before and after relaxation,
    normalized differences, improvement percentages, pair-identity hashes,
    and the acceptance checks as recorded assertions.
    """
    pipeline = _runner(config, pipeline)
    builder = ReportBuilder("zhou_battery", config, out_dir)

    groups: dict[tuple[Any, Polarity], list[Neuron]] = {}
    for neuron in families(config):
        groups.setdefault((neuron.orientation, neuron.feature.polarity), []).append(neuron)

    bars, energy = [], 0.0
    per_neuron: dict[Neuron, dict[str, PairMetrics]] = {}
    for (orientation, _), members in groups.items():
        neurons = [n for m in members for n in (m, m.twin())]
        items = zhou_battery(orientation, members[0].feature, config.stimulus, config.canvas)
        by_pair: dict[str, dict[str, Any]] = {}
        for item in items:
            readings = builder.read(pipeline, item.stimulus_id, item.canvas, neurons)
            by_pair.setdefault(item.pair_id, {})[item.role] = (item, readings)

        for pair_id, roles in by_pair.items():
            item_a, item_b = roles["A"][0], roles["B"][0]
            identical = central_patch_digest(item_a.canvas) == central_patch_digest(item_b.canvas)
            builder.check(f"pair_identity:{item_a.stimulus_id[:-2]}", identical)
            for neuron in neurons:
                preferred_role = "A" if neuron.side is orientation.sides[0] else "B"
                metrics = builder.add_pair_rows(
                    pair_id,
                    neuron,
                    {role: roles[role][0].stimulus_id for role in ("A", "B")},
                    {role: roles[role][1][neuron] for role in ("A", "B")},
                    preferred_role,
                )
                per_neuron.setdefault(neuron, {})[pair_id] = metrics
                a, b = roles["A"][1][neuron], roles["B"][1][neuron]
                if neuron in members:
                    energy = max(energy, a.pre, b.pre)
                bars.append(
                    {
                        "pair_id": pair_id,
                        "neuron": str(neuron),
                        "A_pre": a.pre,
                        "B_pre": b.pre,
                        "A_post": a.post,
                        "B_post": b.post,
                    }
                )

    builder.check("energy", energy > 0.0, f"max response {energy:.4g}")
    improvements, regressions = [], 0
    for neuron, pairs in per_neuron.items():
        d_pre = [m.d_pre for m in pairs.values()]
        d_post = [m.d_post for m in pairs.values()]
        builder.check(
            f"preference_pre:{neuron}",
            all(d is not None and d > 0 for d in d_pre),
            ", ".join(_fmt(d) for d in d_pre),
        )
        builder.check(
            f"preference_post:{neuron}",
            all(d is not None and d >= PREFERENCE_MARGIN for d in d_post),
            ", ".join(_fmt(d) for d in d_post),
        )
        for pair_id, m in pairs.items():
            if m.d_pre is not None and m.d_post is not None and m.d_post < m.d_pre:
                regressions += 1
            if pair_id in SQUARE_PAIRS and m.improvement is not None:
                improvements.append(m.improvement)
    mean_improvement = float(np.mean(improvements)) if improvements else None
    builder.check(
        "mean_improvement_square_pairs",
        mean_improvement is not None and mean_improvement >= 100.0,
        f"{_fmt(mean_improvement)} %",
    )
    builder.check("no_regression", regressions == 0, f"{regressions} pairs with D_post < D_pre")
    builder.relaxation_checks()
    builder.table("bars", bars)
    return builder.finish(
        {"mean_improvement_square_pairs": mean_improvement, "regressions": regressions}
    )


def run_position_sweep(
    config: ModelConfig, out_dir: pathlib.Path | None = None, pipeline: Pipeline | None = None
) -> ExperimentReport:
    """
    Move the border across the receptive field at the fixed probe.

    Offsets span ``+-(RF - 1)`` of the largest ventral receptive field in
    ``position_step_px`` steps, for the preferred and non-preferred displays.
    """
    pipeline = _runner(config, pipeline)
    builder = ReportBuilder("position_sweep", config, out_dir)
    neuron = config.experiment.selected_neuron
    reach = max(odd_px(d, config.canvas.px_per_deg) for d in config.filters.ventral_rf_deg) - 1
    step = config.experiment.position_step_px
    offsets = sorted({*range(0, reach + 1, step), *range(0, -reach - 1, -step)})

    sweep = []
    for offset in offsets:
        specs = matched_pair(config, neuron, ShapeKind.SQUARE, offset_px=offset)
        m = _measure_pair(builder, pipeline, neuron, f"offset_{offset:+d}", specs)
        sweep.append(
            {
                "offset_px": offset,
                "R_pref_pre": m.r_pref_pre,
                "R_nonpref_pre": m.r_nonpref_pre,
                "R_pref_post": m.r_pref_post,
                "R_nonpref_post": m.r_nonpref_post,
                "D_pre": m.d_pre,
                "D_post": m.d_post,
            }
        )

    pref = np.array([row["R_pref_post"] for row in sweep])
    peak_index = int(pref.argmax())
    peak_offset = offsets[peak_index]
    builder.check("peak_at_center", abs(peak_offset) <= 2, f"argmax offset {peak_offset:+d} px")
    rising = np.all(np.diff(pref[: peak_index + 1]) >= 0)
    falling = np.all(np.diff(pref[peak_index:]) <= 0)
    builder.check("unimodal", bool(rising and falling))
    threshold = 0.1 * float(pref.max())
    dominant = all(
        row["R_pref_post"] > row["R_nonpref_post"]
        for row in sweep
        if row["R_pref_post"] > threshold
    )
    builder.check("preferred_dominates", dominant, f"threshold {threshold:.4g}")
    builder.relaxation_checks()
    builder.table("sweep", sweep)
    return builder.finish({"neuron": str(neuron), "offsets_px": offsets})


def run_size_sweep(
    config: ModelConfig, out_dir: pathlib.Path | None = None, pipeline: Pipeline | None = None
) -> ExperimentReport:
    """Square sizes from the configured list plus an effectively full-canvas figure."""
    pipeline = _runner(config, pipeline)
    builder = ReportBuilder("size_sweep", config, out_dir)
    neuron = config.experiment.selected_neuron

    sweep = []
    sizes = [*config.experiment.sizes_deg, config.experiment.full_canvas_deg]
    for i, size in enumerate(sizes):
        full = i == len(sizes) - 1
        pair_id = "size_full" if full else f"size_{size:g}deg"
        specs = matched_pair(config, neuron, ShapeKind.SQUARE, size_deg=size)
        m = _measure_pair(builder, pipeline, neuron, pair_id, specs)
        sweep.append({"size_deg": size, "full_canvas": full, "D_pre": m.d_pre, "D_post": m.d_post})
        if not full:
            builder.check(
                f"positive_difference:{size:g}deg",
                m.d_post is not None and m.d_post > 0,
                f"D_pre {_fmt(m.d_pre)}, D_post {_fmt(m.d_post)}",
            )
    builder.relaxation_checks()
    builder.table("sizes", sweep)
    return builder.finish({"neuron": str(neuron), "full_canvas_D_post": sweep[-1]["D_post"]})


def run_solid_outline(
    config: ModelConfig, out_dir: pathlib.Path | None = None, pipeline: Pipeline | None = None
) -> ExperimentReport:
    """Compare the sign of the normalized difference for solid and outlined squares."""
    pipeline = _runner(config, pipeline)
    builder = ReportBuilder("solid_outline", config, out_dir)

    comparison = []
    for neuron in families(config):
        tag = f"{neuron.orientation}_{neuron.feature}_{neuron.side}"
        solid = _measure_pair(
            builder,
            pipeline,
            neuron,
            f"{tag}_solid",
            matched_pair(config, neuron, ShapeKind.SQUARE),
        )
        outline_specs = matched_pair(
            config,
            neuron,
            ShapeKind.OUTLINED_SQUARE,
            figure_lum=config.stimulus.figure_lum,
            ground_lum=config.stimulus.ground_lum,
        )
        outline = _measure_pair(builder, pipeline, neuron, f"{tag}_outline", outline_specs)
        same_sign = (
            solid.d_post is not None
            and outline.d_post is not None
            and np.sign(solid.d_post) == np.sign(outline.d_post)
        )
        builder.check(
            f"same_sign:{neuron}",
            same_sign,
            f"solid {_fmt(solid.d_post)}, outline {_fmt(outline.d_post)}",
        )
        comparison.append(
            {"neuron": str(neuron), "D_solid": solid.d_post, "D_outline": outline.d_post}
        )
    builder.relaxation_checks()
    builder.table("solid_outline", comparison)
    return builder.finish()


def _direction_rows(
    dmap: DirectionMap,
    vmi: np.ndarray | None,
    samples: Iterable[tuple],
    extra: Callable[[tuple], dict],
) -> list[dict[str, Any]]:
    rows = []
    for sample in samples:
        row, col = sample[0], sample[1]
        side = dmap.side_at(row, col)
        entry = {"row": row, "col": col, **extra(sample)}
        entry["direction"] = side.value if side else ""
        entry["strength"] = float(dmap.strength[row, col])
        if vmi is not None:
            entry.update({"vx": float(vmi[0, row, col]), "vy": float(vmi[1, row, col])})
        rows.append(entry)
    return rows


def _write_direction_maps(
    builder: ReportBuilder, stimulus_id: str, dmap: DirectionMap, vmi: np.ndarray | None
) -> None:
    if builder.root is None:
        return
    maps = builder.root / stimulus_id / "maps"
    path = maps / "direction.pgm"
    levels = np.asarray(dmap.direction, dtype=np.float64) + 1.0
    write_graymap(levels, path, vmax=len(DIRECTION_SIDES))
    builder.add_artifact(path)
    if vmi is not None:
        path = maps / "vmi_magnitude.pgm"
        write_graymap(np.hypot(vmi[0], vmi[1]), path)
        builder.add_artifact(path)


def run_overlap_vmi(
    config: ModelConfig, out_dir: pathlib.Path | None = None, pipeline: Pipeline | None = None
) -> ExperimentReport:
    """
    VMI and maximum-direction maps along the shared boundary of overlapping squares.

    The ground truth is the painter's-order occluder: every shared-boundary
    sample should be owned by it.
    """
    pipeline = _runner(config, pipeline)
    builder = ReportBuilder("overlap_vmi", config, out_dir)
    orientation = config.experiment.selected_neuron.orientation
    spec = StimulusSpec.from_config(
        ShapeKind.OVERLAPPING_SQUARES,
        config.stimulus,
        config.canvas,
        figure_side=orientation.sides[0],
    )
    canvas = render_stimulus(spec)
    stimulus_id = "overlapping_squares"
    result = pipeline.run(canvas)
    builder.observe(result)
    builder.write_stimulus(stimulus_id, result, {})

    pool = [Feature(f) for f in config.experiment.overlap_pool]
    samples = canvas.metadata["shared_boundary"]
    vmi = vmi_field(result.final)
    agreements = {}
    for tag, pop in (("pre", result.initial), ("post", result.final)):
        dmap = max_direction_map(pop, pool)
        agreements[tag] = direction_agreement(dmap, samples)
        if tag == "post":
            builder.table(
                "vmi",
                _direction_rows(dmap, vmi, samples, lambda s: {"expected": s[2].value}),
            )
            _write_direction_maps(builder, stimulus_id, dmap, vmi)

    post = agreements["post"]
    builder.check(
        "ownership_to_occluder",
        post.fraction is not None and post.fraction >= 0.8,
        f"{post.matched}/{post.active} active samples ({post.total} total)",
    )
    builder.relaxation_checks()
    return builder.finish(
        {
            "agreement_pre": agreements["pre"]._asdict(),
            "agreement_post": post._asdict(),
        }
    )


def run_kanizsa(
    config: ModelConfig, out_dir: pathlib.Path | None = None, pipeline: Pipeline | None = None
) -> ExperimentReport:
    """
    One, two and four Pac-Man inducers.

    Along the mouth edges (corner and rim excluded) ownership should point
    into the Pac-Man for a single inducer and flip toward the illusory square
    as the configuration completes.
    """
    pipeline = _runner(config, pipeline)
    builder = ReportBuilder("kanizsa", config, out_dir)
    pool = [Feature(f) for f in config.experiment.kanizsa_pool]

    outcome: dict[int, dict[str, Any]] = {}
    for count in (1, 2, 4):
        spec = StimulusSpec.from_config(
            ShapeKind.PACMAN_DISPLAY,
            config.stimulus,
            config.canvas,
            count=count,
            figure_side=Side.LEFT,
        )
        canvas = render_stimulus(spec)
        stimulus_id = f"pacman_{count}"
        result = pipeline.run(canvas)
        builder.observe(result)
        builder.write_stimulus(stimulus_id, result, {})
        dmap = max_direction_map(result.final, pool)
        edges = canvas.metadata["mouth_edges"]
        outcome[count] = {
            "edges": edges,
            "dmap": dmap,
            "into_pacman": direction_agreement(dmap, [(r, c, own) for r, c, own, _ in edges]),
            "toward_center": direction_agreement(dmap, [(r, c, ctr) for r, c, _, ctr in edges]),
        }
        builder.table(
            "mouth_edges",
            _direction_rows(
                dmap,
                None,
                edges,
                lambda s, count=count: {
                    "count": count,
                    "pacman_side": s[2].value,
                    "center_side": s[3].value,
                },
            ),
        )
        _write_direction_maps(builder, stimulus_id, dmap, None)

    single = outcome[1]["into_pacman"]
    builder.check(
        "single_into_pacman",
        single.fraction is not None and single.fraction >= 0.7,
        f"{single.matched}/{single.active} active samples",
    )
    common = {(r, c) for r, c, _, _ in outcome[1]["edges"]}
    toward = {}
    for count in (1, 4):
        samples = [(r, c, ctr) for r, c, _, ctr in outcome[count]["edges"] if (r, c) in common]
        toward[count] = direction_agreement(outcome[count]["dmap"], samples).matched
    builder.check(
        "flip_toward_center",
        toward[4] > toward[1],
        f"count 4: {toward[4]} vs count 1: {toward[1]} samples toward the center",
    )
    builder.relaxation_checks()
    return builder.finish(
        {
            str(count): {
                "into_pacman": o["into_pacman"]._asdict(),
                "toward_center": o["toward_center"]._asdict(),
            }
            for count, o in outcome.items()
        }
    )


EXPERIMENTS: dict[str, Callable[..., ExperimentReport]] = {
    "zhou_battery": run_zhou_battery,
    "position_sweep": run_position_sweep,
    "size_sweep": run_size_sweep,
    "solid_outline": run_solid_outline,
    "overlap_vmi": run_overlap_vmi,
    "kanizsa": run_kanizsa,
}


def run_all(
    config: ModelConfig, out_dir: pathlib.Path | None = None, pipeline: Pipeline | None = None
) -> ExperimentReport:
    """Run every protocol into its own subdirectory and summarize their checks."""
    pipeline = _runner(config, pipeline)
    builder = ReportBuilder("all", config, out_dir)
    summary = {}
    for name, run in EXPERIMENTS.items():
        report = run(config, out_dir, pipeline)
        summary[name] = {"flagged": report.flagged, "rows": len(report.rows)}
        for check in report.checks:
            builder.check(f"{name}/{check.name}", check.passed, check.detail)
        if builder.root is not None:
            builder.artifacts.append(f"../{name}/report.json")
    return builder.finish({"experiments": summary})


def run_experiment(
    config: ModelConfig, out_dir: pathlib.Path | None = None, pipeline: Pipeline | None = None
) -> ExperimentReport:
    """Dispatch on ``config.experiment.name``."""
    name = config.experiment.name
    if name == "all":
        return run_all(config, out_dir, pipeline)
    return EXPERIMENTS[name](config, out_dir, pipeline)
