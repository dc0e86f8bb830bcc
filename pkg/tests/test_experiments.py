#!/usr/bin/env python3
"""
Tests for experiments.py module.

Protocols run on the reduced 96 x 96 configuration; the assertions cover the
report structure and artifacts. The outcomes of the checks at the default
configuration are asserted in test_acceptance.py.
"""

import json
import pathlib
import shutil
import sys
import tempfile
import unittest
from unittest.mock import patch

import yaml

# Add src to path for imports
sys.path.insert(0, str(pathlib.Path(__file__).parent.parent / "src"))

from bos_fixtures import small_config
from borderownership.bos_types import Neuron, ShapeKind, Side
from borderownership.experiments import (
    EXPERIMENTS,
    ROW_COLUMNS,
    Check,
    ExperimentReport,
    ReportBuilder,
    Reading,
    families,
    matched_pair,
    pair_metrics,
    run_experiment,
    run_kanizsa,
    run_overlap_vmi,
    run_position_sweep,
    run_size_sweep,
    run_solid_outline,
    run_zhou_battery,
)
from borderownership.file_operations import read_csv
from borderownership.pipeline import Pipeline


class TestHelpers(unittest.TestCase):
    """Test cases for pair metrics, families and matched pairs."""

    def test_pair_metrics(self):
        """Differences before and after relaxation and their improvement."""
        metrics = pair_metrics(Reading(2.0, 3.0, 4), Reading(1.0, 0.75, 4))
        self.assertEqual(metrics.d_pre, 0.5)
        self.assertEqual(metrics.d_post, 0.75)
        self.assertAlmostEqual(metrics.improvement, 50.0)

    def test_families(self):
        """The selector alone, or one negative-side neuron per family."""
        config = small_config()
        self.assertEqual(families(config), [Neuron.parse("vertical,border_light_dark,left")])
        every = families(config.with_overrides("experiment", families="all"))
        self.assertEqual(len(every), 8)
        self.assertTrue(all(n.side is n.orientation.sides[0] for n in every))

    def test_matched_pair(self):
        """The preferred display puts the figure on the neuron's side."""
        config = small_config()
        right = Neuron.parse("vertical,border_dark_light,right")
        preferred, other = matched_pair(config, right, ShapeKind.SQUARE, offset_px=4)
        self.assertIs(preferred.figure_side, Side.RIGHT)
        self.assertIs(other.figure_side, Side.LEFT)
        self.assertEqual(preferred.offset_px, 4)
        # dark-light polarity: the left (non-preferred) figure is dark
        self.assertEqual(other.figure_lum, 0.0)
        reversed_pref, _ = matched_pair(config, right, ShapeKind.SQUARE, matching=False)
        self.assertEqual(reversed_pref.figure_lum, 0.0)

    def test_report_flagging(self):
        """Any failed check flags the report."""
        report = ExperimentReport("x", {}, [], [Check("a", True)], [], "hash", {})
        self.assertFalse(report.flagged)
        flagged = report._replace(checks=[Check("a", True), Check("b", False, "why")])
        self.assertTrue(flagged.flagged)
        self.assertTrue(flagged.to_dict()["flagged"])
        self.assertEqual(flagged.to_dict()["checks"][1]["detail"], "why")

    def test_builder_without_output(self):
        """Without an output root nothing is written."""
        builder = ReportBuilder("solid_outline", small_config(), None)
        builder.check("ok", True)
        report = builder.finish({"k": 1})
        self.assertEqual(report.artifacts, [])
        self.assertEqual(report.data["k"], 1)
        self.assertEqual(report.data["tables"], {})
        self.assertEqual(len(report.pipeline_version), 64)


class TestSolidOutline(unittest.TestCase):
    """Test cases for the solid vs outline protocol and its artifacts."""

    def setUp(self):
        """Set up test fixtures."""
        self.temp_dir = pathlib.Path(tempfile.mkdtemp())
        self.config = small_config()

    def tearDown(self):
        """Clean up test fixtures."""
        shutil.rmtree(self.temp_dir)

    def test_report_and_files(self):
        """The run writes the report, metric tables and per-stimulus artifacts."""
        report = run_solid_outline(self.config, self.temp_dir)
        root = self.temp_dir / "solid_outline"
        self.assertEqual(len(report.rows), 4)
        names = [c.name for c in report.checks]
        self.assertIn("same_sign:vertical,border_light_dark,left", names)
        self.assertIn("rl_iterations_bounded", names)
        self.assertIn("multiplier_in_range", names)
        checks = {c.name: c for c in report.checks}
        self.assertTrue(checks["rl_iterations_bounded"].passed)
        self.assertTrue(checks["multiplier_in_range"].passed)

        metrics = read_csv(root / "metrics.csv")
        self.assertEqual(list(metrics.columns), ROW_COLUMNS)
        self.assertEqual(len(metrics), 4)
        self.assertTrue((root / "solid_outline.csv").exists())

        stem = "vertical_border_light_dark_left_solid_pref"
        self.assertIn(f"{stem}/maps/stimulus.pgm", report.artifacts)
        self.assertIn(f"{stem}/maps/vertical_border_light_dark_left_post.pgm", report.artifacts)
        self.assertIn(f"{stem}/csv/readings.csv", report.artifacts)
        self.assertIn("metrics.csv", report.artifacts)
        for artifact in report.artifacts:
            self.assertTrue((root / artifact).exists(), artifact)

        data = json.loads((root / "report.json").read_text(encoding="utf-8"))
        self.assertEqual(data["experiment"], "solid_outline")
        self.assertEqual(data["schema_version"], "1.0")
        self.assertEqual(data["flagged"], report.flagged)
        self.assertEqual(data["config"]["canvas"]["width"], 96)

        summary = json.loads((root / stem / "json" / "summary.json").read_text(encoding="utf-8"))
        self.assertEqual(summary["metadata"]["shape_kind"], "square")
        self.assertLessEqual(summary["relaxation"]["iterations"], self.config.relax.max_iter)

    def test_map_dumps(self):
        """Requested dumps cover every volume, both populations and each iteration."""
        config = self.config.with_overrides("experiment", dump_maps=True)
        report = run_solid_outline(config, self.temp_dir)
        stem = "vertical_border_light_dark_left_solid_pref"
        dumps = self.temp_dir / "solid_outline" / stem / "dumps"
        for name in ("simple", "complex", "dorsal_simple", "dorsal_feed", "mt_on", "mt_off"):
            with self.subTest(volume=name):
                self.assertIn(f"{stem}/dumps/{name}/{name}_manifest.yaml", report.artifacts)
        self.assertTrue((dumps / "populations" / "bos_initial_manifest.yaml").exists())
        self.assertTrue((dumps / "populations" / "bos_final_manifest.yaml").exists())
        summary_path = self.temp_dir / "solid_outline" / stem / "json" / "summary.json"
        summary = json.loads(summary_path.read_text(encoding="utf-8"))
        iterations = summary["relaxation"]["iterations"]
        manifest = yaml.safe_load(
            (dumps / "relaxation" / "relaxation_manifest.yaml").read_text(encoding="utf-8")
        )
        self.assertEqual(len(manifest["maps"]), 16 * (iterations + 1))
        self.assertEqual(manifest["maps"][0]["iteration"], 0)
        plain = run_solid_outline(self.config, self.temp_dir / "plain")
        self.assertFalse(any("/dumps/" in a for a in plain.artifacts))

    def test_thread_count_does_not_change_metrics(self):
        """Metric tables are byte-identical across thread counts."""
        run_solid_outline(self.config, self.temp_dir / "one")
        threaded = self.config.with_overrides("experiment", threads=4)
        run_solid_outline(threaded, self.temp_dir / "four")
        one = (self.temp_dir / "one" / "solid_outline" / "metrics.csv").read_bytes()
        four = (self.temp_dir / "four" / "solid_outline" / "metrics.csv").read_bytes()
        self.assertEqual(one, four)


class TestProtocols(unittest.TestCase):
    """Structural test cases for the remaining protocols."""

    @classmethod
    def setUpClass(cls):
        """Share one cached runner across the protocols."""
        cls.config = small_config()
        cls.pipeline = Pipeline(cls.config, cache_size=32)

    def test_zhou_battery(self):
        """Every pair is measured for the neuron and its twin."""
        report = run_zhou_battery(self.config, None, self.pipeline)
        self.assertEqual(len(report.rows), 6 * 2 * 2)
        identity = [c for c in report.checks if c.name.startswith("pair_identity:")]
        self.assertEqual(len(identity), 6)
        self.assertTrue(all(c.passed for c in identity))
        names = {c.name for c in report.checks}
        for name in ("energy", "mean_improvement_square_pairs", "no_regression"):
            self.assertIn(name, names)
        self.assertIn("preference_post:vertical,border_light_dark,right", names)
        self.assertEqual(len(report.data["tables"]["bars"]), 12)
        self.assertIn("mean_improvement_square_pairs", report.data)
        self.assertGreaterEqual(report.data["regressions"], 0)

    def test_position_sweep(self):
        """Offsets span the largest field in configured steps."""
        report = run_position_sweep(self.config, None, self.pipeline)
        self.assertEqual(report.data["offsets_px"], [-32, -16, 0, 16, 32])
        self.assertEqual(len(report.data["tables"]["sweep"]), 5)
        names = {c.name for c in report.checks}
        self.assertTrue({"peak_at_center", "unimodal", "preferred_dominates"} <= names)

    def test_size_sweep(self):
        """Configured sizes are followed by one full-canvas figure."""
        report = run_size_sweep(self.config, None, self.pipeline)
        sizes = report.data["tables"]["sizes"]
        self.assertEqual([row["size_deg"] for row in sizes], [3.0, 4.0, 30.0])
        self.assertEqual([row["full_canvas"] for row in sizes], [False, False, True])
        names = {c.name for c in report.checks}
        self.assertTrue({"positive_difference:3deg", "positive_difference:4deg"} <= names)
        self.assertNotIn("positive_difference:30deg", names)
        self.assertEqual(report.data["full_canvas_D_post"], sizes[-1]["D_post"])

    def test_overlap_vmi(self):
        """Every shared-boundary sample gets a direction row."""
        report = run_overlap_vmi(self.config, None, self.pipeline)
        rows = report.data["tables"]["vmi"]
        self.assertTrue(rows)
        self.assertTrue(all({"row", "col", "expected", "vx", "vy"} <= set(r) for r in rows))
        self.assertIn("ownership_to_occluder", {c.name for c in report.checks})
        self.assertIn("agreement_post", report.data)

    def test_kanizsa(self):
        """All three inducer counts are recorded."""
        report = run_kanizsa(self.config, None, self.pipeline)
        self.assertEqual(set(report.data) - {"tables"}, {"1", "2", "4"})
        counts = {row["count"] for row in report.data["tables"]["mouth_edges"]}
        self.assertEqual(counts, {1, 2, 4})
        names = {c.name for c in report.checks}
        self.assertTrue({"single_into_pacman", "flip_toward_center"} <= names)


class TestRunAll(unittest.TestCase):
    """Test cases for dispatch and the combined run."""

    def setUp(self):
        """Set up test fixtures."""
        self.temp_dir = pathlib.Path(tempfile.mkdtemp())

    def tearDown(self):
        """Clean up test fixtures."""
        shutil.rmtree(self.temp_dir)

    def test_run_all_prefixes_checks(self):
        """The combined report prefixes each check with its protocol."""

        def fake(name, passed):
            def run(config, out_dir=None, pipeline=None):
                builder = ReportBuilder(name, config, out_dir)
                builder.check("stub", passed)
                return builder.finish()

            return run

        stubs = {"solid_outline": fake("solid_outline", True), "kanizsa": fake("kanizsa", False)}
        config = small_config(name="all")
        with patch.dict(EXPERIMENTS, stubs, clear=True):
            report = run_experiment(config, self.temp_dir)
        self.assertEqual(report.experiment, "all")
        self.assertEqual(
            [(c.name, c.passed) for c in report.checks],
            [("solid_outline/stub", True), ("kanizsa/stub", False)],
        )
        self.assertTrue(report.flagged)
        self.assertTrue((self.temp_dir / "all" / "report.json").exists())
        self.assertTrue((self.temp_dir / "kanizsa" / "report.json").exists())
        self.assertIn("../kanizsa/report.json", report.artifacts)

    def test_dispatch_by_name(self):
        """The configured name selects the protocol."""
        sentinel = object()
        config = small_config(name="kanizsa")
        with patch.dict(EXPERIMENTS, {"kanizsa": lambda *args: sentinel}):
            self.assertIs(run_experiment(config), sentinel)


if __name__ == "__main__":
    unittest.main()
