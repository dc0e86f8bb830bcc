#!/usr/bin/env python3
"""
Tests for cli.py module.
"""

import io
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

from bos_fixtures import BAD_CONFIG, SMALL_CONFIG
from borderownership.bos_types import ExitCode
from borderownership.cli import build_parser, cli_main, resolve_config
from borderownership.experiments import Check, ExperimentReport
from borderownership.stimulus import read_pgm


def fake_report(*checks: Check) -> ExperimentReport:
    """Report with the given checks and nothing else."""
    return ExperimentReport("kanizsa", {}, [], list(checks), [], "0" * 64, {})


class TestCli(unittest.TestCase):
    """Test cases for the command-line entry point."""

    def setUp(self):
        """Set up test fixtures."""
        self.temp_dir = pathlib.Path(tempfile.mkdtemp())

    def tearDown(self):
        """Clean up test fixtures."""
        shutil.rmtree(self.temp_dir)

    def run_cli(self, *argv: str) -> tuple[int, str]:
        """Run the CLI capturing stdout."""
        with (
            patch("sys.stdout", new_callable=io.StringIO) as stdout,
            patch("sys.stderr", new_callable=io.StringIO),
        ):
            code = cli_main(list(argv))
        return code, stdout.getvalue()

    def test_validate_config(self):
        """Valid configs exit 0; invalid ones exit 2 listing their lines."""
        code, out = self.run_cli("validate-config", str(SMALL_CONFIG))
        self.assertEqual(code, ExitCode.SUCCESS)
        self.assertIn("✓ Configuration is valid", out)

        code, out = self.run_cli("validate-config", str(BAD_CONFIG))
        self.assertEqual(code, ExitCode.CONFIG_ERROR)
        self.assertIn("✗ Configuration is invalid", out)
        self.assertIn("line 3:", out)

    def test_usage_errors(self):
        """Unknown choices and missing config files are configuration errors."""
        code, _ = self.run_cli("run", "--experiment", "no_such_protocol")
        self.assertEqual(code, ExitCode.CONFIG_ERROR)
        code, out = self.run_cli("dump-kernels", "--config", str(self.temp_dir / "none.yaml"))
        self.assertEqual(code, ExitCode.CONFIG_ERROR)
        self.assertIn("Config file not found", out)

    def test_render_stimulus(self):
        """The stimulus is written as a graymap with its digest."""
        path = self.temp_dir / "c.pgm"
        code, out = self.run_cli(
            "render-stimulus",
            "--config",
            str(SMALL_CONFIG),
            "--kind",
            "c_shape",
            "--side",
            "right",
            "--out",
            str(path),
            "--format",
            "json",
        )
        self.assertEqual(code, ExitCode.SUCCESS)
        data = json.loads(out)["data"]
        canvas = read_pgm(path, px_per_deg=8.0)
        self.assertEqual(canvas.luminance.shape, (96, 96))
        self.assertEqual(data["metadata"]["figure_side"], "right")
        self.assertEqual(json.loads(out)["warnings"], [])

    def test_render_stimulus_clipping_warning(self):
        """Figures larger than the canvas are drawn clipped with a warning."""
        code, out = self.run_cli(
            "render-stimulus",
            "--config",
            str(SMALL_CONFIG),
            "--size-deg",
            "20",
            "--out",
            str(self.temp_dir / "big.pgm"),
        )
        self.assertEqual(code, ExitCode.SUCCESS)
        self.assertIn("⚠ Figure clipped by the canvas", out)

    def test_render_stimulus_invalid(self):
        """Invalid stimulus parameters exit 2."""
        code, _ = self.run_cli(
            "render-stimulus",
            "--config",
            str(SMALL_CONFIG),
            "--figure-lum",
            "0.5",
            "--ground-lum",
            "0.5",
            "--out",
            str(self.temp_dir / "x.pgm"),
        )
        self.assertEqual(code, ExitCode.CONFIG_ERROR)

    def test_dump_kernels(self):
        """Every kernel and the manifest are written."""
        out_dir = self.temp_dir / "kernels"
        code, _ = self.run_cli(
            "dump-kernels", "--config", str(SMALL_CONFIG), "--out", str(out_dir), "--quiet"
        )
        self.assertEqual(code, ExitCode.SUCCESS)
        manifest = yaml.safe_load((out_dir / "kernels_manifest.yaml").read_text(encoding="utf-8"))
        self.assertEqual(len(manifest["maps"]), 84)
        self.assertEqual(len(list(out_dir.glob("*.txt"))), 84)

    def test_run_exit_codes(self):
        """A failed check exits 1; a clean report exits 0."""
        args = ("run", "--config", str(SMALL_CONFIG), "--out", str(self.temp_dir))
        failing = fake_report(Check("single_into_pacman", False, "0.1 < 0.2"))
        with patch("borderownership.cli.run_experiment", return_value=failing) as runner:
            code, out = self.run_cli(*args, "--experiment", "kanizsa")
        self.assertEqual(code, ExitCode.REPORT_FAILURE)
        self.assertIn("single_into_pacman: 0.1 < 0.2", out)
        config, out_dir = runner.call_args.args
        self.assertEqual(config.experiment.name, "kanizsa")
        self.assertEqual(out_dir, self.temp_dir)

        passing = fake_report(Check("single_into_pacman", True))
        with patch("borderownership.cli.run_experiment", return_value=passing):
            code, out = self.run_cli(*args, "--format", "json")
        self.assertEqual(code, ExitCode.SUCCESS)
        data = json.loads(out)["data"]
        self.assertFalse(data["flagged"])
        self.assertTrue(data["report"].endswith("report.json"))

    def test_resolve_config_overrides(self):
        """Only flags that were passed override the file."""
        args = build_parser().parse_args(
            ["run", "--config", str(SMALL_CONFIG), "--threads", "3", "--seed", "7"]
        )
        config = resolve_config(args)
        self.assertEqual(config.experiment.threads, 3)
        self.assertEqual(config.experiment.seed, 7)
        self.assertEqual(config.experiment.name, "solid_outline")
        self.assertEqual(config.canvas.width, 96)

    def test_seed_is_record_only(self):
        """The seed reaches the report config and changes nothing else."""
        base = ["run", "--config", str(SMALL_CONFIG)]
        parser = build_parser()
        seven = resolve_config(parser.parse_args([*base, "--seed", "7"]))
        eight = resolve_config(parser.parse_args([*base, "--seed", "8"]))
        self.assertEqual(seven.experiment.seed, 7)
        self.assertEqual(seven.with_overrides("experiment", seed=8), eight)

    def test_dump_maps_flag(self):
        """Map dumps are off unless requested."""
        base = ["run", "--config", str(SMALL_CONFIG)]
        parser = build_parser()
        self.assertFalse(resolve_config(parser.parse_args(base)).experiment.dump_maps)
        dumped = resolve_config(parser.parse_args([*base, "--dump-maps"]))
        self.assertTrue(dumped.experiment.dump_maps)

    def test_tune(self):
        """Every grid point is scored, tabulated and the best one reported."""

        def fake_score(config):
            gain = config.relax.potential_gain
            return {
                "mean_improvement": 10.0 * gain,
                "regressions": 0 if config.surround.sampling == "area" else 2,
                "overlap_fraction": 0.8,
                "kanizsa_single_fraction": None,
                "failed_checks": 1,
            }

        out_dir = self.temp_dir / "tuning"
        with patch("borderownership.tuning.score", side_effect=fake_score) as scorer:
            code, out = self.run_cli(
                "tune",
                "--config",
                str(SMALL_CONFIG),
                "--gain",
                "5",
                "20",
                "--sampling",
                "point",
                "area",
                "--out",
                str(out_dir),
                "--format",
                "json",
            )
        self.assertEqual(code, ExitCode.SUCCESS)
        self.assertEqual(scorer.call_count, 4)
        data = json.loads(out)["data"]
        self.assertEqual(len(data["rows"]), 4)
        self.assertEqual(data["best"]["potential_gain"], 20.0)
        self.assertEqual(data["best"]["sampling"], "area")
        self.assertEqual(data["best"]["potential_mode"], "side_share")
        self.assertTrue((out_dir / "tuning.csv").exists())


if __name__ == "__main__":
    unittest.main()
