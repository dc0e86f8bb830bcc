#!/usr/bin/env python3
"""
Tests for config_schema.py module.
"""

import pathlib
import shutil
import sys
import tempfile
import unittest

# Add src to path for imports
sys.path.insert(0, str(pathlib.Path(__file__).parent.parent / "src"))

from bos_fixtures import BAD_CONFIG, SMALL_CONFIG
from borderownership.config_schema import (
    DEFAULTS,
    SCHEMA,
    ConfigError,
    build_config,
    default_config,
    dump_config,
    load_config,
    parse_config_text,
    validate_boolean,
    validate_config_file,
    validate_float,
    validate_integer,
)


class TestFieldValidators(unittest.TestCase):
    """Test cases for the scalar validators."""

    def test_validate_float(self):
        """Numbers pass, bounds and types are enforced."""
        self.assertEqual(validate_float(3, "x"), 3.0)
        with self.assertRaises(ConfigError):
            validate_float("3", "x")
        with self.assertRaises(ConfigError):
            validate_float(True, "x")
        with self.assertRaises(ConfigError):
            validate_float(0.0, "x", min_value=0.0, exclusive_min=True)
        with self.assertRaises(ConfigError):
            validate_float(1.5, "x", max_value=1.0)

    def test_validate_integer(self):
        """Floats are not integers."""
        self.assertEqual(validate_integer(4, "n", min_value=1), 4)
        with self.assertRaises(ConfigError):
            validate_integer(4.0, "n")
        with self.assertRaises(ConfigError):
            validate_integer(11, "n", max_value=10)

    def test_validate_boolean(self):
        """Only real booleans pass."""
        self.assertTrue(validate_boolean(True, "flag"))
        self.assertFalse(validate_boolean(False, "flag"))
        for value in (1, "yes", None):
            with self.subTest(value=value):
                with self.assertRaises(ConfigError):
                    validate_boolean(value, "flag")

    def test_error_string_includes_line(self):
        """Errors with a known line are prefixed with it."""
        self.assertEqual(str(ConfigError("bad", "a.b", 1, line=7)), "line 7: bad")
        self.assertEqual(str(ConfigError("bad")), "bad")


class TestDefaults(unittest.TestCase):
    """Test cases for the default configuration."""

    def test_default_values(self):
        """Defaults carry the documented calibration."""
        config = default_config()
        self.assertEqual(config.canvas.px_per_deg, 32.0)
        self.assertEqual(config.filters.ventral_rf_deg, (0.4, 0.6, 0.8, 1.0))
        self.assertEqual(config.relax.max_iter, 10)
        self.assertEqual(config.surround.geometry, "half_disc")
        self.assertEqual(config.surround.weight_fn, "linear_negative_slope")
        self.assertEqual(config.experiment.name, "zhou_battery")
        self.assertEqual(str(config.experiment.selected_neuron), config.experiment.neuron)

    def test_tuned_defaults(self):
        """Defaults carry the tuned filter, surround and relaxation settings."""
        config = default_config()
        self.assertEqual(config.filters.gabor_wavelength_ratio, 0.8)
        self.assertEqual(config.filters.edge_bar_halfwidth_ratio, 0.125)
        self.assertEqual(config.surround.sampling, "area")
        self.assertEqual(config.relax.potential_mode, "side_share")
        self.assertEqual(config.relax.potential_gain, 10.0)
        self.assertFalse(config.experiment.dump_maps)

    def test_defaults_table_matches_schema(self):
        """Every schema section has a defaults entry with the same keys."""
        self.assertEqual(set(DEFAULTS), set(SCHEMA))
        for section, (_, fields) in SCHEMA.items():
            with self.subTest(section=section):
                self.assertEqual(set(DEFAULTS[section]), set(fields))

    def test_load_none_gives_defaults(self):
        """No file means the defaults."""
        self.assertEqual(load_config(None), default_config())


class TestLoading(unittest.TestCase):
    """Test cases for loading and validating files."""

    def setUp(self):
        """Set up test fixtures."""
        self.temp_dir = pathlib.Path(tempfile.mkdtemp())

    def tearDown(self):
        """Clean up test fixtures."""
        shutil.rmtree(self.temp_dir)

    def test_load_small_config(self):
        """The test file overrides only what it lists."""
        config = load_config(SMALL_CONFIG)
        self.assertEqual((config.canvas.width, config.canvas.height), (96, 96))
        self.assertEqual(config.canvas.px_per_deg, 8.0)
        self.assertEqual(config.filters.ventral_rf_deg, (1.6, 2.4, 3.2, 4.0))
        self.assertEqual(config.experiment.sizes_deg, (3.0, 4.0))
        self.assertEqual(config.dorsal, default_config().dorsal)

    def test_missing_file(self):
        """A missing file raises ConfigError."""
        with self.assertRaises(ConfigError):
            load_config(self.temp_dir / "nope.yaml")

    def test_bad_config_reports_every_line(self):
        """All problems are collected with their source lines."""
        config, errors = parse_config_text(BAD_CONFIG.read_text(encoding="utf-8"))
        self.assertIsNone(config)
        self.assertEqual({e.line for e in errors}, {3, 5, 6, 8, 10})
        messages = " ".join(str(e) for e in errors)
        self.assertIn("Unknown section 'bogus'", messages)
        self.assertIn("Unknown key 'relax.colour'", messages)
        self.assertIn("figure_lum must differ from ground_lum", messages)

    def test_load_raises_first_error(self):
        """Loading a bad file raises rather than returning partial config."""
        with self.assertRaises(ConfigError) as ctx:
            load_config(BAD_CONFIG)
        self.assertIsNotNone(ctx.exception.line)

    def test_yaml_syntax_error(self):
        """Malformed YAML becomes a single located error."""
        config, errors = parse_config_text("canvas:\n  width: [1, 2\n")
        self.assertIsNone(config)
        self.assertEqual(len(errors), 1)
        self.assertIn("YAML syntax error", errors[0].message)

    def test_non_mapping_document(self):
        """A top-level list is rejected."""
        _, errors = parse_config_text("- a\n- b\n")
        self.assertEqual(len(errors), 1)

    def test_per_scale_length_cross_check(self):
        """Per-scale tables must match the number of ventral scales."""
        with self.assertRaises(ConfigError) as ctx:
            build_config({"filters": {"ventral_rf_deg": [0.4, 0.6, 0.8]}})
        self.assertEqual(ctx.exception.field, "filters.ventral_rf_deg")

    def test_surround_start_below_extent(self):
        """The surround must start inside its extent."""
        with self.assertRaises(ConfigError):
            build_config({"surround": {"start_deg": 9.0, "max_extent_deg": 9.0}})

    def test_dump_then_parse(self):
        """A dumped configuration parses back to the same values."""
        config = load_config(SMALL_CONFIG)
        parsed, errors = parse_config_text(dump_config(config))
        self.assertEqual(errors, [])
        self.assertEqual(parsed, config)

    def test_validate_config_file(self):
        """The non-raising validator reports valid and invalid files."""
        good = validate_config_file(SMALL_CONFIG)
        self.assertTrue(good.is_valid)
        self.assertEqual(good.context["config"]["canvas"]["width"], 96)

        bad = validate_config_file(BAD_CONFIG)
        self.assertFalse(bad.is_valid)
        self.assertTrue(any(e.startswith("line 10:") for e in bad.errors))
        self.assertNotIn("config", bad.context)

        missing = validate_config_file(self.temp_dir / "absent.yaml")
        self.assertFalse(missing.is_valid)
        self.assertIn("Config file not found", missing.errors[0])


class TestOverrides(unittest.TestCase):
    """Test cases for ModelConfig.with_overrides."""

    def test_override_revalidates(self):
        """Overrides replace keys and are validated."""
        config = default_config().with_overrides("experiment", threads=4, seed=7)
        self.assertEqual(config.experiment.threads, 4)
        self.assertEqual(config.experiment.seed, 7)
        with self.assertRaises(ConfigError):
            config.with_overrides("experiment", threads=0)
        with self.assertRaises(ConfigError):
            config.with_overrides("experiment", neuron="vertical,border_light_dark,up")
        with self.assertRaises(ConfigError):
            config.with_overrides("relax", bogus=1)
        with self.assertRaises(ConfigError):
            config.with_overrides("relax", potential_mode="ratio")
        with self.assertRaises(ConfigError):
            config.with_overrides("surround", sampling="blur")
        with self.assertRaises(ConfigError):
            config.with_overrides("experiment", dump_maps="yes")
        self.assertTrue(config.with_overrides("experiment", dump_maps=True).experiment.dump_maps)

    def test_to_dict_uses_lists(self):
        """Tuples become lists in the plain dictionary."""
        data = default_config().to_dict()
        self.assertIsInstance(data["filters"]["ventral_rf_deg"], list)
        self.assertEqual(build_config(data), default_config())


if __name__ == "__main__":
    unittest.main()
