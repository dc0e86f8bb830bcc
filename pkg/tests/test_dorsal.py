#!/usr/bin/env python3
"""
Tests for dorsal.py module.
"""

import pathlib
import sys
import unittest

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

# Add src to path for imports
sys.path.insert(0, str(pathlib.Path(__file__).parent.parent / "src"))

from bos_fixtures import small_canvas, small_config
from borderownership.bos_types import ModelError, Stage
from borderownership.dorsal import (
    RectifierParams,
    dorsal_feed,
    dorsal_simple,
    mt_responses,
    phi,
)
from borderownership.filters import build_kernel_bank


class TestRectifier(unittest.TestCase):
    """Test cases for the contrast rectifier."""

    def test_zero_and_scalar(self):
        """No drive gives no response; scalars stay scalars."""
        self.assertEqual(phi(0.0), 0.0)
        self.assertIsInstance(phi(0.01), float)

    @given(st.floats(min_value=0.0, max_value=0.5), st.floats(min_value=1e-6, max_value=0.1))
    def test_monotone_and_bounded(self, r, dr):
        """The rectifier increases strictly and stays below 1."""
        low, high = phi(r), phi(r + dr)
        self.assertGreaterEqual(low, 0.0)
        self.assertLess(high, 1.0)
        self.assertGreater(high, low)

    def test_arrays(self):
        """Arrays are rectified elementwise."""
        values = phi(np.array([0.0, 0.01, 0.1]))
        self.assertEqual(values.shape, (3,))
        self.assertTrue(np.all(np.diff(values) > 0))

    def test_invalid_params(self):
        """Parameters must be positive."""
        with self.assertRaises(ModelError):
            RectifierParams(gamma=0.0)
        with self.assertRaises(ModelError):
            RectifierParams(rho=-1.0)


class TestDorsalPathway(unittest.TestCase):
    """Test cases for dorsal simple, feed and MT responses."""

    @classmethod
    def setUpClass(cls):
        """Compute the dorsal stages for the reduced square display."""
        cls.config = small_config()
        cls.bank = build_kernel_bank(
            cls.config.filters, cls.config.canvas.px_per_deg, cls.config.dorsal.gain
        )
        canvas = small_canvas(cls.config)
        cls.simple = dorsal_simple(canvas, dorsal=cls.config.dorsal, bank=cls.bank)
        cls.feed = dorsal_feed(cls.simple)

    def test_simple_range(self):
        """Dorsal simple responses are rectified and saturate at 1."""
        self.assertIs(self.simple.stage, Stage.DORSAL_SIMPLE)
        self.assertEqual(self.simple.shape, (2, 4, 4, 96, 96))
        self.assertGreaterEqual(float(self.simple.maps.min()), 0.0)
        self.assertLessEqual(float(self.simple.maps.max()), 1.0)
        self.assertGreater(float(self.simple.maps.max()), 0.0)

    def test_feed_is_feature_max(self):
        """The feed keeps the strongest feature per orientation and scale."""
        self.assertIs(self.feed.stage, Stage.DORSAL_FEED)
        self.assertEqual(self.feed.shape, (2, 1, 4, 96, 96))
        np.testing.assert_array_equal(self.feed.maps[:, 0], self.simple.maps.max(axis=1))

    def test_mt_responses(self):
        """MT on and off maps share the feed shape and range."""
        on, off = mt_responses(self.feed, dorsal=self.config.dorsal, bank=self.bank)
        self.assertIs(on.stage, Stage.MT_ON)
        self.assertIs(off.stage, Stage.MT_OFF)
        for volume in (on, off):
            with self.subTest(stage=volume.stage):
                self.assertEqual(volume.shape, self.feed.shape)
                self.assertGreaterEqual(float(volume.maps.min()), 0.0)
                self.assertLessEqual(float(volume.maps.max()), 1.0)

    def test_low_contrast_saturates(self):
        """A 2 % luminance step drives dorsal cells to at least half their full-contrast peak."""
        faint = small_canvas(self.config, figure_lum=0.51, ground_lum=0.49)
        faint_simple = dorsal_simple(faint, dorsal=self.config.dorsal, bank=self.bank)
        full_peak = float(self.simple.maps.max())
        self.assertGreater(full_peak, 0.0)
        self.assertGreaterEqual(float(faint_simple.maps.max()), 0.5 * full_peak)
        # the rectifier alone: drive at 2 % contrast against drive at full contrast
        gain = self.config.dorsal.gain
        self.assertGreaterEqual(phi(0.02 * gain), 0.5 * phi(gain))

    def test_mt_saturates_under_contrast_scaling(self):
        """MT peaks at 2 % contrast stay within half of their full-contrast peaks."""
        faint = small_canvas(self.config, figure_lum=0.51, ground_lum=0.49)
        faint_feed = dorsal_feed(dorsal_simple(faint, dorsal=self.config.dorsal, bank=self.bank))
        full = mt_responses(self.feed, dorsal=self.config.dorsal, bank=self.bank)
        scaled = mt_responses(faint_feed, dorsal=self.config.dorsal, bank=self.bank)
        full_peak = max(float(volume.maps.max()) for volume in full)
        scaled_peak = max(float(volume.maps.max()) for volume in scaled)
        self.assertGreater(full_peak, 0.0)
        self.assertGreaterEqual(scaled_peak, 0.5 * full_peak)

    def test_stage_errors(self):
        """Each stage refuses the wrong input."""
        with self.assertRaises(ModelError):
            dorsal_feed(self.feed)
        with self.assertRaises(ModelError):
            mt_responses(self.simple, bank=self.bank)


if __name__ == "__main__":
    unittest.main()
