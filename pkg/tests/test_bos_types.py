#!/usr/bin/env python3
"""
Tests for bos_types.py module.

Covers the selectivity enums, neuron selector parsing and response containers.
"""

import pathlib
import sys
import unittest

import numpy as np

# Add src to path for imports
sys.path.insert(0, str(pathlib.Path(__file__).parent.parent / "src"))

from borderownership.bos_types import (
    FEATURES,
    ORIENTATIONS,
    BOSPopulation,
    ExitCode,
    Feature,
    ModelError,
    Neuron,
    Orientation,
    Polarity,
    Side,
    Stage,
    all_neurons,
    create_structured_error,
)


class TestSelectivityEnums(unittest.TestCase):
    """Test cases for sides, orientations and features."""

    def test_side_geometry(self):
        """Unit steps point toward the side, opposites are involutive."""
        self.assertEqual(Side.LEFT.unit, (0, -1))
        self.assertEqual(Side.DOWN.unit, (1, 0))
        self.assertEqual(Side.UP.vector, (0.0, -1.0))
        for side in Side:
            with self.subTest(side=side):
                self.assertIs(side.opposite.opposite, side)
                self.assertIsNot(side.opposite, side)

    def test_orientation_sides(self):
        """Vertical cells own left/right, horizontal cells up/down."""
        self.assertEqual(Orientation.VERTICAL.sides, (Side.LEFT, Side.RIGHT))
        self.assertEqual(Orientation.HORIZONTAL.sides, (Side.UP, Side.DOWN))
        self.assertEqual(Orientation.VERTICAL.theta, 0.0)
        self.assertAlmostEqual(Orientation.HORIZONTAL.theta, np.pi / 2)

    def test_feature_polarity(self):
        """Light-dark features are positive, border family is the Gabor family."""
        self.assertIs(Feature.BORDER_LIGHT_DARK.polarity, Polarity.POSITIVE)
        self.assertIs(Feature.EDGE_DARK_BAR.polarity, Polarity.NEGATIVE)
        self.assertTrue(Feature.BORDER_DARK_LIGHT.is_border)
        self.assertFalse(Feature.EDGE_LIGHT_BAR.is_border)
        self.assertEqual([f.index for f in FEATURES], [0, 1, 2, 3])

    def test_exit_codes(self):
        """Exit codes keep their documented values."""
        self.assertEqual(ExitCode.SUCCESS, 0)
        self.assertEqual(ExitCode.REPORT_FAILURE, 1)
        self.assertEqual(ExitCode.CONFIG_ERROR, 2)
        self.assertEqual(ExitCode.SYSTEM_ERROR, 3)


class TestNeuron(unittest.TestCase):
    """Test cases for the neuron selector."""

    def test_parse_valid(self):
        """A selector string parses into its three components."""
        neuron = Neuron.parse("vertical,border_light_dark,left")
        self.assertEqual(
            neuron, Neuron(Orientation.VERTICAL, Feature.BORDER_LIGHT_DARK, Side.LEFT)
        )
        self.assertEqual(str(neuron), "vertical,border_light_dark,left")
        self.assertEqual(Neuron.parse(" Horizontal , edge_dark_bar , DOWN ").side, Side.DOWN)

    def test_parse_invalid(self):
        """Malformed selectors raise ModelError."""
        invalid = [
            "vertical,border_light_dark",
            "diagonal,border_light_dark,left",
            "vertical,blob,left",
            "vertical,border_light_dark,up",
            "horizontal,edge_light_bar,right",
        ]
        for text in invalid:
            with self.subTest(text=text):
                with self.assertRaises(ModelError):
                    Neuron.parse(text)

    def test_twin_and_index(self):
        """The twin differs only in side; indices address the population axes."""
        neuron = Neuron(Orientation.HORIZONTAL, Feature.EDGE_DARK_BAR, Side.UP)
        twin = neuron.twin()
        self.assertEqual(twin.side, Side.DOWN)
        self.assertEqual(twin.feature, neuron.feature)
        self.assertEqual(neuron.index, (1, 3, 0))
        self.assertEqual(twin.index, (1, 3, 1))

    def test_all_neurons(self):
        """Sixteen labels in population order, each parseable from its string."""
        labels = all_neurons()
        self.assertEqual(len(labels), 16)
        self.assertEqual(len(set(labels)), 16)
        self.assertEqual(labels[0], Neuron.parse("vertical,border_light_dark,left"))
        self.assertEqual(labels[-1], Neuron.parse("horizontal,edge_dark_bar,down"))
        for label in labels:
            self.assertEqual(Neuron.parse(str(label)), label)


class TestContainers(unittest.TestCase):
    """Test cases for response containers and structured results."""

    def test_population_response(self):
        """Collapsed populations index directly, multiscale ones need a scale."""
        responses = np.arange(2 * 4 * 2 * 3 * 5 * 6, dtype=float).reshape(2, 4, 2, 3, 5, 6)
        pop = BOSPopulation(responses, Stage.BOS_INITIAL, scale_collapsed=False)
        neuron = Neuron(ORIENTATIONS[1], FEATURES[2], Side.DOWN)
        np.testing.assert_array_equal(pop.response(neuron, scale=2), responses[1, 2, 1, 2])
        with self.assertRaises(ModelError):
            pop.response(neuron)
        self.assertEqual(pop.spatial_shape, (5, 6))

        collapsed = BOSPopulation(responses.max(axis=3), Stage.BOS_INITIAL, True)
        np.testing.assert_array_equal(collapsed.response(neuron), responses[1, 2, 1].max(axis=0))

    def test_structured_error(self):
        """Structured errors carry the exit code and details."""
        result = create_structured_error("boom", ExitCode.CONFIG_ERROR, ["a"], {"k": 1})
        self.assertFalse(result.success)
        self.assertEqual(result.exit_code, ExitCode.CONFIG_ERROR)
        self.assertEqual(result.errors, ["a"])
        self.assertEqual(result.data, {"k": 1})


if __name__ == "__main__":
    unittest.main()
