#!/usr/bin/env python3
"""
Core data structures for the border-ownership simulator.

This module defines the fundamental data types used throughout the model:
selectivity enums (orientation, local feature, ownership side), cell classes and
processing stages, the response containers passed between layers, structured
operation results and the exception hierarchy.

Index conventions shared by every array in the package:

- orientation axis ``N = 2``: ``ORIENTATIONS`` (vertical, horizontal)
- feature axis ``S = 4``: ``FEATURES``
- side axis ``2``: ``Orientation.sides`` (left/right for vertical, up/down for horizontal)
- scale axis ``C = 4``
- spatial axes ``(row, column)``; rows grow downward
"""

from __future__ import annotations

import enum
import math
from typing import Any, NamedTuple

import numpy as np


class ExitCode(enum.IntEnum):

    """Standardized exit codes for the command-line interface."""

    SUCCESS = 0  # Command completed, every recorded check passed
    REPORT_FAILURE = 1  # Report written but flagged (failed checks, no energy)
    CONFIG_ERROR = 2  # Bad flags or configuration
    SYSTEM_ERROR = 3  # File I/O or unexpected failure


# =============================================================================
# Selectivity Enums
# =============================================================================


class Side(enum.StrEnum):

    """Border-ownership direction (side of figure)."""

    LEFT = "left"
    RIGHT = "right"
    UP = "up"
    DOWN = "down"

    @property
    def unit(self) -> tuple[int, int]:
        """Unit step ``(d_row, d_col)`` pointing to this side."""
        return _SIDE_UNITS[self]

    @property
    def vector(self) -> tuple[float, float]:
        """Unit vector ``(vx, vy)`` in image coordinates (y grows downward)."""
        d_row, d_col = _SIDE_UNITS[self]
        return float(d_col), float(d_row)

    @property
    def opposite(self) -> Side:
        """The side across the border."""
        return _SIDE_OPPOSITES[self]


_SIDE_UNITS = {
    Side.LEFT: (0, -1),
    Side.RIGHT: (0, 1),
    Side.UP: (-1, 0),
    Side.DOWN: (1, 0),
}
_SIDE_OPPOSITES = {
    Side.LEFT: Side.RIGHT,
    Side.RIGHT: Side.LEFT,
    Side.UP: Side.DOWN,
    Side.DOWN: Side.UP,
}


class Orientation(enum.StrEnum):

    """
    Border orientation of a cell.

    ``theta`` is the angle of the border normal: a vertical border (luminance
    varying along x) has ``theta = 0``.
    """

    VERTICAL = "vertical"
    HORIZONTAL = "horizontal"

    @property
    def theta(self) -> float:
        """Normal angle in radians."""
        return 0.0 if self is Orientation.VERTICAL else math.pi / 2

    @property
    def sides(self) -> tuple[Side, Side]:
        """The two ownership directions, negative-normal side first."""
        if self is Orientation.VERTICAL:
            return (Side.LEFT, Side.RIGHT)
        return (Side.UP, Side.DOWN)

    @property
    def index(self) -> int:
        """Position on the orientation axis."""
        return ORIENTATIONS.index(self)


class Polarity(enum.StrEnum):

    """Contrast polarity; ``+`` means light on the negative-normal side."""

    POSITIVE = "+"
    NEGATIVE = "-"

    @property
    def sign(self) -> int:
        """+1 or -1."""
        return 1 if self is Polarity.POSITIVE else -1


class Feature(enum.StrEnum):

    """Local feature selectivity of ventral cells."""

    BORDER_LIGHT_DARK = "border_light_dark"
    BORDER_DARK_LIGHT = "border_dark_light"
    EDGE_LIGHT_BAR = "edge_light_bar"
    EDGE_DARK_BAR = "edge_dark_bar"

    @property
    def is_border(self) -> bool:
        """Border family (Gabor) rather than edge family (DoG)."""
        return self in (Feature.BORDER_LIGHT_DARK, Feature.BORDER_DARK_LIGHT)

    @property
    def polarity(self) -> Polarity:
        """Contrast polarity of the feature."""
        if self in (Feature.BORDER_LIGHT_DARK, Feature.EDGE_LIGHT_BAR):
            return Polarity.POSITIVE
        return Polarity.NEGATIVE

    @property
    def index(self) -> int:
        """Position on the feature axis."""
        return FEATURES.index(self)


ORIENTATIONS: tuple[Orientation, ...] = (Orientation.VERTICAL, Orientation.HORIZONTAL)
FEATURES: tuple[Feature, ...] = (
    Feature.BORDER_LIGHT_DARK,
    Feature.BORDER_DARK_LIGHT,
    Feature.EDGE_LIGHT_BAR,
    Feature.EDGE_DARK_BAR,
)
N_SCALES = 4


class CellClass(enum.StrEnum):

    """Kernel families."""

    VENTRAL_EDGE = "ventral_edge"
    VENTRAL_BORDER = "ventral_border"
    DORSAL_EDGE = "dorsal_edge"
    DORSAL_BORDER = "dorsal_border"
    MT_ON = "mt_on"
    MT_OFF = "mt_off"
    COMPLEX_POOL = "complex_pool"


class Stage(enum.StrEnum):

    """Processing stage tag of a response container."""

    SIMPLE = "simple"
    COMPLEX = "complex"
    DORSAL_SIMPLE = "dorsal_simple"
    DORSAL_FEED = "dorsal_feed"
    MT_ON = "mt_on"
    MT_OFF = "mt_off"
    BOS_INITIAL = "bos_initial"
    BOS_FINAL = "bos_final"


class ShapeKind(enum.StrEnum):

    """Stimulus families."""

    SQUARE = "square"
    C_SHAPE = "c_shape"
    OVERLAPPING_SQUARES = "overlapping_squares"
    OUTLINED_SQUARE = "outlined_square"
    PACMAN_DISPLAY = "pacman_display"


# =============================================================================
# Neuron Selector
# =============================================================================


class Neuron(NamedTuple):

    """A border-ownership label: orientation, local feature and side of figure."""

    orientation: Orientation
    feature: Feature
    side: Side

    @classmethod
    def parse(cls, text: str) -> Neuron:
        """
        Parse a ``"θ,s,β"`` selector such as ``"vertical,border_light_dark,left"``.

        Raises
        ------
        ModelError
            If a component is unknown or the side does not belong to the orientation
        """
        parts = [p.strip().lower() for p in text.split(",")]
        if len(parts) != 3:
            raise ModelError(f"Neuron selector needs 3 components, got: {text!r}", "neuron", text)
        try:
            neuron = cls(Orientation(parts[0]), Feature(parts[1]), Side(parts[2]))
        except ValueError as e:
            message = f"Unknown neuron selector component in {text!r}"
            raise ModelError(message, "neuron", text) from e
        if neuron.side not in neuron.orientation.sides:
            raise ModelError(
                f"Side '{neuron.side}' is not an ownership direction of a "
                f"{neuron.orientation} cell",
                "neuron",
                text,
            )
        return neuron

    @property
    def side_index(self) -> int:
        """Position of the side on the side axis."""
        return self.orientation.sides.index(self.side)

    @property
    def index(self) -> tuple[int, int, int]:
        """``(orientation, feature, side)`` indices into a population."""
        return (self.orientation.index, self.feature.index, self.side_index)

    def twin(self) -> Neuron:
        """Same selectivity, opposite side of figure."""
        return Neuron(self.orientation, self.feature, self.side.opposite)

    def __str__(self) -> str:
        """Format as the CLI selector."""
        return f"{self.orientation},{self.feature},{self.side}"


def all_neurons() -> list[Neuron]:
    """All 16 labels in population index order."""
    return [
        Neuron(orientation, feature, side)
        for orientation in ORIENTATIONS
        for feature in FEATURES
        for side in orientation.sides
    ]


# =============================================================================
# Response Containers
# =============================================================================


class ResponseVolume(NamedTuple):

    """
    Rectified response maps for one cell class.

    ``maps`` has shape ``(N, S, C, H, W)``; single-feature stages (dorsal feed,
    MT) use ``S = 1``.
    """

    maps: np.ndarray
    stage: Stage

    @property
    def shape(self) -> tuple[int, ...]:
        """Shape of the map stack."""
        return tuple(self.maps.shape)

    def map(self, orientation: Orientation, feature_index: int, scale: int) -> np.ndarray:
        """Single 2-D response map."""
        return self.maps[orientation.index, feature_index, scale]


class BOSPopulation(NamedTuple):

    """
    Border-ownership responses.

    ``responses`` has shape ``(N, S, 2, C, H, W)`` before scale selection and
    ``(N, S, 2, H, W)`` afterwards.
    """

    responses: np.ndarray
    stage: Stage
    scale_collapsed: bool

    def response(self, neuron: Neuron, scale: int | None = None) -> np.ndarray:
        """Response map of one neuron (and one scale when not collapsed)."""
        o, s, b = neuron.index
        if self.scale_collapsed:
            return self.responses[o, s, b]
        if scale is None:
            raise ModelError("Scale index required before scale selection", "scale", scale)
        return self.responses[o, s, b, scale]

    @property
    def spatial_shape(self) -> tuple[int, int]:
        """``(H, W)`` of the visual field."""
        return tuple(self.responses.shape[-2:])  # type: ignore[return-value]


# =============================================================================
# Structured Results
# =============================================================================


class ValidationResult(NamedTuple):

    """Result of validation operations."""

    is_valid: bool
    errors: list[str]
    warnings: list[str]
    context: dict[str, Any]


class OperationResult(NamedTuple):

    """Result of a CLI operation with structured data."""

    success: bool
    exit_code: ExitCode
    message: str
    data: dict[str, Any]
    errors: list[str]
    warnings: list[str]


def create_structured_error(
    message: str,
    exit_code: ExitCode,
    errors: list[str] | None = None,
    context: dict[str, Any] | None = None,
) -> OperationResult:
    """
    Create a structured error result.

    Parameters
    ----------
    message : str
        Main error message
    exit_code : ExitCode
        Appropriate exit code
    errors : list[str] | None, optional
        List of detailed errors, by default None
    context : dict[str, Any] | None, optional
        Additional context data, by default None

    Returns
    -------
    OperationResult
        OperationResult with error information
    """
    return OperationResult(
        success=False,
        exit_code=exit_code,
        message=message,
        data=context or {},
        errors=errors or [],
        warnings=[],
    )


def create_validation_result(
    is_valid: bool,
    errors: list[str] | None = None,
    warnings: list[str] | None = None,
    context: dict[str, Any] | None = None,
) -> ValidationResult:
    """Create a validation result with standardized structure."""
    return ValidationResult(
        is_valid=is_valid,
        errors=errors or [],
        warnings=warnings or [],
        context=context or {},
    )


# =============================================================================
# Exceptions
# =============================================================================


class ModelError(Exception):

    """Domain error raised by model operations."""

    def __init__(self, message: str, field: str | None = None, value: Any = None):
        """Initialize model error."""
        self.message = message
        self.field = field
        self.value = value
        super().__init__(message)


class StimulusError(ModelError):

    """Malformed stimulus specification or impossible geometry."""


class KernelError(ModelError):

    """Kernel construction or convolution precondition violated."""


class PotentialRangeError(ModelError):

    """Relaxation potential outside [-0.5, 0.5]."""
