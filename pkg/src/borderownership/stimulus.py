#!/usr/bin/env python3
"""
Synthetic display generation for side-of-figure experiments.

Every display is rasterized hard-edged in a canonical frame (vertical border,
figure on the left of the border axis) and then mirrored and/or rotated into
place, so mirror and rotation relations between displays hold pixel for pixel.

Key Features:
- Degree to pixel calibration (``deg_to_px``, ``odd_px``)
- Solid squares, C-shapes, overlapping squares, outlined squares, Pac-Man displays
- Contrast-matched A/B pairs and the six-pair side-of-figure battery
- Ground-truth metadata (probe, occluder mask, shared boundary, mouth edges)
- 8-bit binary graymap import/export via Pillow
"""

from __future__ import annotations

import hashlib
import logging
import math
import pathlib
from collections.abc import Callable
from typing import Any, NamedTuple

import numpy as np
from PIL import Image

from .bos_types import Feature, Orientation, Polarity, ShapeKind, Side, StimulusError
from .config_schema import CanvasConfig, StimulusConfig, default_config

logger = logging.getLogger(__name__)

LUMINANCE_LEVELS = (0.0, 0.5, 1.0)


# =============================================================================
# Calibration
# =============================================================================


def deg_to_px(deg: float, px_per_deg: float = 32.0) -> int:
    """
    Convert visual degrees to whole pixels (round half up).

    Raises
    ------
    StimulusError
        If ``deg`` is negative
    """
    if deg < 0:
        raise StimulusError(f"Visual angle must be non-negative, got {deg}", "deg", deg)
    return math.floor(deg * px_per_deg + 0.5)


def odd_px(deg: float, px_per_deg: float = 32.0) -> int:
    """Convert visual degrees to the nearest odd pixel count (kernel sizes)."""
    if deg < 0:
        raise StimulusError(f"Visual angle must be non-negative, got {deg}", "deg", deg)
    value = deg * px_per_deg
    return 2 * math.floor((value - 1) / 2 + 0.5) + 1


# =============================================================================
# Data Types
# =============================================================================


class Canvas(NamedTuple):

    """Luminance image with its calibration; arrays are read-only."""

    width: int
    height: int
    luminance: np.ndarray
    px_per_deg: float
    metadata: dict[str, Any]

    @property
    def probe(self) -> tuple[int, int]:
        """Fixed probe location ``(row, col)`` at the canvas center."""
        return (self.height // 2, self.width // 2)

    def digest(self) -> str:
        """Content hash of luminance and calibration."""
        h = hashlib.sha256()
        h.update(f"{self.height}x{self.width}@{self.px_per_deg!r}".encode())
        h.update(np.ascontiguousarray(self.luminance, dtype=np.float64).tobytes())
        return h.hexdigest()


def make_canvas(
    luminance: np.ndarray, px_per_deg: float = 32.0, metadata: dict[str, Any] | None = None
) -> Canvas:
    """
    Wrap a luminance grid as an immutable canvas.

    Raises
    ------
    StimulusError
        If the grid is not 2-D or leaves [0, 1]
    """
    lum = np.array(luminance, dtype=np.float64)
    if lum.ndim != 2:
        raise StimulusError("Luminance grid must be 2-D", "luminance", lum.shape)
    if lum.size and (lum.min() < 0.0 or lum.max() > 1.0):
        bounds = (lum.min(), lum.max())
        raise StimulusError("Luminance values must lie in [0, 1]", "luminance", bounds)
    lum.setflags(write=False)
    meta = dict(metadata or {})
    for value in meta.values():
        if isinstance(value, np.ndarray):
            value.setflags(write=False)
    return Canvas(lum.shape[1], lum.shape[0], lum, float(px_per_deg), meta)


class StimulusSpec(NamedTuple):

    """Parameters of one display; geometry in degrees unless suffixed ``_px``."""

    shape_kind: ShapeKind
    figure_side: Side = Side.LEFT
    figure_lum: float = 1.0
    ground_lum: float = 0.0
    size_deg: float = 4.0
    offset_px: int = 0
    rotation: int = 0
    count: int = 4
    outline_width_px: int = 2
    background_lum: float = 0.5
    notch_depth_frac: float = 0.5
    notch_height_frac: float = 0.4
    overlap_frac: float = 0.5
    overlap_shift_frac: float = 0.25
    disc_radius_deg: float = 1.5
    spacing_deg: float = 4.0
    corner_exclusion_deg: float = 0.3
    rim_exclusion_deg: float = 0.2
    width: int = 400
    height: int = 400
    px_per_deg: float = 32.0

    @classmethod
    def from_config(
        cls,
        shape_kind: ShapeKind,
        stimulus: StimulusConfig,
        canvas: CanvasConfig,
        **overrides: Any,
    ) -> StimulusSpec:
        """Build a spec whose defaults come from the configuration sections."""
        values: dict[str, Any] = {
            "shape_kind": shape_kind,
            "figure_lum": stimulus.figure_lum,
            "ground_lum": stimulus.ground_lum,
            "size_deg": stimulus.small_square_deg,
            "outline_width_px": stimulus.outline_width_px,
            "background_lum": stimulus.background_lum,
            "notch_depth_frac": stimulus.notch_depth_frac,
            "notch_height_frac": stimulus.notch_height_frac,
            "overlap_frac": stimulus.overlap_frac,
            "overlap_shift_frac": stimulus.overlap_shift_frac,
            "disc_radius_deg": stimulus.disc_radius_deg,
            "spacing_deg": stimulus.spacing_deg,
            "corner_exclusion_deg": stimulus.corner_exclusion_deg,
            "rim_exclusion_deg": stimulus.rim_exclusion_deg,
            "width": canvas.width,
            "height": canvas.height,
            "px_per_deg": canvas.px_per_deg,
        }
        values.update(overrides)
        return cls(**values)


def validate_spec(spec: StimulusSpec) -> None:
    """
    Check the type invariants of a stimulus specification.

    Raises
    ------
    StimulusError
        On the first violated invariant
    """
    for name in ("figure_lum", "ground_lum", "background_lum"):
        value = getattr(spec, name)
        if not 0.0 <= value <= 1.0:
            raise StimulusError(f"'{name}' must lie in [0, 1]", name, value)
    if spec.figure_lum == spec.ground_lum:
        raise StimulusError("figure_lum must differ from ground_lum", "figure_lum", spec.figure_lum)
    if spec.size_deg <= 0:
        raise StimulusError("size_deg must be positive", "size_deg", spec.size_deg)
    if spec.count not in (1, 2, 4):
        raise StimulusError("count must be 1, 2 or 4", "count", spec.count)
    if spec.rotation not in (0, 90):
        raise StimulusError("rotation must be 0 or 90", "rotation", spec.rotation)
    if spec.rotation == 90 and spec.figure_side in (Side.UP, Side.DOWN):
        raise StimulusError(
            "figure_side up/down already implies a rotated display", "rotation", spec.rotation
        )
    if spec.outline_width_px < 1:
        raise StimulusError(
            "outline_width_px must be at least 1", "outline_width_px", spec.outline_width_px
        )
    if spec.width < 2 or spec.height < 2:
        raise StimulusError("Canvas too small", "width", (spec.width, spec.height))


# =============================================================================
# Canonical Rasterization (vertical border, figure left of the axis)
# =============================================================================


Raster = tuple[np.ndarray, dict[str, Any]]


def _fill_rect(lum: np.ndarray, top: int, bottom: int, left: int, right: int, value: float) -> bool:
    """Fill a clipped rectangle; returns True when clipping occurred."""
    h, w = lum.shape
    clipped = top < 0 or left < 0 or bottom > h or right > w
    r0, r1 = min(max(top, 0), h), min(max(bottom, 0), h)
    c0, c1 = min(max(left, 0), w), min(max(right, 0), w)
    lum[r0:r1, c0:c1] = value
    return clipped


def _square_box(spec: StimulusSpec, shape: tuple[int, int]) -> tuple[int, int, int, int]:
    """``(top, bottom, left, right)`` of the figure square in the canonical frame."""
    h, w = shape
    size = deg_to_px(spec.size_deg, spec.px_per_deg)
    axis = w // 2 + spec.offset_px
    if not 0 < axis < w:
        raise StimulusError("Border axis falls outside the canvas", "offset_px", spec.offset_px)
    top = h // 2 - size // 2
    return top, top + size, axis - size, axis


def _raster_square(spec: StimulusSpec, shape: tuple[int, int]) -> Raster:
    lum = np.full(shape, spec.ground_lum)
    top, bottom, left, right = _square_box(spec, shape)
    clipped = _fill_rect(lum, top, bottom, left, right, spec.figure_lum)
    return lum, {"clipped": clipped, "border_position": right}


def _raster_c_shape(spec: StimulusSpec, shape: tuple[int, int]) -> Raster:
    lum, meta = _raster_square(spec, shape)
    top, bottom, left, _ = _square_box(spec, shape)
    size = bottom - top
    depth = round(spec.notch_depth_frac * size)
    height = round(spec.notch_height_frac * size)
    notch_top = shape[0] // 2 - height // 2
    _fill_rect(lum, notch_top, notch_top + height, left, left + depth, spec.ground_lum)
    return lum, meta


def _raster_outline(spec: StimulusSpec, shape: tuple[int, int]) -> Raster:
    # Strokes are centered on the square's edges so the border-side stroke is
    # centered on the axis.
    lum = np.full(shape, spec.ground_lum)
    top, bottom, left, right = _square_box(spec, shape)
    lo, hi = (spec.outline_width_px + 1) // 2, spec.outline_width_px // 2
    clipped = False
    for col in (left, right):
        clipped |= _fill_rect(lum, top - lo, bottom + hi, col - lo, col + hi, spec.figure_lum)
    for row in (top, bottom):
        clipped |= _fill_rect(lum, row - lo, row + hi, left - lo, right + hi, spec.figure_lum)
    return lum, {"clipped": clipped, "border_position": right}


def _raster_overlap(spec: StimulusSpec, shape: tuple[int, int]) -> Raster:
    if not 0.0 < spec.overlap_frac < 1.0 or spec.overlap_shift_frac >= 1.0:
        raise StimulusError(
            "Overlapping squares need a positive overlap area", "overlap_frac", spec.overlap_frac
        )
    h, w = shape
    lum = np.full(shape, spec.background_lum)
    top, bottom, left, right = _square_box(spec, shape)
    size = bottom - top
    occ_left = right - round(spec.overlap_frac * size)
    occ_top = top + round(spec.overlap_shift_frac * size)
    if occ_left >= right or occ_top >= bottom:
        raise StimulusError("Overlapping squares do not overlap", "overlap_frac", spec.overlap_frac)

    # Painter's order: occluded first, occluder last.
    clipped = _fill_rect(lum, occ_top, occ_top + size, occ_left, occ_left + size, spec.ground_lum)
    clipped |= _fill_rect(lum, top, bottom, left, right, spec.figure_lum)
    mask = np.zeros(shape, dtype=bool)
    _fill_rect(mask, top, bottom, left, right, True)

    boundary: list[tuple[int, int, Side]] = []
    for row in range(max(occ_top, 0), min(bottom, h)):
        for col in (right - 1, right):
            if 0 <= col < w:
                boundary.append((row, col, Side.LEFT))
    if bottom < occ_top + size:
        for col in range(max(occ_left, 0), min(right, w)):
            for row in (bottom - 1, bottom):
                if 0 <= row < h:
                    boundary.append((row, col, Side.UP))
    return lum, {
        "clipped": clipped,
        "border_position": right,
        "occluder_mask": mask,
        "shared_boundary": boundary,
    }


_PACMAN_CORNERS = ((-1, -1), (-1, 1), (1, -1), (1, 1))


def _raster_pacman(spec: StimulusSpec, shape: tuple[int, int]) -> Raster:
    h, w = shape
    lum = np.full(shape, spec.ground_lum)
    half = deg_to_px(spec.spacing_deg, spec.px_per_deg) // 2
    radius = spec.disc_radius_deg * spec.px_per_deg
    cy, cx = h // 2, w // 2 + spec.offset_px
    yy, xx = np.mgrid[0:h, 0:w] + 0.5
    first = math.ceil(spec.corner_exclusion_deg * spec.px_per_deg)
    last = math.floor(radius - spec.rim_exclusion_deg * spec.px_per_deg)

    edges: list[tuple[int, int, Side, Side]] = []
    clipped = False
    for sy, sx in _PACMAN_CORNERS[: spec.count]:
        y0, x0 = cy + sy * half, cx + sx * half
        # mouth opens toward the display center
        sy, sx = -sy, -sx
        dy, dx = yy - y0, xx - x0
        body = (dy * dy + dx * dx <= radius * radius) & ~((dy * sy > 0) & (dx * sx > 0))
        lum[body] = spec.figure_lum
        clipped |= not (radius <= y0 <= h - radius and radius <= x0 <= w - radius)

        horizontal_owner = Side.UP if sy > 0 else Side.DOWN
        vertical_owner = Side.LEFT if sx > 0 else Side.RIGHT
        for t in range(first, last + 1):
            col = x0 + t if sx > 0 else x0 - 1 - t
            row = y0 + t if sy > 0 else y0 - 1 - t
            for r in (y0 - 1, y0):
                edges.append((r, col, horizontal_owner, horizontal_owner.opposite))
            for c in (x0 - 1, x0):
                edges.append((row, c, vertical_owner, vertical_owner.opposite))
    edges = [e for e in edges if 0 <= e[0] < h and 0 <= e[1] < w]
    return lum, {"clipped": clipped, "mouth_edges": edges}


_RASTERIZERS: dict[ShapeKind, Callable[[StimulusSpec, tuple[int, int]], Raster]] = {
    ShapeKind.SQUARE: _raster_square,
    ShapeKind.C_SHAPE: _raster_c_shape,
    ShapeKind.OUTLINED_SQUARE: _raster_outline,
    ShapeKind.OVERLAPPING_SQUARES: _raster_overlap,
    ShapeKind.PACMAN_DISPLAY: _raster_pacman,
}


# =============================================================================
# Frame Transforms
# =============================================================================

_MIRROR_SIDES = {
    Side.LEFT: Side.RIGHT,
    Side.RIGHT: Side.LEFT,
    Side.UP: Side.UP,
    Side.DOWN: Side.DOWN,
}
_ROTATE_SIDES = {
    Side.LEFT: Side.UP,
    Side.UP: Side.RIGHT,
    Side.RIGHT: Side.DOWN,
    Side.DOWN: Side.LEFT,
}


def _transform(
    lum: np.ndarray,
    meta: dict[str, Any],
    image_fn: Callable[[np.ndarray], np.ndarray],
    point_fn: Callable[[int, int], tuple[int, int]],
    sides: dict[Side, Side],
) -> tuple[np.ndarray, dict[str, Any]]:
    out = dict(meta)
    if "occluder_mask" in meta:
        out["occluder_mask"] = image_fn(meta["occluder_mask"]).copy()
    if "shared_boundary" in meta:
        out["shared_boundary"] = [
            (*point_fn(r, c), sides[s]) for r, c, s in meta["shared_boundary"]
        ]
    if "mouth_edges" in meta:
        out["mouth_edges"] = [
            (*point_fn(r, c), sides[a], sides[b]) for r, c, a, b in meta["mouth_edges"]
        ]
    return image_fn(lum).copy(), out


def _mirror(lum: np.ndarray, meta: dict[str, Any]) -> tuple[np.ndarray, dict[str, Any]]:
    w = lum.shape[1]
    lum, out = _transform(lum, meta, np.fliplr, lambda r, c: (r, w - 1 - c), _MIRROR_SIDES)
    if "border_position" in meta:
        out["border_position"] = w - meta["border_position"]
    return lum, out


def _rotate(lum: np.ndarray, meta: dict[str, Any]) -> tuple[np.ndarray, dict[str, Any]]:
    # Clockwise: pixel (r, c) moves to (c, H - 1 - r); the left half becomes the top.
    h = lum.shape[0]
    return _transform(
        lum, meta, lambda a: np.rot90(a, k=-1), lambda r, c: (c, h - 1 - r), _ROTATE_SIDES
    )


# =============================================================================
# Display Construction
# =============================================================================


def _render(spec: StimulusSpec) -> Canvas:
    validate_spec(spec)
    side = spec.figure_side
    rotate = spec.rotation == 90 or side in (Side.UP, Side.DOWN)
    mirror = side in (Side.RIGHT, Side.DOWN) and spec.shape_kind is not ShapeKind.PACMAN_DISPLAY
    shape = (spec.width, spec.height) if rotate else (spec.height, spec.width)

    canonical = spec._replace(offset_px=-spec.offset_px) if mirror else spec
    lum, meta = _RASTERIZERS[spec.shape_kind](canonical, shape)
    if mirror:
        lum, meta = _mirror(lum, meta)
    if rotate:
        lum, meta = _rotate(lum, meta)

    if meta.get("clipped"):
        logger.debug("Display %s clipped at the canvas edge", spec.shape_kind)
    if spec.rotation == 90:
        side = _ROTATE_SIDES[side]
    meta.update(
        {
            "shape_kind": spec.shape_kind.value,
            "figure_side": side.value,
            "border_orientation": (
                Orientation.HORIZONTAL if rotate else Orientation.VERTICAL
            ).value,
            "figure_lum": spec.figure_lum,
            "ground_lum": spec.ground_lum,
            "size_deg": spec.size_deg,
            "offset_px": spec.offset_px,
        }
    )
    return make_canvas(lum, spec.px_per_deg, meta)


def make_square(spec: StimulusSpec) -> Canvas:
    """
    Render a solid square beside a straight border through the canvas center.

    Parameters
    ----------
    spec : StimulusSpec
        Specification with ``shape_kind = square``

    Returns
    -------
    Canvas
        Rendered display; ``metadata["clipped"]`` flags a square larger than the canvas

    Raises
    ------
    StimulusError
        If the spec is not a square or violates an invariant
    """
    if spec.shape_kind is not ShapeKind.SQUARE:
        raise StimulusError("make_square needs shape_kind 'square'", "shape_kind", spec.shape_kind)
    return _render(spec)


def make_display(spec: StimulusSpec) -> Canvas:
    """
    Render a C-shape, overlapping squares, outlined square or Pac-Man display.

    Raises
    ------
    StimulusError
        If the spec is a plain square, malformed, or the squares do not overlap
    """
    if spec.shape_kind is ShapeKind.SQUARE:
        raise StimulusError("Use make_square for plain squares", "shape_kind", spec.shape_kind)
    return _render(spec)


def render_stimulus(spec: StimulusSpec) -> Canvas:
    """Render any stimulus kind."""
    return make_square(spec) if spec.shape_kind is ShapeKind.SQUARE else make_display(spec)


def pair_spec(spec: StimulusSpec) -> StimulusSpec:
    """
    The contrast-matched partner of a display.

    The figure moves to the other side of the border axis and, for solid
    displays, figure and ground luminances are exchanged so that the local
    luminance step at the border is unchanged.
    """
    partner = spec._replace(figure_side=spec.figure_side.opposite)
    if spec.shape_kind is ShapeKind.OUTLINED_SQUARE:
        return partner
    return partner._replace(figure_lum=spec.ground_lum, ground_lum=spec.figure_lum)


def central_patch_digest(canvas: Canvas, half_deg: float = 0.5) -> str:
    """Hash of the ``±half_deg`` patch around the probe."""
    half = deg_to_px(half_deg, canvas.px_per_deg)
    row, col = canvas.probe
    rows = slice(max(row - half, 0), row + half + 1)
    patch = canvas.luminance[rows, slice(max(col - half, 0), col + half + 1)]
    return hashlib.sha256(np.ascontiguousarray(patch).tobytes()).hexdigest()


# =============================================================================
# Side-of-Figure Battery
# =============================================================================


class BatteryItem(NamedTuple):

    """One canvas of an A/B battery."""

    stimulus_id: str
    pair_id: str
    role: str
    canvas: Canvas
    spec: StimulusSpec
    matching_polarity: bool


BATTERY_PAIRS: tuple[tuple[str, ShapeKind, str, bool], ...] = (
    ("1_small_square", ShapeKind.SQUARE, "small", True),
    ("2_small_square_reversed", ShapeKind.SQUARE, "small", False),
    ("3_large_square", ShapeKind.SQUARE, "large", True),
    ("4_large_square_reversed", ShapeKind.SQUARE, "large", False),
    ("5_c_shape", ShapeKind.C_SHAPE, "small", True),
    ("6_overlapping_squares", ShapeKind.OVERLAPPING_SQUARES, "small", True),
)


def polarity_luminances(polarity: Polarity, stimulus: StimulusConfig) -> tuple[float, float]:
    """
    ``(figure_lum, ground_lum)`` for a figure on the negative-normal side whose
    border step matches ``polarity``.
    """
    light, dark = max(stimulus.figure_lum, stimulus.ground_lum), min(
        stimulus.figure_lum, stimulus.ground_lum
    )
    return (light, dark) if polarity is Polarity.POSITIVE else (dark, light)


def zhou_battery(
    orientation: Orientation,
    feature: Feature,
    stimulus: StimulusConfig | None = None,
    canvas: CanvasConfig | None = None,
) -> list[BatteryItem]:
    """
    Build the six-pair A/B side-of-figure battery for one cell family.

    Role ``A`` has the figure on the negative-normal side (left or up), role
    ``B`` is its contrast-matched partner, so the patch around the probe is
    identical within each pair. Horizontal batteries are the vertical ones
    rotated clockwise by 90 degrees.

    Parameters
    ----------
    orientation : Orientation
        Border orientation of the tested cells
    feature : Feature
        Local feature; its polarity decides which columns match
    stimulus : StimulusConfig | None, optional
        Display defaults, by default the schema defaults
    canvas : CanvasConfig | None, optional
        Canvas size and calibration, by default the schema defaults

    Returns
    -------
    list[BatteryItem]
        Twelve canvases in pair order, A before B
    """
    defaults = default_config()
    stimulus = stimulus or defaults.stimulus
    canvas = canvas or defaults.canvas
    sizes = {"small": stimulus.small_square_deg, "large": stimulus.large_square_deg}
    positive = feature.polarity is Polarity.POSITIVE
    polarity_name = "light_dark" if positive else "dark_light"

    items = []
    for pair_id, kind, size, matching in BATTERY_PAIRS:
        polarity = Polarity.POSITIVE if positive == matching else Polarity.NEGATIVE
        figure_lum, ground_lum = polarity_luminances(polarity, stimulus)
        spec_a = StimulusSpec.from_config(
            kind,
            stimulus,
            canvas,
            figure_side=orientation.sides[0],
            figure_lum=figure_lum,
            ground_lum=ground_lum,
            size_deg=sizes[size],
        )
        for role, spec in (("A", spec_a), ("B", pair_spec(spec_a))):
            stimulus_id = f"{orientation}_{polarity_name}_{pair_id}_{role}"
            canvas_item = render_stimulus(spec)
            items.append(BatteryItem(stimulus_id, pair_id, role, canvas_item, spec, matching))
    return items


# =============================================================================
# Graymap I/O
# =============================================================================


def write_pgm(canvas: Canvas, file_path: pathlib.Path | str) -> pathlib.Path:
    """Write a canvas as an 8-bit binary graymap (P5)."""
    path = pathlib.Path(file_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pixels = np.rint(np.asarray(canvas.luminance) * 255.0).astype(np.uint8)
    Image.fromarray(pixels).save(path, format="PPM")
    return path


def read_pgm(
    file_path: pathlib.Path | str,
    px_per_deg: float = 32.0,
    levels: tuple[float, ...] | None = LUMINANCE_LEVELS,
) -> Canvas:
    """
    Read an 8-bit graymap as a canvas.

    Values within one gray step of a calibrated level snap to it, so the
    three battery levels survive a write/read cycle exactly.
    """
    path = pathlib.Path(file_path)
    if not path.exists():
        raise StimulusError(f"Graymap not found: {path}", "file_path", str(path))
    with Image.open(path) as image:
        lum = np.asarray(image.convert("L"), dtype=np.float64) / 255.0
    if levels:
        for level in levels:
            lum[np.abs(lum - level) < 1.0 / 255.0] = level
    return make_canvas(lum, px_per_deg, {"source": str(path)})
