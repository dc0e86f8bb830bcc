#!/usr/bin/env python3
"""
Initial border-ownership responses from MT surround modulation.

A border-ownership cell multiplies its complex-cell drive by the weighted MT
activity found on one side of its receptive field (the side it assigns the
figure to). The context of side ``beta`` at scale ``c`` is

    ctx(x) = sum_d w(|d|) * (sum_phi MT_ON(x + d, phi, c) + sum_phi MT_OFF(x + d, phi, c))

over surround offsets ``d`` on the ``beta`` side, with offsets falling outside
the map contributing nothing. With ``area`` sampling each lattice sample reads
the mean MT activity of the lattice cell around it instead of a single pixel,
so thin MT ridges between lattice points still reach the surround.
"""

from __future__ import annotations

import logging
import math
from typing import NamedTuple

import numpy as np
from scipy import ndimage

from .bos_types import (
    ORIENTATIONS,
    BOSPopulation,
    ModelError,
    ResponseVolume,
    Side,
    Stage,
)
from .config_schema import (
    SURROUND_GEOMETRIES,
    SURROUND_SAMPLING,
    WEIGHT_FUNCTIONS,
    FilterConfig,
    SurroundConfig,
)
from .filters import parallel_map
from .stimulus import deg_to_px, odd_px

logger = logging.getLogger(__name__)


class SurroundOffset(NamedTuple):

    """One surround sample: displacement, distance and weight."""

    d_row: int
    d_col: int
    distance: float
    weight: float


class SurroundSpec(NamedTuple):

    """One-sided MT surround; ``step_px`` gives the sampling step per scale."""

    max_extent_deg: float = 9.0
    start_deg: float = 0.25
    step_px: tuple[int, ...] = (20, 26, 32, 38)
    weight_fn: str = "linear_negative_slope"
    geometry: str = "half_disc"
    px_per_deg: float = 32.0
    sampling: str = "point"

    @classmethod
    def from_config(
        cls, surround: SurroundConfig, filters: FilterConfig, px_per_deg: float
    ) -> SurroundSpec:
        """Surround whose sampling step is ``step_ratio`` of each scale's MT receptive field."""
        steps = tuple(
            max(1, math.floor(odd_px(rf, px_per_deg) * surround.step_ratio + 0.5))
            for rf in filters.mt_rf_deg
        )
        return cls(
            max_extent_deg=surround.max_extent_deg,
            start_deg=surround.start_deg,
            step_px=steps,
            weight_fn=surround.weight_fn,
            geometry=surround.geometry,
            px_per_deg=px_per_deg,
            sampling=surround.sampling,
        )

    @property
    def max_extent_px(self) -> int:
        """Surround radius in pixels."""
        return deg_to_px(self.max_extent_deg, self.px_per_deg)

    @property
    def start_px(self) -> int:
        """Nearest sample distance from the border in pixels."""
        return deg_to_px(self.start_deg, self.px_per_deg)

    def weight(self, distance: float) -> float:
        """
        Surround weight, 1 at distance 0 and non-increasing.

        Raises
        ------
        ModelError
            If ``weight_fn`` is unknown
        """
        d_max = float(self.max_extent_px)
        if self.weight_fn == "linear_negative_slope":
            return max(0.0, 1.0 - distance / d_max)
        if self.weight_fn == "gaussian":
            sigma = d_max / 3.0
            return math.exp(-(distance**2) / (2.0 * sigma * sigma))
        raise ModelError(f"Unknown weight function '{self.weight_fn}'", "weight_fn", self.weight_fn)


def surround_offsets(spec: SurroundSpec, beta: Side, scale: int) -> list[SurroundOffset]:
    """
    Sample offsets of the ``beta`` surround at one scale.

    ``ray`` geometry steps along the unit vector of ``beta`` only;
    ``half_disc`` also steps sideways on the same lattice, keeping samples
    within the surround radius. Zero-weight samples are dropped.

    Raises
    ------
    ModelError
        If the geometry is unknown or the scale has no step
    """
    if spec.geometry not in SURROUND_GEOMETRIES:
        raise ModelError(f"Unknown surround geometry '{spec.geometry}'", "geometry", spec.geometry)
    if spec.weight_fn not in WEIGHT_FUNCTIONS:
        raise ModelError(f"Unknown weight function '{spec.weight_fn}'", "weight_fn", spec.weight_fn)
    if not 0 <= scale < len(spec.step_px):
        raise ModelError(f"No surround step for scale {scale}", "scale", scale)

    step, d_max = spec.step_px[scale], spec.max_extent_px
    u_row, u_col = beta.unit
    t_row, t_col = abs(u_col), abs(u_row)
    reach = d_max // step if spec.geometry == "half_disc" else 0

    offsets = []
    for normal in range(spec.start_px, d_max + 1, step):
        for k in range(-reach, reach + 1):
            tangential = k * step
            distance = math.hypot(normal, tangential)
            if distance > d_max:
                continue
            weight = spec.weight(distance)
            if weight > 0.0:
                offsets.append(
                    SurroundOffset(
                        normal * u_row + tangential * t_row,
                        normal * u_col + tangential * t_col,
                        distance,
                        weight,
                    )
                )
    return offsets


def sampling_window(surround: SurroundSpec, scale: int) -> int:
    """
    Side of the square each surround sample averages over (1 for point sampling).

    Area windows span one lattice step, rounded up to an odd size so they stay
    centered on the sample.

    Raises
    ------
    ModelError
        If the sampling mode is unknown or the scale has no step
    """
    if surround.sampling not in SURROUND_SAMPLING:
        raise ModelError(
            f"Unknown surround sampling '{surround.sampling}'", "sampling", surround.sampling
        )
    if not 0 <= scale < len(surround.step_px):
        raise ModelError(f"No surround step for scale {scale}", "scale", scale)
    if surround.sampling == "point":
        return 1
    step = surround.step_px[scale]
    return step if step % 2 else step + 1


def _context_source(
    mt_on: ResponseVolume, mt_off: ResponseVolume, scale: int, surround: SurroundSpec
) -> np.ndarray:
    """Orientation-summed MT activity at one scale, area-averaged when configured."""
    source = mt_on.maps[:, 0, scale].sum(axis=0) + mt_off.maps[:, 0, scale].sum(axis=0)
    size = sampling_window(surround, scale)
    if size == 1:
        return source
    return ndimage.uniform_filter(source, size=size, mode="constant", cval=0.0)


def _accumulate(source: np.ndarray, offsets: list[SurroundOffset]) -> np.ndarray:
    h, w = source.shape
    out = np.zeros_like(source)
    for off in offsets:
        dr, dc = off.d_row, off.d_col
        r0, r1 = max(0, -dr), min(h, h - dr)
        c0, c1 = max(0, -dc), min(w, w - dc)
        if r0 < r1 and c0 < c1:
            out[r0:r1, c0:c1] += off.weight * source[r0 + dr : r1 + dr, c0 + dc : c1 + dc]
    return out


def mt_context(
    mt_on: ResponseVolume,
    mt_off: ResponseVolume,
    row: int,
    col: int,
    beta: Side,
    scale: int,
    surround: SurroundSpec,
) -> float:
    """
    MT surround context of one location.

    Parameters
    ----------
    mt_on, mt_off : ResponseVolume
        MT on-center and off-center volumes
    row, col : int
        Location of the border-ownership cell
    beta : Side
        Side of the surround
    scale : int
        Scale index
    surround : SurroundSpec
        Surround extent, lattice and weighting

    Returns
    -------
    float
        Weighted surround sum; offsets outside the map contribute 0
    """
    source = _context_source(mt_on, mt_off, scale, surround)
    h, w = source.shape
    total = 0.0
    for off in surround_offsets(surround, beta, scale):
        r, c = row + off.d_row, col + off.d_col
        if 0 <= r < h and 0 <= c < w:
            total += off.weight * source[r, c]
    return float(total)


def context_map(
    mt_on: ResponseVolume,
    mt_off: ResponseVolume,
    beta: Side,
    scale: int,
    surround: SurroundSpec,
) -> np.ndarray:
    """``mt_context`` evaluated at every location."""
    offsets = surround_offsets(surround, beta, scale)
    return _accumulate(_context_source(mt_on, mt_off, scale, surround), offsets)


def bos_initial(
    complex_volume: ResponseVolume,
    mt_on: ResponseVolume,
    mt_off: ResponseVolume,
    surround: SurroundSpec,
    threads: int = 1,
) -> BOSPopulation:
    """
    Border-ownership responses ``B = C * ctx`` of shape ``(N, S, 2, C, H, W)``.

    Returns
    -------
    BOSPopulation
        Stage ``bos_initial`` with all scales kept

    Raises
    ------
    ModelError
        If the complex volume is not at the complex stage
    """
    if complex_volume.stage is not Stage.COMPLEX:
        raise ModelError(
            f"Border ownership needs complex responses, got {complex_volume.stage}",
            "stage",
            complex_volume.stage,
        )
    n_o, n_f, n_c, h, w = complex_volume.maps.shape
    keys = [
        (o, b, side, c) for o in ORIENTATIONS for b, side in enumerate(o.sides) for c in range(n_c)
    ]
    contexts = parallel_map(
        lambda key: context_map(mt_on, mt_off, key[2], key[3], surround), keys, threads
    )

    responses = np.zeros((n_o, n_f, 2, n_c, h, w))
    for (o, b, _, c), ctx in zip(keys, contexts, strict=True):
        responses[o.index, :, b, c] = complex_volume.maps[o.index, :, c] * ctx
    return BOSPopulation(responses, Stage.BOS_INITIAL, scale_collapsed=False)


def scale_select(pop: BOSPopulation) -> BOSPopulation:
    """Combine scales by pointwise maximum, giving ``(N, S, 2, H, W)``."""
    if pop.scale_collapsed:
        raise ModelError("Population is already scale-collapsed", "scale_collapsed", True)
    return BOSPopulation(pop.responses.max(axis=3), pop.stage, scale_collapsed=True)
