#!/usr/bin/env python3
"""
Ventral simple and complex cell responses.

Simple cells correlate the canvas with the Gabor (border) and odd DoG (edge)
kernels at four scales and both orientations and are half-wave rectified.
Border cells keep the contrast polarity of their Gabor. Edge cells are bar
detectors: each sums the two rectified odd-DoG responses to the bar's flanks,
half a bar width either side of its center, so a single step drives them at
either polarity. Complex cells pool same-selectivity simple cells with a
Gaussian.
"""

from __future__ import annotations

import logging

import numpy as np

from .bos_types import (
    FEATURES,
    N_SCALES,
    ORIENTATIONS,
    Feature,
    ModelError,
    Orientation,
    ResponseVolume,
    Stage,
)
from .config_schema import FilterConfig, default_config
from .filters import (
    KernelBank,
    build_kernel_bank,
    convolve,
    half_wave,
    parallel_map,
    shift_nearest,
)
from .stimulus import Canvas

logger = logging.getLogger(__name__)

_NORMALS = {Orientation.VERTICAL: (0, 1), Orientation.HORIZONTAL: (1, 0)}


def _bank(bank: KernelBank | None, filters: FilterConfig | None, px_per_deg: float) -> KernelBank:
    if bank is not None:
        return bank
    config = default_config()
    return build_kernel_bank(filters or config.filters, px_per_deg, config.dorsal.gain)


def edge_bar(response: np.ndarray, orientation: Orientation, halfwidth: int) -> np.ndarray:
    """
    Bar-cell map from an odd-DoG response.

    The cell at ``x`` sums the rectified step response at ``x + h * n`` and
    the rectified reversed step response at ``x - h * n``, where ``n`` is the
    positive normal of ``orientation``. A bar of the cell's polarity and
    width ``2 * h`` drives both terms; a lone step of either sign drives one.
    """
    d_row, d_col = _NORMALS[orientation]
    far = shift_nearest(response, halfwidth * d_row, halfwidth * d_col)
    near = shift_nearest(response, -halfwidth * d_row, -halfwidth * d_col)
    return half_wave(far) + half_wave(-near)


def simple_responses(
    canvas: Canvas,
    filters: FilterConfig | None = None,
    bank: KernelBank | None = None,
    threads: int = 1,
) -> ResponseVolume:
    """
    Rectified simple-cell maps of shape ``(N, S, C, H, W)``.

    Parameters
    ----------
    canvas : Canvas
        Calibrated input display
    filters : FilterConfig | None, optional
        Kernel parameters, by default the schema defaults
    bank : KernelBank | None, optional
        Prebuilt kernels (overrides ``filters``), by default None
    threads : int, optional
        Worker threads for independent maps, by default 1

    Returns
    -------
    ResponseVolume
        Stage ``simple``
    """
    bank = _bank(bank, filters, canvas.px_per_deg)
    keys = [(o, f, c) for o in ORIENTATIONS for f in FEATURES for c in range(N_SCALES)]

    def respond(key: tuple[Orientation, Feature, int]) -> np.ndarray:
        orientation, feature, scale = key
        response = convolve(canvas.luminance, bank.ventral[key])
        if feature.is_border:
            return half_wave(response)
        return edge_bar(response, orientation, bank.edge_halfwidth_px[scale])

    maps = parallel_map(respond, keys, threads)
    shape = (len(ORIENTATIONS), len(FEATURES), N_SCALES, *canvas.luminance.shape)
    volume = np.stack(maps).reshape(shape)
    return ResponseVolume(volume, Stage.SIMPLE)


def complex_responses(
    simple: ResponseVolume,
    filters: FilterConfig | None = None,
    px_per_deg: float = 32.0,
    bank: KernelBank | None = None,
    threads: int = 1,
) -> ResponseVolume:
    """
    Gaussian-pooled complex-cell maps (pool sigma tied to the scale's RF).

    Raises
    ------
    ModelError
        If the input is not a simple-cell volume
    """
    if simple.stage is not Stage.SIMPLE:
        raise ModelError(
            f"Complex pooling needs simple responses, got {simple.stage}", "stage", simple.stage
        )
    bank = _bank(bank, filters, px_per_deg)
    n_o, n_f, n_c = simple.maps.shape[:3]
    keys = [(o, f, c) for o in range(n_o) for f in range(n_f) for c in range(n_c)]
    maps = parallel_map(
        lambda key: half_wave(convolve(simple.maps[key], bank.pooling[key[2]])), keys, threads
    )
    return ResponseVolume(np.stack(maps).reshape(simple.maps.shape), Stage.COMPLEX)
