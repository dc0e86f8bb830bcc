#!/usr/bin/env python3
"""
Dorsal simple cells and MT on/off-center cells.

Dorsal responses pass through the saturating contrast rectifier ``phi`` so that
low-contrast borders already drive them close to their maximum.
"""

from __future__ import annotations

import dataclasses
import logging
from typing import Any

import numpy as np

from .bos_types import FEATURES, N_SCALES, ORIENTATIONS, ModelError, ResponseVolume, Stage
from .config_schema import DorsalConfig, FilterConfig, default_config
from .filters import KernelBank, build_kernel_bank, convolve, half_wave, parallel_map
from .stimulus import Canvas

logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class RectifierParams:

    """Contrast rectifier parameters."""

    gamma: float = 0.001
    rho: float = 0.02

    def __post_init__(self) -> None:
        """Validate positivity."""
        if self.gamma <= 0:
            raise ModelError("gamma must be positive", "gamma", self.gamma)
        if self.rho <= 0:
            raise ModelError("rho must be positive", "rho", self.rho)

    @classmethod
    def from_config(cls, dorsal: DorsalConfig) -> RectifierParams:
        """Rectifier from the ``dorsal`` config section."""
        return cls(gamma=dorsal.gamma, rho=dorsal.rho)


def phi(r: Any, params: RectifierParams | None = None) -> Any:
    """
    Saturating contrast rectifier ``(1 - e^(-R/rho)) / (1 + e^(-R/rho) / gamma)``.

    Strictly increasing on ``R >= 0`` with range ``[0, 1)``; works on scalars
    and arrays.
    """
    params = params or RectifierParams()
    decay = np.exp(-np.asarray(r, dtype=np.float64) / params.rho)
    result = (1.0 - decay) / (1.0 + decay / params.gamma)
    return float(result) if result.ndim == 0 else result


def _defaults(
    filters: FilterConfig | None,
    dorsal: DorsalConfig | None,
    px_per_deg: float,
    bank: KernelBank | None,
) -> tuple[KernelBank, RectifierParams]:
    config = default_config()
    dorsal = dorsal or config.dorsal
    bank = bank or build_kernel_bank(filters or config.filters, px_per_deg, dorsal.gain)
    return bank, RectifierParams.from_config(dorsal)


def dorsal_simple(
    canvas: Canvas,
    filters: FilterConfig | None = None,
    dorsal: DorsalConfig | None = None,
    bank: KernelBank | None = None,
    threads: int = 1,
) -> ResponseVolume:
    """
    Dorsal simple-cell maps ``phi(max(0, canvas * K))`` of shape ``(N, S, C, H, W)``.

    Returns
    -------
    ResponseVolume
        Stage ``dorsal_simple``, every value in ``[0, 1)``
    """
    bank, params = _defaults(filters, dorsal, canvas.px_per_deg, bank)
    keys = [(o, f, c) for o in ORIENTATIONS for f in FEATURES for c in range(N_SCALES)]
    maps = parallel_map(
        lambda key: phi(half_wave(convolve(canvas.luminance, bank.dorsal[key])), params),
        keys,
        threads,
    )
    shape = (len(ORIENTATIONS), len(FEATURES), N_SCALES, *canvas.luminance.shape)
    return ResponseVolume(np.stack(maps).reshape(shape), Stage.DORSAL_SIMPLE)


def dorsal_feed(volume: ResponseVolume) -> ResponseVolume:
    """
    Strongest dorsal simple selectivity per orientation, scale and location.

    Returns
    -------
    ResponseVolume
        Stage ``dorsal_feed`` with a single feature slot ``(N, 1, C, H, W)``
    """
    if volume.stage is not Stage.DORSAL_SIMPLE:
        raise ModelError(
            f"Dorsal feed needs dorsal simple responses, got {volume.stage}", "stage", volume.stage
        )
    return ResponseVolume(volume.maps.max(axis=1, keepdims=True), Stage.DORSAL_FEED)


def mt_responses(
    feed: ResponseVolume,
    filters: FilterConfig | None = None,
    dorsal: DorsalConfig | None = None,
    px_per_deg: float = 32.0,
    bank: KernelBank | None = None,
    threads: int = 1,
) -> tuple[ResponseVolume, ResponseVolume]:
    """
    MT on-center and off-center maps, each ``(N, 1, C, H, W)`` in ``[0, 1)``.

    The feed of orientation ``phi`` at scale ``c`` is correlated with the MT
    kernel of the same orientation and scale, half-wave rectified and passed
    through ``phi``.
    """
    if feed.stage is not Stage.DORSAL_FEED:
        raise ModelError(f"MT cells need the dorsal feed, got {feed.stage}", "stage", feed.stage)
    bank, params = _defaults(filters, dorsal, px_per_deg, bank)
    keys = [(o, c) for o in ORIENTATIONS for c in range(feed.maps.shape[2])]

    def respond(table: dict, key: tuple) -> np.ndarray:
        o, c = key
        return phi(half_wave(convolve(feed.maps[o.index, 0, c], table[key])), params)

    on = parallel_map(lambda key: respond(bank.mt_on, key), keys, threads)
    off = parallel_map(lambda key: respond(bank.mt_off, key), keys, threads)
    shape = feed.maps.shape
    return (
        ResponseVolume(np.stack(on).reshape(shape), Stage.MT_ON),
        ResponseVolume(np.stack(off).reshape(shape), Stage.MT_OFF),
    )
