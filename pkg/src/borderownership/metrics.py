#!/usr/bin/env python3
"""
Quantitative readouts of border-ownership populations.

Key Features:
- Normalized difference of preferred and non-preferred responses
- Improvement percentage between two normalized differences
- Vectorial modulation index (per location and as a field)
- Maximum-response direction maps and their agreement with ground truth
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from typing import NamedTuple

import numpy as np

from .bos_types import FEATURES, ORIENTATIONS, BOSPopulation, Feature, ModelError, Side


def normalized_difference(r_pref: float, r_nonpref: float) -> float | None:
    """
    ``(R_pref - R_nonpref) / max(R_pref, R_nonpref)``, in ``[-1, 1]``.

    Returns None when both responses are zero.
    """
    peak = max(r_pref, r_nonpref)
    if peak <= 0.0:
        return None
    return (r_pref - r_nonpref) / peak


def improvement_pct(d_pre: float | None, d_post: float | None) -> float | None:
    """
    Relative change ``100 * (D_post - D_pre) / D_pre``.

    Returns None (not comparable) when ``D_pre <= 0`` or either value is missing.
    """
    if d_pre is None or d_post is None or d_pre <= 0.0:
        return None
    return 100.0 * (d_post - d_pre) / d_pre


def _require_collapsed(pop: BOSPopulation) -> None:
    if not pop.scale_collapsed:
        raise ModelError("Readouts need a scale-selected population", "scale_collapsed", False)


def vmi_field(pop: BOSPopulation) -> np.ndarray:
    """
    Vectorial modulation index at every location, shape ``(2, H, W)`` as ``(vx, vy)``.

    ``v = sum_{theta, s} (B_plus - B_minus) * u(plus)`` where ``plus`` is the
    second side of each orientation (right, down).
    """
    _require_collapsed(pop)
    field = np.zeros((2, *pop.spatial_shape))
    for o in ORIENTATIONS:
        diff = (pop.responses[o.index, :, 1] - pop.responses[o.index, :, 0]).sum(axis=0)
        vx, vy = o.sides[1].vector
        field[0] += vx * diff
        field[1] += vy * diff
    return field


def vmi(pop: BOSPopulation, row: int, col: int) -> tuple[float, float]:
    """Vectorial modulation index ``(vx, vy)`` at one location (y grows downward)."""
    _require_collapsed(pop)
    vx = vy = 0.0
    for o in ORIENTATIONS:
        plus, minus = pop.responses[o.index, :, 1, row, col], pop.responses[o.index, :, 0, row, col]
        diff = float((plus - minus).sum())
        ux, uy = o.sides[1].vector
        vx += diff * ux
        vy += diff * uy
    return vx, vy


class DirectionMap(NamedTuple):

    """Per-location side of the strongest label; ``direction`` is -1 where inactive."""

    direction: np.ndarray
    strength: np.ndarray
    sides: tuple[Side, ...]

    def side_at(self, row: int, col: int) -> Side | None:
        """Side of figure at a location, None when inactive."""
        index = int(self.direction[row, col])
        return None if index < 0 else self.sides[index]


DIRECTION_SIDES = (Side.LEFT, Side.RIGHT, Side.UP, Side.DOWN)


def max_direction_map(
    pop: BOSPopulation, features: Sequence[Feature] | None = None
) -> DirectionMap:
    """
    Side of figure of the maximally responding label at each location.

    Parameters
    ----------
    pop : BOSPopulation
        Scale-selected population
    features : Sequence[Feature] | None, optional
        Restrict the pool to these local features, by default all

    Returns
    -------
    DirectionMap
        Direction indices into ``DIRECTION_SIDES`` and the maximum response
    """
    _require_collapsed(pop)
    pool = list(features) if features else list(FEATURES)
    h, w = pop.spatial_shape
    stacked, sides = [], []
    for o in ORIENTATIONS:
        for f in pool:
            for b, side in enumerate(o.sides):
                stacked.append(pop.responses[o.index, f.index, b])
                sides.append(DIRECTION_SIDES.index(side))
    responses = np.stack(stacked) if stacked else np.zeros((1, h, w))
    best = responses.argmax(axis=0)
    strength = responses.max(axis=0)
    direction = np.where(strength > 0.0, np.asarray(sides)[best], -1)
    return DirectionMap(direction, strength, DIRECTION_SIDES)


class Agreement(NamedTuple):

    """Fraction of active samples whose direction matched."""

    fraction: float | None
    matched: int
    active: int
    total: int


def direction_agreement(
    direction_map: DirectionMap, samples: Iterable[tuple[int, int, Side]]
) -> Agreement:
    """
    Compare a direction map with expected sides at sample locations.

    Inactive samples are ignored; ``fraction`` is None when none is active.
    """
    matched = active = total = 0
    for row, col, expected in samples:
        total += 1
        side = direction_map.side_at(row, col)
        if side is None:
            continue
        active += 1
        matched += side is expected
    return Agreement(matched / active if active else None, matched, active, total)
