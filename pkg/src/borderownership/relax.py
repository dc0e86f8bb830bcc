#!/usr/bin/env python3
"""
Relaxation labeling over border-ownership labels.

Each location carrying border-ownership activity holds a confidence for each
of the 16 ``(orientation, feature, side)`` labels. Neighbors inside a square
window support labels that agree with theirs (same orientation, feature and
side, weighted by a Gaussian of the offset across the border) and penalize the
opposite side of the same feature (linear fall-off). Updates are synchronous:

    q <- q * max(0, 1 + s) / sum_labels(q * max(0, 1 + s))

with ``s`` the support averaged over participating neighbors. The change
over the run becomes the bounded potential that rescales the responses. Two
potential forms exist:

- ``side_share``: the change of each label's share of its own and its twin's
  confidence, so a label and its twin move by equal and opposite amounts
- ``delta``: the change of the raw confidence
"""

from __future__ import annotations

import logging
import math
from typing import NamedTuple

import numpy as np
from scipy import ndimage

from .bos_types import (
    BOSPopulation,
    Feature,
    ModelError,
    Neuron,
    Orientation,
    PotentialRangeError,
    Stage,
    all_neurons,
)
from .config_schema import RelaxConfig

logger = logging.getLogger(__name__)

POTENTIAL_LIMIT = 0.5

_CROSS_FAMILY = {
    Feature.BORDER_LIGHT_DARK: Feature.EDGE_LIGHT_BAR,
    Feature.BORDER_DARK_LIGHT: Feature.EDGE_DARK_BAR,
    Feature.EDGE_LIGHT_BAR: Feature.BORDER_LIGHT_DARK,
    Feature.EDGE_DARK_BAR: Feature.BORDER_DARK_LIGHT,
}


class LabelSpace(NamedTuple):

    """Label confidences ``(L, H, W)`` and the participation mask ``(H, W)``."""

    confidences: np.ndarray
    participating: np.ndarray
    labels: tuple[Neuron, ...]

    def label_index(self, label: Neuron | int) -> int:
        """Position of a label on the confidence axis."""
        return label if isinstance(label, int) else self.labels.index(label)

    def q(self, row: int, col: int, label: Neuron | int) -> float:
        """Confidence of one label at one location."""
        return float(self.confidences[self.label_index(label), row, col])


class CompatibilityFn(NamedTuple):

    """Pairwise label compatibility ``r(i, j, offset)`` in ``[-1, 1]``."""

    sigma_compat: float = 2.0
    penalty: float = 1.0
    radius_px: int = 13
    feature_cross_weight: float = 0.0
    compatible_weight: float = 1.0

    @classmethod
    def from_config(cls, relax: RelaxConfig) -> CompatibilityFn:
        """Compatibility from the ``relax`` config section."""
        return cls(
            sigma_compat=relax.sigma_compat,
            penalty=relax.penalty,
            radius_px=relax.radius_px,
            feature_cross_weight=relax.feature_cross_weight,
        )

    def compatible(self, d_perp: float) -> float:
        """Gaussian support for agreeing labels."""
        return self.compatible_weight * math.exp(-(d_perp**2) / (2.0 * self.sigma_compat**2))

    def incompatible(self, d_perp: float) -> float:
        """Linear penalty for the opposite side of the same feature."""
        return -self.penalty * max(0.0, 1.0 - abs(d_perp) / self.radius_px)

    def r(self, a: Neuron, b: Neuron, d_row: int, d_col: int) -> float:
        """Compatibility of label ``a`` with label ``b`` at offset ``(d_row, d_col)``."""
        if a.orientation is not b.orientation:
            return 0.0
        d_perp = d_col if a.orientation is Orientation.VERTICAL else d_row
        if a.side is b.side:
            if a.feature is b.feature:
                return self.compatible(d_perp)
            if b.feature is _CROSS_FAMILY[a.feature]:
                return self.feature_cross_weight * self.compatible(d_perp)
            return 0.0
        if a.feature is b.feature:
            return self.incompatible(d_perp)
        return 0.0

    def profiles(self) -> tuple[np.ndarray, np.ndarray]:
        """Window profiles across the border: compatible and incompatible."""
        d = np.arange(-self.radius_px, self.radius_px + 1, dtype=np.float64)
        compatible = self.compatible_weight * np.exp(-(d**2) / (2.0 * self.sigma_compat**2))
        incompatible = -self.penalty * np.maximum(0.0, 1.0 - np.abs(d) / self.radius_px)
        return compatible, incompatible


class RelaxationResult(NamedTuple):

    """Outcome of a relaxation run."""

    potentials: np.ndarray
    confidences: np.ndarray
    iterations: int
    converged: bool
    max_deltas: list[float]
    history: list[np.ndarray] | None = None


# =============================================================================
# Operations
# =============================================================================


def init_confidences(pop: BOSPopulation, participation_floor: float = 1e-6) -> LabelSpace:
    """
    Normalize responses into label confidences.

    A location participates when its summed response exceeds
    ``participation_floor`` times the largest response of the population;
    elsewhere confidences are 0 and the location neither sends nor receives.

    Raises
    ------
    ModelError
        If the population still has a scale axis
    """
    if not pop.scale_collapsed:
        raise ModelError("Relaxation needs a scale-selected population", "scale_collapsed", False)
    h, w = pop.spatial_shape
    responses = pop.responses.reshape(-1, h, w)
    total = responses.sum(axis=0)
    peak = float(responses.max()) if responses.size else 0.0
    participating = total > participation_floor * peak
    participating &= total > 0.0
    safe_total = np.where(participating, total, 1.0)
    confidences = np.where(participating, responses / safe_total, 0.0)
    return LabelSpace(confidences, participating, tuple(all_neurons()))


def support(
    space: LabelSpace, row: int, col: int, label: Neuron | int, compat: CompatibilityFn
) -> float:
    """
    Summed support of one label at one location from its window neighbors.

    Non-participating neighbors and the location itself contribute nothing.
    """
    a = space.labels[space.label_index(label)]
    h, w = space.participating.shape
    radius = compat.radius_px
    total = 0.0
    for r in range(max(0, row - radius), min(h, row + radius + 1)):
        for c in range(max(0, col - radius), min(w, col + radius + 1)):
            if (r == row and c == col) or not space.participating[r, c]:
                continue
            for j, b in enumerate(space.labels):
                weight = compat.r(a, b, r - row, c - col)
                if weight:
                    total += weight * space.confidences[j, r, c]
    return total


def _window(field: np.ndarray, across: np.ndarray, orientation: Orientation) -> np.ndarray:
    """Zero-padded window correlation: flat along the border, ``across`` profile across it."""
    along_axis = 0 if orientation is Orientation.VERTICAL else 1
    flat = np.ones_like(across)
    out = ndimage.correlate1d(field, flat, axis=along_axis, mode="constant", cval=0.0)
    return ndimage.correlate1d(out, across, axis=1 - along_axis, mode="constant", cval=0.0)


def support_field(space: LabelSpace, compat: CompatibilityFn) -> np.ndarray:
    """``support`` evaluated for every label and location, shape ``(L, H, W)``."""
    compatible, incompatible = compat.profiles()
    index = {label: i for i, label in enumerate(space.labels)}
    q = np.where(space.participating, space.confidences, 0.0)
    out = np.zeros_like(q)
    for i, a in enumerate(space.labels):
        same = q[i]
        cross = q[index[Neuron(a.orientation, _CROSS_FAMILY[a.feature], a.side)]]
        twin = q[index[a.twin()]]
        s = _window(same, compatible, a.orientation) - compatible[compat.radius_px] * same
        if compat.feature_cross_weight:
            s += compat.feature_cross_weight * (
                _window(cross, compatible, a.orientation) - compatible[compat.radius_px] * cross
            )
        s += _window(twin, incompatible, a.orientation) - incompatible[compat.radius_px] * twin
        out[i] = s
    return out


def neighbor_counts(space: LabelSpace, radius_px: int) -> np.ndarray:
    """Number of participating neighbors inside each window, self excluded."""
    mask = space.participating.astype(np.float64)
    box = np.ones(2 * radius_px + 1)
    counts = ndimage.correlate1d(mask, box, axis=0, mode="constant", cval=0.0)
    counts = ndimage.correlate1d(counts, box, axis=1, mode="constant", cval=0.0)
    return np.rint(counts - mask)


def twin_indices(labels: tuple[Neuron, ...]) -> np.ndarray:
    """Confidence-axis position of each label's twin."""
    index = {label: i for i, label in enumerate(labels)}
    return np.array([index[label.twin()] for label in labels], dtype=np.intp)


def side_share(confidences: np.ndarray, twins: np.ndarray) -> np.ndarray:
    """Share ``q_i / (q_i + q_twin)`` of each label; 0.5 where both are 0."""
    pair = confidences + confidences[twins]
    return np.divide(confidences, pair, out=np.full_like(confidences, 0.5), where=pair > 0.0)


def relaxation_potentials(
    initial: np.ndarray,
    final: np.ndarray,
    labels: tuple[Neuron, ...],
    gain: float = 10.0,
    mode: str = "side_share",
) -> np.ndarray:
    """
    Clamped potentials from the confidences before and after relaxation.

    Raises
    ------
    ModelError
        If ``mode`` is not a known potential form
    """
    if mode == "side_share":
        twins = twin_indices(labels)
        change = side_share(final, twins) - side_share(initial, twins)
    elif mode == "delta":
        change = final - initial
    else:
        raise ModelError(f"Unknown potential mode '{mode}'", "potential_mode", mode)
    return np.clip(gain * change, -POTENTIAL_LIMIT, POTENTIAL_LIMIT)


def rl_run(
    space: LabelSpace,
    compat: CompatibilityFn,
    max_iter: int = 10,
    epsilon: float = 1e-4,
    potential_gain: float = 10.0,
    potential_mode: str = "side_share",
    keep_history: bool = False,
) -> RelaxationResult:
    """
    Synchronous relaxation labeling.

    Parameters
    ----------
    space : LabelSpace
        Initial confidences
    compat : CompatibilityFn
        Pairwise compatibilities and window radius
    max_iter : int, optional
        Iteration bound, by default 10
    epsilon : float, optional
        Stop once the largest confidence change falls below this, by default 1e-4
    potential_gain : float, optional
        Scale applied to the change before clamping, by default 10.0
    potential_mode : str, optional
        ``side_share`` or ``delta``, by default ``side_share``
    keep_history : bool, optional
        Keep the confidences before the run and after every iteration, by default False

    Returns
    -------
    RelaxationResult
        Potentials ``(L, H, W)`` clamped to ``[-0.5, 0.5]`` (0 where not participating),
        final confidences and convergence record
    """
    mask = space.participating
    counts = neighbor_counts(space, compat.radius_px)
    inverse_counts = np.where(counts > 0, 1.0 / np.maximum(counts, 1.0), 0.0)
    q = space.confidences.copy()
    deltas: list[float] = []
    history = [q.copy()] if keep_history else None
    converged = False

    for _ in range(max_iter):
        s = support_field(LabelSpace(q, mask, space.labels), compat) * inverse_counts
        weighted = q * np.maximum(0.0, 1.0 + s)
        total = weighted.sum(axis=0)
        update = mask & (total > 0.0)
        q_next = np.where(update, weighted / np.where(update, total, 1.0), q)
        delta = float(np.abs(q_next - q).max()) if q.size else 0.0
        q = q_next
        deltas.append(delta)
        if history is not None:
            history.append(q.copy())
        if delta < epsilon:
            converged = True
            break

    potentials = relaxation_potentials(
        space.confidences, q, space.labels, potential_gain, potential_mode
    )
    potentials = np.where(mask, potentials, 0.0)
    logger.debug("Relaxation stopped after %d iterations (converged=%s)", len(deltas), converged)
    return RelaxationResult(potentials, q, len(deltas), converged, deltas, history)


def apply_update(pop: BOSPopulation, potentials: np.ndarray) -> BOSPopulation:
    """
    Rescale responses by ``1 + P``.

    Raises
    ------
    PotentialRangeError
        If any potential lies outside ``[-0.5, 0.5]``
    ModelError
        If the shapes do not match
    """
    p = np.asarray(potentials, dtype=np.float64)
    if p.size != pop.responses.size:
        raise ModelError("Potential shape does not match the population", "potentials", p.shape)
    if p.size and not (np.all(p >= -POTENTIAL_LIMIT) and np.all(p <= POTENTIAL_LIMIT)):
        raise PotentialRangeError(
            "Potentials must lie in [-0.5, 0.5]",
            "potentials",
            (float(np.nanmin(p)), float(np.nanmax(p))),
        )
    updated = (1.0 + p.reshape(pop.responses.shape)) * pop.responses
    return BOSPopulation(updated, Stage.BOS_FINAL, pop.scale_collapsed)
