#!/usr/bin/env python3
"""
End-to-end model pipeline for one canvas.

canvas -> ventral simple -> complex
       -> dorsal simple -> feed -> MT on/off
       -> initial border ownership (per scale) -> scale selection
       -> relaxation labeling -> final border ownership
"""

from __future__ import annotations

import collections
import logging
from typing import NamedTuple

import numpy as np

from .bos import SurroundSpec, bos_initial, scale_select
from .bos_types import BOSPopulation, Neuron, ResponseVolume
from .config_schema import ModelConfig, default_config
from .dorsal import dorsal_feed, dorsal_simple, mt_responses
from .filters import build_kernel_bank
from .relax import CompatibilityFn, RelaxationResult, apply_update, init_confidences, rl_run
from .stimulus import Canvas
from .ventral import complex_responses, simple_responses

logger = logging.getLogger(__name__)


def _centered_span(size: int, radius: int) -> slice:
    """Window of ``radius`` pixels either side of the center of ``size`` pixels."""
    center = size // 2
    start = center - radius - (1 - size % 2)
    return slice(max(start, 0), center + radius + 1)


class PipelineResult(NamedTuple):

    """Populations before and after relaxation, plus optional intermediate volumes."""

    canvas: Canvas
    initial: BOSPopulation
    final: BOSPopulation
    relaxation: RelaxationResult
    volumes: dict[str, ResponseVolume] | None = None
    multiscale: BOSPopulation | None = None

    def readout(
        self,
        neuron: Neuron,
        final: bool = True,
        location: tuple[int, int] | None = None,
        radius: int = 1,
    ) -> float:
        """
        Peak response of ``neuron`` in a window around the probe.

        Without ``location`` the window is mirror-symmetric about the canvas
        center, which lies on a pixel corner along even dimensions: there it
        spans ``2 * radius + 2`` pixels, elsewhere ``2 * radius + 1``. An
        explicit ``location`` gets a ``(2 * radius + 1)`` window centered on
        that pixel.
        """
        pop = self.final if final else self.initial
        grid = pop.response(neuron)
        if location is None:
            rows = _centered_span(grid.shape[0], radius)
            cols = _centered_span(grid.shape[1], radius)
        else:
            row, col = location
            rows = slice(max(row - radius, 0), row + radius + 1)
            cols = slice(max(col - radius, 0), col + radius + 1)
        window = grid[rows, cols]
        return float(window.max()) if window.size else 0.0

    @property
    def potential_range(self) -> tuple[float, float]:
        """Smallest and largest relaxation potential."""
        p = self.relaxation.potentials
        return (float(p.min()), float(p.max())) if p.size else (0.0, 0.0)


def run_pipeline(
    canvas: Canvas,
    config: ModelConfig | None = None,
    threads: int = 1,
    keep_volumes: bool = False,
) -> PipelineResult:
    """
    Run the full model on one canvas.

    Parameters
    ----------
    canvas : Canvas
        Input display
    config : ModelConfig | None, optional
        Model configuration, by default the schema defaults
    threads : int, optional
        Worker threads for independent maps; results do not depend on it, by default 1
    keep_volumes : bool, optional
        Keep every intermediate volume, the per-scale population and the
        per-iteration confidences, by default False

    Returns
    -------
    PipelineResult
        Scale-selected populations before and after relaxation
    """
    config = config or default_config()
    bank = build_kernel_bank(config.filters, canvas.px_per_deg, config.dorsal.gain)

    simple = simple_responses(canvas, bank=bank, threads=threads)
    complex_volume = complex_responses(simple, bank=bank, threads=threads)
    dorsal = dorsal_simple(canvas, dorsal=config.dorsal, bank=bank, threads=threads)
    feed = dorsal_feed(dorsal)
    mt_on, mt_off = mt_responses(feed, dorsal=config.dorsal, bank=bank, threads=threads)

    surround = SurroundSpec.from_config(config.surround, config.filters, canvas.px_per_deg)
    multiscale = bos_initial(complex_volume, mt_on, mt_off, surround, threads=threads)
    initial = scale_select(multiscale)

    relax = config.relax
    space = init_confidences(initial, relax.participation_floor)
    relaxation = rl_run(
        space,
        CompatibilityFn.from_config(relax),
        max_iter=relax.max_iter,
        epsilon=relax.epsilon,
        potential_gain=relax.potential_gain,
        potential_mode=relax.potential_mode,
        keep_history=keep_volumes,
    )
    final = apply_update(initial, relaxation.potentials)
    logger.debug(
        "Pipeline done: %d participating locations, %d iterations",
        int(np.count_nonzero(space.participating)),
        relaxation.iterations,
    )

    if not keep_volumes:
        return PipelineResult(canvas, initial, final, relaxation)
    volumes = {
        "simple": simple,
        "complex": complex_volume,
        "dorsal_simple": dorsal,
        "dorsal_feed": feed,
        "mt_on": mt_on,
        "mt_off": mt_off,
    }
    return PipelineResult(canvas, initial, final, relaxation, volumes, multiscale)


class Pipeline:

    """
    Pipeline runner with a small per-canvas result cache (keyed by content digest).

    Intermediate volumes and the relaxation history are kept when
    ``keep_volumes`` is set, by default when the configuration asks for map dumps.
    """

    def __init__(
        self,
        config: ModelConfig | None = None,
        threads: int = 1,
        cache_size: int = 4,
        keep_volumes: bool | None = None,
    ):
        """Initialize the runner."""
        self.config = config or default_config()
        self.threads = threads
        self.keep_volumes = (
            self.config.experiment.dump_maps if keep_volumes is None else keep_volumes
        )
        self.cache_size = cache_size
        self._cache: collections.OrderedDict[str, PipelineResult] = collections.OrderedDict()
        self.runs = 0

    def run(self, canvas: Canvas) -> PipelineResult:
        """Run (or reuse) the pipeline for a canvas."""
        key = canvas.digest()
        if key in self._cache:
            self._cache.move_to_end(key)
            return self._cache[key]
        result = run_pipeline(canvas, self.config, self.threads, keep_volumes=self.keep_volumes)
        self.runs += 1
        if self.cache_size > 0:
            self._cache[key] = result
            while len(self._cache) > self.cache_size:
                self._cache.popitem(last=False)
        return result
