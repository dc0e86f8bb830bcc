#!/usr/bin/env python3
"""
Kernel construction and the shared convolution engine.

Every kernel is the product of an *across* profile (varying along the border
normal ``x'``) and an *along* profile (varying along the border ``y'``). For the
two modelled orientations the product is sampled as two 1-D factors, which lets
``convolve`` run two separable passes; other orientations fall back to a full
2-D grid.

Key Features:
- Gabor (border) and odd DoG (edge) ventral simple kernels
- Elongated dorsal simple kernels scaled to a fixed step response
- MT on-center and off-center bar kernels (balanced by construction)
- Complex-cell pooling Gaussians
- Correlation with replicate padding, optional thread-parallel mapping
- Plain-text kernel dump/load for inspection and golden tests
"""

from __future__ import annotations

import functools
import logging
import math
import pathlib
from collections.abc import Callable, Iterable, Iterator, Sequence
from concurrent.futures import ThreadPoolExecutor
from typing import Any, NamedTuple, TypeVar

import numpy as np
from scipy import ndimage

from .bos_types import (
    FEATURES,
    N_SCALES,
    ORIENTATIONS,
    CellClass,
    Feature,
    KernelError,
    Orientation,
    Polarity,
)
from .config_schema import FilterConfig
from .stimulus import odd_px

logger = logging.getLogger(__name__)

BALANCE_TOLERANCE = 1e-6

T = TypeVar("T")
R = TypeVar("R")
Profile = Callable[[np.ndarray], np.ndarray]


class Kernel(NamedTuple):

    """
    Correlation kernel with odd dimensions.

    ``factors`` holds ``(column_profile, row_profile)`` when
    ``weights == np.outer(column_profile, row_profile)``.
    """

    weights: np.ndarray
    scale_index: int
    orientation: float
    polarity: Polarity | None
    cell_class: CellClass
    factors: tuple[np.ndarray, np.ndarray] | None = None

    @property
    def shape(self) -> tuple[int, int]:
        """Kernel height and width."""
        return tuple(self.weights.shape)  # type: ignore[return-value]

    @property
    def total(self) -> float:
        """Sum of all weights."""
        return float(self.weights.sum())


# =============================================================================
# Sampling Helpers
# =============================================================================


def _gauss(sigma: float, mu: float = 0.0) -> Profile:
    return lambda t: np.exp(-((t - mu) ** 2) / (2.0 * sigma * sigma))


def _snap(value: float) -> float:
    return float(np.round(value, 12))


def _odd_size(rf_px: int) -> int:
    rf_px = int(rf_px)
    if rf_px < 3:
        raise KernelError(f"Receptive field must be at least 3 px, got {rf_px}", "rf_px", rf_px)
    if rf_px % 2 == 0:
        logger.warning("Even receptive field %d px rounded up to %d px", rf_px, rf_px + 1)
        rf_px += 1
    return rf_px


def _assemble(
    size: int,
    theta: float,
    along: Profile,
    terms: Sequence[tuple[float, Profile]],
    unit_terms: bool = False,
    odd: bool = False,
) -> tuple[np.ndarray, tuple[np.ndarray, np.ndarray] | None]:
    """
    Sample ``along(y') * sum(coef * across(x'))`` on a ``size x size`` grid.

    With ``unit_terms`` every term (and the along profile) is normalized to
    unit sum before combining. ``odd`` enforces exact point antisymmetry.
    """
    half = size // 2
    c, s = _snap(math.cos(theta)), _snap(math.sin(theta))

    if s == 0.0 or c == 0.0:
        t = np.arange(-half, half + 1, dtype=np.float64)
        # x' = c*x + s*y and y' = c*y - s*x reduce to a single axis each
        across_t, along_t = (c * t, c * t) if s == 0.0 else (s * t, -s * t)
        b = along(along_t)
        a = np.zeros(size)
        for coef, across in terms:
            term = across(across_t)
            a += coef * (term / term.sum() if unit_terms else term)
        if unit_terms:
            b = b / b.sum()
        if odd:
            a = (a - a[::-1]) / 2.0
        col, row = (b, a) if s == 0.0 else (a, b)
        return np.outer(col, row), (col, row)

    yy, xx = np.mgrid[-half : half + 1, -half : half + 1].astype(np.float64)
    xr, yr = xx * c + yy * s, -xx * s + yy * c
    b2 = along(yr)
    weights = np.zeros((size, size))
    for coef, across in terms:
        term = across(xr) * b2
        weights += coef * (term / term.sum() if unit_terms else term)
    if odd:
        weights = (weights - weights[::-1, ::-1]) / 2.0
    return weights, None


def _scaled(
    weights: np.ndarray, factors: tuple[np.ndarray, np.ndarray] | None, k: float
) -> tuple[np.ndarray, tuple[np.ndarray, np.ndarray] | None]:
    if factors is None:
        return weights * k, None
    return weights * k, (factors[0], factors[1] * k)


def _positive_normalized(
    weights: np.ndarray, factors: tuple[np.ndarray, np.ndarray] | None
) -> tuple[np.ndarray, tuple[np.ndarray, np.ndarray] | None]:
    return _scaled(weights, factors, 1.0 / weights[weights > 0].sum())


def _balanced(kernel: Kernel) -> Kernel:
    if abs(kernel.total) >= BALANCE_TOLERANCE:
        raise KernelError(
            f"{kernel.cell_class} kernel is not balanced (sum {kernel.total:.3g})",
            "weights",
            kernel.total,
        )
    return kernel


def step_peak(weights: np.ndarray, theta: float) -> float:
    """Largest absolute response of a kernel to a unit luminance step along its normal."""
    axis = 0 if abs(math.cos(theta)) >= abs(math.sin(theta)) else 1
    marginal = weights.sum(axis=axis)
    return float(np.abs(np.cumsum(marginal)).max())


# =============================================================================
# Ventral Kernels
# =============================================================================


def gabor_kernel(
    rf_px: int,
    theta: float,
    psi: float = math.pi / 2,
    aspect: float = 0.5,
    wavelength_ratio: float = 0.8,
    sigma_ratio: float = 0.25,
    scale_index: int = 0,
) -> Kernel:
    """
    Odd-phase Gabor simple-cell kernel.

    ``exp(-(x'^2 + aspect^2 y'^2) / 2 sigma^2) * cos(2 pi x' / lambda + psi)``
    with ``sigma = sigma_ratio * rf`` and ``lambda = wavelength_ratio * rf``.
    Positive weights sum to 1. Near one cycle per field keeps the side lobes
    small, so the opposite contrast step leaks only a weak response.

    Parameters
    ----------
    rf_px : int
        Receptive field (kernel side) in pixels; even sizes are rounded up
    theta : float
        Border normal angle in radians
    psi : float, optional
        Phase, ``+pi/2`` (light-dark) or ``-pi/2`` (dark-light), by default ``pi/2``
    aspect : float, optional
        Spatial aspect ratio r, by default 0.5
    wavelength_ratio : float, optional
        Wavelength as a fraction of the receptive field, by default 0.8
    sigma_ratio : float, optional
        Envelope sigma as a fraction of the receptive field, by default 0.25
    scale_index : int, optional
        Scale tag, by default 0

    Returns
    -------
    Kernel
        Balanced ventral border kernel

    Raises
    ------
    KernelError
        If the field is smaller than 3 px or ``psi`` is not ``+-pi/2``
    """
    size = _odd_size(rf_px)
    if not np.isclose(abs(psi), math.pi / 2):
        raise KernelError("Gabor phase must be +pi/2 or -pi/2", "psi", psi)
    sigma = sigma_ratio * size
    wavelength = wavelength_ratio * size

    def across(x: np.ndarray) -> np.ndarray:
        return np.exp(-(x**2) / (2 * sigma**2)) * np.cos(2 * math.pi * x / wavelength + psi)

    def along(y: np.ndarray) -> np.ndarray:
        return np.exp(-(aspect**2) * y**2 / (2 * sigma**2))

    assembled = _assemble(size, theta, along, [(1.0, across)], odd=True)
    weights, factors = _positive_normalized(*assembled)
    polarity = Polarity.POSITIVE if psi > 0 else Polarity.NEGATIVE
    return _balanced(
        Kernel(weights, scale_index, theta, polarity, CellClass.VENTRAL_BORDER, factors)
    )


def dog_edge_kernel(
    rf_px: int,
    theta: float,
    polarity: Polarity,
    sigma_ratio: float = 0.25,
    offset_ratio: float = 1.0,
    scale_index: int = 0,
) -> Kernel:
    """
    Odd-symmetric DoG edge kernel: two opposite Gaussian lobes offset along the normal.

    The positive lobe sits on the negative-normal side for positive polarity.
    """
    size = _odd_size(rf_px)
    sigma = sigma_ratio * size
    offset = offset_ratio * sigma
    sign = polarity.sign
    lobe_neg, lobe_pos = _gauss(sigma, -offset), _gauss(sigma, offset)

    def across(x: np.ndarray) -> np.ndarray:
        return sign * (lobe_neg(x) - lobe_pos(x))

    weights, factors = _positive_normalized(
        *_assemble(size, theta, _gauss(sigma), [(1.0, across)], odd=True)
    )
    return _balanced(Kernel(weights, scale_index, theta, polarity, CellClass.VENTRAL_EDGE, factors))


def pooling_kernel(
    rf_px: int, sigma_ratio: float = 0.25, truncate: float = 3.0, scale_index: int = 0
) -> Kernel:
    """Unit-sum isotropic Gaussian for complex-cell pooling, truncated at ``truncate`` sigma."""
    sigma = sigma_ratio * rf_px
    size = 2 * math.ceil(truncate * sigma) + 1
    weights, factors = _assemble(size, 0.0, _gauss(sigma), [(1.0, _gauss(sigma))], unit_terms=True)
    return Kernel(weights, scale_index, 0.0, None, CellClass.COMPLEX_POOL, factors)


# =============================================================================
# Dorsal and MT Kernels
# =============================================================================


def dorsal_simple_kernel(
    scale_index: int,
    theta: float,
    cell_class: CellClass,
    polarity: Polarity = Polarity.POSITIVE,
    rf_px: int = 29,
    wr: float = 2.5,
    ar_factor: float = 10.0,
    gain: float = 1.0,
) -> Kernel:
    """
    Elongated dorsal simple kernel (``sigma_y = RF``).

    The edge class is an odd DoG with lobe sigma ``RF / ar_factor``; the border
    class is an aligned center-surround DoG with center sigma ``RF / AR``
    (``AR = wr * ar_factor``) and surround ``wr`` times wider. Weights are scaled
    so a unit luminance step gives a peak response of ``gain``.

    Raises
    ------
    KernelError
        If ``cell_class`` is not a dorsal class or the field is too small
    """
    if not 0 <= scale_index < N_SCALES:
        raise KernelError(f"Scale index out of range: {scale_index}", "scale_index", scale_index)
    size = _odd_size(rf_px)
    along = _gauss(float(size))
    sign = polarity.sign
    if cell_class is CellClass.DORSAL_EDGE:
        sigma = size / ar_factor
        terms = [(sign, _gauss(sigma, -sigma)), (-sign, _gauss(sigma, sigma))]
        weights, factors = _assemble(size, theta, along, terms, odd=True)
    elif cell_class is CellClass.DORSAL_BORDER:
        sigma_c = size / (wr * ar_factor)
        terms = [(sign, _gauss(sigma_c)), (-sign, _gauss(wr * sigma_c))]
        weights, factors = _assemble(size, theta, along, terms, unit_terms=True)
    else:
        raise KernelError(f"Not a dorsal simple class: {cell_class}", "cell_class", cell_class)
    weights, factors = _scaled(weights, factors, gain / step_peak(weights, theta))
    return _balanced(Kernel(weights, scale_index, theta, polarity, cell_class, factors))


def mt_on_kernel(
    scale_index: int, phi: float, rf_px: int = 81, ar: float = 33.0, wr: float = 3.3
) -> Kernel:
    """
    MT on-center bar kernel: a narrow excitatory strip minus a wider inhibitory one.

    ``sigma_y = RF``, center sigma ``RF / ar``, surround sigma ``wr`` times the center.
    """
    size = _odd_size(rf_px)
    sigma_c = size / ar
    terms = [(1.0, _gauss(sigma_c)), (-1.0, _gauss(wr * sigma_c))]
    weights, factors = _assemble(size, phi, _gauss(float(size)), terms, unit_terms=True)
    return _balanced(Kernel(weights, scale_index, phi, None, CellClass.MT_ON, factors))


def mt_off_kernel(
    scale_index: int,
    phi: float,
    rf_px: int = 81,
    ar: float = 33.0,
    wr: float = 3.3,
    flank_ratio: float = 0.4,
) -> Kernel:
    """
    MT off-center kernel: two excitatory flank strips at ``+-flank_ratio * RF``
    and a central inhibitory strip of twice their weight.
    """
    size = _odd_size(rf_px)
    sigma_c = size / ar
    flank = flank_ratio * size
    terms = [
        (1.0, _gauss(sigma_c, -flank)),
        (1.0, _gauss(sigma_c, flank)),
        (-2.0, _gauss(wr * sigma_c)),
    ]
    weights, factors = _assemble(size, phi, _gauss(float(size)), terms, unit_terms=True)
    return _balanced(Kernel(weights, scale_index, phi, None, CellClass.MT_OFF, factors))


# =============================================================================
# Convolution Engine
# =============================================================================


def convolve(grid: np.ndarray, kernel: Kernel | np.ndarray) -> np.ndarray:
    """
    Same-size correlation (no kernel flip) with replicate padding.

    Parameters
    ----------
    grid : np.ndarray
        2-D input map
    kernel : Kernel | np.ndarray
        Kernel or raw odd-sized weight grid

    Returns
    -------
    np.ndarray
        Response map of the same shape as ``grid``

    Raises
    ------
    KernelError
        If the kernel has even dimensions or does not fit inside the map
    """
    data = np.asarray(grid, dtype=np.float64)
    weights = kernel.weights if isinstance(kernel, Kernel) else np.asarray(kernel, dtype=np.float64)
    kh, kw = weights.shape
    if kh % 2 == 0 or kw % 2 == 0:
        raise KernelError("Kernel dimensions must be odd", "kernel", weights.shape)
    if kh > data.shape[0] or kw > data.shape[1]:
        raise KernelError(
            f"Kernel {weights.shape} larger than map {data.shape}", "kernel", weights.shape
        )
    if isinstance(kernel, Kernel) and kernel.factors is not None:
        col, row = kernel.factors
        out = ndimage.correlate1d(data, col, axis=0, mode="nearest")
        return ndimage.correlate1d(out, row, axis=1, mode="nearest")
    return ndimage.correlate(data, weights, mode="nearest")


def shift_nearest(grid: np.ndarray, d_row: int, d_col: int) -> np.ndarray:
    """Map whose value at ``(r, c)`` is ``grid[r + d_row, c + d_col]``, edges replicated."""
    h, w = grid.shape
    rows = np.clip(np.arange(h) + d_row, 0, h - 1)
    cols = np.clip(np.arange(w) + d_col, 0, w - 1)
    return grid[np.ix_(rows, cols)]


def half_wave(x: Any) -> Any:
    """Half-wave rectification ``max(0, x)``."""
    return np.maximum(x, 0.0)


def parallel_map(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> list[R]:
    """Map ``fn`` over ``items`` keeping input order; threads > 1 uses a thread pool."""
    items = list(items)
    if threads <= 1 or len(items) < 2:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(fn, items))


# =============================================================================
# Kernel Bank
# =============================================================================


class KernelBank(NamedTuple):

    """All kernels of a configured model, keyed by selectivity and scale."""

    ventral: dict[tuple[Orientation, Feature, int], Kernel]
    pooling: tuple[Kernel, ...]
    dorsal: dict[tuple[Orientation, Feature, int], Kernel]
    mt_on: dict[tuple[Orientation, int], Kernel]
    mt_off: dict[tuple[Orientation, int], Kernel]
    ventral_rf_px: tuple[int, ...]
    mt_rf_px: tuple[int, ...]
    edge_halfwidth_px: tuple[int, ...] = (2, 2, 3, 4)

    def named(self) -> Iterator[tuple[str, Kernel]]:
        """Iterate ``(name, kernel)`` pairs in a stable order."""
        for (o, f, c), kernel in self.ventral.items():
            yield f"{kernel.cell_class}_{o}_{f}_s{c}", kernel
        for c, kernel in enumerate(self.pooling):
            yield f"{kernel.cell_class}_s{c}", kernel
        for (o, f, c), kernel in self.dorsal.items():
            yield f"{kernel.cell_class}_{o}_{f}_s{c}", kernel
        for table in (self.mt_on, self.mt_off):
            for (o, c), kernel in table.items():
                yield f"{kernel.cell_class}_{o}_s{c}", kernel


def ventral_kernel(
    feature: Feature, orientation: Orientation, rf_px: int, filters: FilterConfig, scale_index: int
) -> Kernel:
    """Simple-cell kernel of one ventral selectivity."""
    if feature.is_border:
        return gabor_kernel(
            rf_px,
            orientation.theta,
            psi=feature.polarity.sign * math.pi / 2,
            aspect=filters.gabor_aspect,
            wavelength_ratio=filters.gabor_wavelength_ratio,
            sigma_ratio=filters.gabor_sigma_ratio,
            scale_index=scale_index,
        )
    return dog_edge_kernel(
        rf_px,
        orientation.theta,
        feature.polarity,
        sigma_ratio=filters.dog_sigma_ratio,
        offset_ratio=filters.dog_offset_ratio,
        scale_index=scale_index,
    )


@functools.lru_cache(maxsize=8)
def build_kernel_bank(filters: FilterConfig, px_per_deg: float, dorsal_gain: float) -> KernelBank:
    """
    Construct every kernel of the model once per configuration.

    Returns
    -------
    KernelBank
        Ventral, pooling, dorsal and MT kernels for all orientations and scales
    """
    ventral_rf = tuple(odd_px(d, px_per_deg) for d in filters.ventral_rf_deg)
    dorsal_rf = tuple(odd_px(d, px_per_deg) for d in filters.dorsal_rf_deg)
    mt_rf = tuple(odd_px(d, px_per_deg) for d in filters.mt_rf_deg)

    ventral, dorsal, mt_on, mt_off = {}, {}, {}, {}
    for o in ORIENTATIONS:
        for f in FEATURES:
            for c in range(N_SCALES):
                ventral[(o, f, c)] = ventral_kernel(f, o, ventral_rf[c], filters, c)
                dorsal[(o, f, c)] = dorsal_simple_kernel(
                    c,
                    o.theta,
                    CellClass.DORSAL_BORDER if f.is_border else CellClass.DORSAL_EDGE,
                    f.polarity,
                    rf_px=dorsal_rf[c],
                    wr=filters.dorsal_wr,
                    ar_factor=filters.dorsal_ar_factors[c],
                    gain=dorsal_gain,
                )
        for c in range(N_SCALES):
            mt_on[(o, c)] = mt_on_kernel(c, o.theta, mt_rf[c], filters.mt_ar[c], filters.mt_wr[c])
            mt_off[(o, c)] = mt_off_kernel(
                c, o.theta, mt_rf[c], filters.mt_ar[c], filters.mt_wr[c], filters.mt_off_flank_ratio
            )
    pooling = tuple(
        pooling_kernel(ventral_rf[c], filters.pool_sigma_ratio, filters.pool_truncate, c)
        for c in range(N_SCALES)
    )
    halfwidths = tuple(
        max(1, math.floor(rf * filters.edge_bar_halfwidth_ratio + 0.5)) for rf in ventral_rf
    )
    logger.debug("Kernel bank built: ventral %s px, MT %s px", ventral_rf, mt_rf)
    return KernelBank(ventral, pooling, dorsal, mt_on, mt_off, ventral_rf, mt_rf, halfwidths)


# =============================================================================
# Kernel Files
# =============================================================================


def dump_kernel(kernel: Kernel, file_path: pathlib.Path | str) -> pathlib.Path:
    """Write a kernel as a plain-text grid with a ``# key: value`` header."""
    path = pathlib.Path(file_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = "\n".join(
        [
            f"cell_class: {kernel.cell_class.value}",
            f"scale_index: {kernel.scale_index}",
            f"orientation: {kernel.orientation!r}",
            f"polarity: {kernel.polarity.value if kernel.polarity else 'none'}",
        ]
    )
    np.savetxt(path, kernel.weights, fmt="%.17g", header=header, comments="# ")
    return path


def load_kernel(file_path: pathlib.Path | str) -> Kernel:
    """
    Read a kernel written by ``dump_kernel``.

    Raises
    ------
    KernelError
        If the header is incomplete or the grid is not odd-sized
    """
    path = pathlib.Path(file_path)
    meta: dict[str, str] = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.startswith("# ") and ":" in line:
            key, value = line[2:].split(":", 1)
            meta[key.strip()] = value.strip()
    try:
        polarity = None if meta["polarity"] == "none" else Polarity(meta["polarity"])
        kernel = Kernel(
            np.loadtxt(path, ndmin=2),
            int(meta["scale_index"]),
            float(meta["orientation"]),
            polarity,
            CellClass(meta["cell_class"]),
        )
    except (KeyError, ValueError) as e:
        raise KernelError(f"Malformed kernel file {path}: {e}", "file_path", str(path)) from e
    if kernel.shape[0] % 2 == 0 or kernel.shape[1] % 2 == 0:
        raise KernelError("Kernel dimensions must be odd", "file_path", str(path))
    return kernel
