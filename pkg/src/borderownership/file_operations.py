#!/usr/bin/env python3
"""
File operations for simulator artifacts.

Key Features:
- Response-map graymaps (8-bit P5 via Pillow) with a YAML index manifest
- Per-iteration relaxation confidence dumps
- Kernel bank dumps as plain-text grids
- CSV metric tables via pandas with a fixed float format
- Deterministic JSON reports (sorted keys, no timestamps)
- Pipeline version hash over the package sources
"""

from __future__ import annotations

import enum
import hashlib
import json
import pathlib
from collections.abc import Iterable, Sequence
from typing import Any

import numpy as np
import pandas as pd
import yaml
from PIL import Image

from .bos_types import (
    FEATURES,
    ORIENTATIONS,
    BOSPopulation,
    Neuron,
    ResponseVolume,
)
from .filters import KernelBank, dump_kernel

# =============================================================================
# Constants
# =============================================================================

PACKAGE_DIR = pathlib.Path(__file__).resolve().parent
REPORT_SCHEMA_VERSION = "1.0"
CSV_FLOAT_FORMAT = "%.10g"


def ensure_directory(path: pathlib.Path | str) -> pathlib.Path:
    """Create a directory (and parents) if missing."""
    directory = pathlib.Path(path)
    directory.mkdir(parents=True, exist_ok=True)
    return directory


def pipeline_hash() -> str:
    """SHA-256 over the package's Python sources in name order."""
    digest = hashlib.sha256()
    for source in sorted(PACKAGE_DIR.glob("*.py")):
        digest.update(source.name.encode())
        digest.update(source.read_bytes())
    return digest.hexdigest()


# =============================================================================
# Graymaps
# =============================================================================


def write_graymap(
    grid: np.ndarray, file_path: pathlib.Path | str, vmax: float | None = None
) -> float:
    """
    Write a non-negative map as an 8-bit graymap scaled by ``vmax``.

    Returns
    -------
    float
        The scale used (map maximum when ``vmax`` is None)
    """
    path = pathlib.Path(file_path)
    ensure_directory(path.parent)
    data = np.asarray(grid, dtype=np.float64)
    scale = float(vmax if vmax is not None else (data.max() if data.size else 0.0))
    normalized = np.clip(data / scale, 0.0, 1.0) if scale > 0 else np.zeros_like(data)
    Image.fromarray(np.rint(normalized * 255.0).astype(np.uint8)).save(path, format="PPM")
    return scale


def read_graymap(file_path: pathlib.Path | str, scale: float = 1.0) -> np.ndarray:
    """Read an 8-bit graymap back into ``[0, scale]``."""
    with Image.open(pathlib.Path(file_path)) as image:
        return np.asarray(image.convert("L"), dtype=np.float64) / 255.0 * scale


def dump_volume(volume: ResponseVolume, directory: pathlib.Path | str) -> pathlib.Path:
    """
    Dump every map of a response volume as a graymap plus a YAML index.

    Returns
    -------
    pathlib.Path
        Manifest path
    """
    out = ensure_directory(directory)
    entries = []
    n_o, n_f, n_c = volume.maps.shape[:3]
    for o in range(n_o):
        for f in range(n_f):
            feature = FEATURES[f].value if n_f == len(FEATURES) else "max"
            for c in range(n_c):
                name = f"{volume.stage}_{ORIENTATIONS[o]}_{feature}_s{c}.pgm"
                scale = write_graymap(volume.maps[o, f, c], out / name)
                entries.append(
                    {
                        "file": name,
                        "orientation": ORIENTATIONS[o].value,
                        "feature": feature,
                        "scale": c,
                        "vmax": scale,
                    }
                )
    return _write_manifest(out, volume.stage.value, entries)


def dump_population(pop: BOSPopulation, directory: pathlib.Path | str) -> pathlib.Path:
    """Dump a population (scales max-combined) as one graymap per label plus an index."""
    out = ensure_directory(directory)
    entries = []
    for o in ORIENTATIONS:
        for f in FEATURES:
            for b, side in enumerate(o.sides):
                grid = pop.responses[o.index, f.index, b]
                if not pop.scale_collapsed:
                    grid = grid.max(axis=0)
                name = f"{pop.stage}_{o}_{f}_{side}.pgm"
                scale = write_graymap(grid, out / name)
                entries.append(
                    {
                        "file": name,
                        "orientation": o.value,
                        "feature": f.value,
                        "side": side.value,
                        "vmax": scale,
                    }
                )
    return _write_manifest(out, pop.stage.value, entries)


def dump_confidences(
    history: list[np.ndarray], labels: Sequence[Neuron], directory: pathlib.Path | str
) -> pathlib.Path:
    """
    Dump relaxation confidences, one graymap per iteration and label, plus an index.

    Iteration 0 holds the confidences before the first update. Every map is
    scaled to ``[0, 1]`` so iterations compare directly.
    """
    out = ensure_directory(directory)
    entries = []
    for iteration, confidences in enumerate(history):
        for label, grid in zip(labels, confidences, strict=True):
            name = f"q_{iteration:02d}_{label.orientation}_{label.feature}_{label.side}.pgm"
            write_graymap(grid, out / name, vmax=1.0)
            entries.append({"file": name, "iteration": iteration, "label": str(label)})
    return _write_manifest(out, "relaxation", entries)


def dump_kernel_bank(bank: KernelBank, directory: pathlib.Path | str) -> pathlib.Path:
    """Dump every kernel of a bank as a plain-text grid plus a YAML index."""
    out = ensure_directory(directory)
    entries = []
    for name, kernel in bank.named():
        dump_kernel(kernel, out / f"{name}.txt")
        entries.append(
            {
                "file": f"{name}.txt",
                "cell_class": kernel.cell_class.value,
                "scale_index": kernel.scale_index,
                "size": kernel.shape[0],
                "sum": float(kernel.total),
            }
        )
    return _write_manifest(out, "kernels", entries)


def _write_manifest(
    directory: pathlib.Path, stage: str, entries: list[dict[str, Any]]
) -> pathlib.Path:
    path = directory / f"{stage}_manifest.yaml"
    with path.open("w", encoding="utf-8") as f:
        yaml.safe_dump(
            {"stage": stage, "maps": entries},
            f,
            default_flow_style=False,
            sort_keys=False,
            indent=2,
        )
    return path


# =============================================================================
# Reports
# =============================================================================


def to_jsonable(value: Any) -> Any:
    """Convert enums, tuples and numpy values into JSON-compatible structures."""
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, dict):
        return {str(to_jsonable(k)): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, list | tuple):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, pathlib.Path):
        return str(value)
    return value


def write_json(data: Any, file_path: pathlib.Path | str) -> pathlib.Path:
    """Write deterministic JSON (sorted keys, two-space indent)."""
    path = pathlib.Path(file_path)
    ensure_directory(path.parent)
    text = json.dumps(to_jsonable(data), indent=2, sort_keys=True)
    path.write_text(text + "\n", encoding="utf-8")
    return path


def write_csv(
    rows: Iterable[dict[str, Any]], file_path: pathlib.Path | str, columns: list[str]
) -> pathlib.Path:
    """Write metric rows as CSV with fixed column order and float format."""
    path = pathlib.Path(file_path)
    ensure_directory(path.parent)
    frame = pd.DataFrame([to_jsonable(r) for r in rows], columns=columns)
    frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    return path


def read_csv(file_path: pathlib.Path | str) -> pd.DataFrame:
    """Read a metric table."""
    return pd.read_csv(pathlib.Path(file_path))

