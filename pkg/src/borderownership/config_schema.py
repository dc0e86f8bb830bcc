#!/usr/bin/env python3
"""
YAML schema definition for simulator configuration.

A configuration file is a YAML mapping of sections, each holding flat
``key: value`` entries::

    canvas:
      width: 400
      px_per_deg: 32.0
    relax:
      max_iter: 10

Every key has a default in ``SCHEMA``; a file only lists what it overrides.
Validation collects every problem with the YAML line it came from so
``validate-config`` can report them all at once.
"""

from __future__ import annotations

import pathlib
from collections.abc import Callable
from typing import Any, NamedTuple

import yaml

from .bos_types import (
    FEATURES,
    ModelError,
    Neuron,
    ValidationResult,
    create_validation_result,
)

EXPERIMENTS = (
    "zhou_battery",
    "position_sweep",
    "size_sweep",
    "solid_outline",
    "overlap_vmi",
    "kanizsa",
    "all",
)
WEIGHT_FUNCTIONS = ("linear_negative_slope", "gaussian")
SURROUND_GEOMETRIES = ("ray", "half_disc")
SURROUND_SAMPLING = ("point", "area")
POTENTIAL_MODES = ("side_share", "delta")
FAMILY_MODES = ("selected", "all")


class ConfigError(ModelError):

    """Configuration validation error with the originating YAML line."""

    def __init__(
        self, message: str, field: str | None = None, value: Any = None, line: int | None = None
    ):
        """Initialize config error."""
        super().__init__(message, field, value)
        self.line = line

    def __str__(self) -> str:
        """Prefix the message with the line number when known."""
        if self.line is not None:
            return f"line {self.line}: {self.message}"
        return self.message


# =============================================================================
# Field Validators
# =============================================================================


def validate_float(
    value: Any,
    field_name: str,
    min_value: float | None = None,
    max_value: float | None = None,
    exclusive_min: bool = False,
) -> float:
    """Validate a real-valued field."""
    if isinstance(value, bool) or not isinstance(value, int | float):
        raise ConfigError(f"Field '{field_name}' must be a number", field_name, value)
    value = float(value)
    if min_value is not None:
        if exclusive_min and value <= min_value:
            raise ConfigError(
                f"Field '{field_name}' must be greater than {min_value}", field_name, value
            )
        if not exclusive_min and value < min_value:
            raise ConfigError(
                f"Field '{field_name}' must be at least {min_value}", field_name, value
            )
    if max_value is not None and value > max_value:
        raise ConfigError(f"Field '{field_name}' must be at most {max_value}", field_name, value)
    return value


def validate_integer(
    value: Any, field_name: str, min_value: int | None = None, max_value: int | None = None
) -> int:
    """Validate an integer field."""
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"Field '{field_name}' must be an integer", field_name, value)
    if min_value is not None and value < min_value:
        raise ConfigError(f"Field '{field_name}' must be at least {min_value}", field_name, value)
    if max_value is not None and value > max_value:
        raise ConfigError(f"Field '{field_name}' must be at most {max_value}", field_name, value)
    return value


def validate_choice(value: Any, field_name: str, choices: tuple[str, ...]) -> str:
    """Validate an enumerated string field."""
    if not isinstance(value, str) or value not in choices:
        raise ConfigError(f"Field '{field_name}' must be one of {list(choices)}", field_name, value)
    return value


def validate_float_list(
    value: Any, field_name: str, length: int | None = None, positive: bool = True
) -> tuple[float, ...]:
    """Validate a list of reals."""
    if not isinstance(value, list | tuple):
        raise ConfigError(f"Field '{field_name}' must be a list", field_name, value)
    if length is not None and len(value) != length:
        raise ConfigError(f"Field '{field_name}' must have {length} entries", field_name, value)
    items = tuple(
        validate_float(v, field_name, min_value=0.0, exclusive_min=positive) for v in value
    )
    if not items:
        raise ConfigError(f"Field '{field_name}' must not be empty", field_name, value)
    return items


def validate_boolean(value: Any, field_name: str) -> bool:
    """Validate a true/false field."""
    if not isinstance(value, bool):
        raise ConfigError(f"Field '{field_name}' must be true or false", field_name, value)
    return value


def validate_string(value: Any, field_name: str) -> str:
    """Validate a non-empty string field."""
    if not isinstance(value, str) or not value.strip():
        raise ConfigError(f"Field '{field_name}' must be a non-empty string", field_name, value)
    return value


def validate_neuron(value: Any, field_name: str) -> str:
    """Validate a ``θ,s,β`` neuron selector."""
    text = validate_string(value, field_name)
    try:
        Neuron.parse(text)
    except ModelError as e:
        raise ConfigError(e.message, field_name, value) from e
    return text


def validate_feature_list(value: Any, field_name: str) -> tuple[str, ...]:
    """Validate a list of local feature names."""
    names = [f.value for f in FEATURES]
    if not isinstance(value, list | tuple) or not value:
        raise ConfigError(f"Field '{field_name}' must be a non-empty list", field_name, value)
    return tuple(validate_choice(v, field_name, tuple(names)) for v in value)


# =============================================================================
# Sections
# =============================================================================


class CanvasConfig(NamedTuple):

    """Canvas size and degree calibration."""

    width: int
    height: int
    px_per_deg: float


class StimulusConfig(NamedTuple):

    """Luminance levels and display geometry defaults."""

    figure_lum: float
    ground_lum: float
    background_lum: float
    small_square_deg: float
    large_square_deg: float
    notch_depth_frac: float
    notch_height_frac: float
    overlap_frac: float
    overlap_shift_frac: float
    outline_width_px: int
    disc_radius_deg: float
    spacing_deg: float
    corner_exclusion_deg: float
    rim_exclusion_deg: float


class FilterConfig(NamedTuple):

    """Receptive-field tables and kernel shape parameters."""

    ventral_rf_deg: tuple[float, ...]
    gabor_aspect: float
    gabor_wavelength_ratio: float
    gabor_sigma_ratio: float
    dog_sigma_ratio: float
    dog_offset_ratio: float
    edge_bar_halfwidth_ratio: float
    pool_sigma_ratio: float
    pool_truncate: float
    dorsal_rf_deg: tuple[float, ...]
    dorsal_wr: float
    dorsal_ar_factors: tuple[float, ...]
    mt_rf_deg: tuple[float, ...]
    mt_ar: tuple[float, ...]
    mt_wr: tuple[float, ...]
    mt_off_flank_ratio: float


class DorsalConfig(NamedTuple):

    """Dorsal contrast rectifier parameters."""

    gamma: float
    rho: float
    gain: float


class SurroundConfig(NamedTuple):

    """One-sided MT surround of border-ownership cells."""

    max_extent_deg: float
    start_deg: float
    step_ratio: float
    weight_fn: str
    geometry: str
    sampling: str


class RelaxConfig(NamedTuple):

    """Relaxation labeling parameters."""

    max_iter: int
    epsilon: float
    sigma_compat: float
    penalty: float
    radius_px: int
    feature_cross_weight: float
    potential_gain: float
    potential_mode: str
    participation_floor: float


class ExperimentConfig(NamedTuple):

    """Experiment selection and run options."""

    name: str
    neuron: str
    families: str
    seed: int
    threads: int
    output_dir: str
    dump_maps: bool
    position_step_px: int
    sizes_deg: tuple[float, ...]
    full_canvas_deg: float
    kanizsa_pool: tuple[str, ...]
    overlap_pool: tuple[str, ...]

    @property
    def selected_neuron(self) -> Neuron:
        """Parsed neuron selector."""
        return Neuron.parse(self.neuron)


class Field(NamedTuple):

    """Schema entry: default value and validator."""

    default: Any
    validate: Callable[[Any, str], Any]


def _float(**kwargs: Any) -> Callable[[Any, str], float]:
    return lambda value, name: validate_float(value, name, **kwargs)


def _int(**kwargs: Any) -> Callable[[Any, str], int]:
    return lambda value, name: validate_integer(value, name, **kwargs)


def _choice(choices: tuple[str, ...]) -> Callable[[Any, str], str]:
    return lambda value, name: validate_choice(value, name, choices)


def _floats(length: int | None = 4) -> Callable[[Any, str], tuple[float, ...]]:
    return lambda value, name: validate_float_list(value, name, length=length)


UNIT = {"min_value": 0.0, "max_value": 1.0}
POSITIVE = {"min_value": 0.0, "exclusive_min": True}

SCHEMA: dict[str, tuple[type, dict[str, Field]]] = {
    "canvas": (
        CanvasConfig,
        {
            "width": Field(400, _int(min_value=16)),
            "height": Field(400, _int(min_value=16)),
            "px_per_deg": Field(32.0, _float(**POSITIVE)),
        },
    ),
    "stimulus": (
        StimulusConfig,
        {
            "figure_lum": Field(1.0, _float(**UNIT)),
            "ground_lum": Field(0.0, _float(**UNIT)),
            "background_lum": Field(0.5, _float(**UNIT)),
            "small_square_deg": Field(4.0, _float(**POSITIVE)),
            "large_square_deg": Field(10.0, _float(**POSITIVE)),
            "notch_depth_frac": Field(0.5, _float(min_value=0.0, max_value=0.9)),
            "notch_height_frac": Field(0.4, _float(min_value=0.0, max_value=0.9)),
            "overlap_frac": Field(0.5, _float(min_value=0.0, max_value=1.0)),
            "overlap_shift_frac": Field(0.25, _float(min_value=0.0, max_value=1.0)),
            "outline_width_px": Field(2, _int(min_value=1)),
            "disc_radius_deg": Field(1.5, _float(**POSITIVE)),
            "spacing_deg": Field(4.0, _float(**POSITIVE)),
            "corner_exclusion_deg": Field(0.3, _float(min_value=0.0)),
            "rim_exclusion_deg": Field(0.2, _float(min_value=0.0)),
        },
    ),
    "filters": (
        FilterConfig,
        {
            "ventral_rf_deg": Field((0.4, 0.6, 0.8, 1.0), _floats()),
            "gabor_aspect": Field(0.5, _float(**POSITIVE)),
            "gabor_wavelength_ratio": Field(0.8, _float(**POSITIVE)),
            "gabor_sigma_ratio": Field(0.25, _float(**POSITIVE)),
            "dog_sigma_ratio": Field(0.25, _float(**POSITIVE)),
            "dog_offset_ratio": Field(1.0, _float(**POSITIVE)),
            "edge_bar_halfwidth_ratio": Field(
                0.125, _float(min_value=0.0, max_value=0.5, exclusive_min=True)
            ),
            "pool_sigma_ratio": Field(0.25, _float(**POSITIVE)),
            "pool_truncate": Field(3.0, _float(**POSITIVE)),
            "dorsal_rf_deg": Field((0.9, 1.33, 1.76, 2.2), _floats()),
            "dorsal_wr": Field(2.5, _float(**POSITIVE)),
            "dorsal_ar_factors": Field((10.0, 9.0, 8.0, 7.0), _floats()),
            "mt_rf_deg": Field((2.5, 3.26, 4.02, 4.78), _floats()),
            "mt_ar": Field((33.0, 52.0, 80.0, 126.6), _floats()),
            "mt_wr": Field((3.3, 5.2, 8.0, 12.6), _floats()),
            "mt_off_flank_ratio": Field(
                0.4, _float(min_value=0.0, max_value=0.5, exclusive_min=True)
            ),
        },
    ),
    "dorsal": (
        DorsalConfig,
        {
            "gamma": Field(0.001, _float(**POSITIVE)),
            "rho": Field(0.02, _float(**POSITIVE)),
            "gain": Field(12.5, _float(**POSITIVE)),
        },
    ),
    "surround": (
        SurroundConfig,
        {
            "max_extent_deg": Field(9.0, _float(**POSITIVE)),
            "start_deg": Field(0.25, _float(min_value=0.0)),
            "step_ratio": Field(0.25, _float(**POSITIVE)),
            "weight_fn": Field("linear_negative_slope", _choice(WEIGHT_FUNCTIONS)),
            "geometry": Field("half_disc", _choice(SURROUND_GEOMETRIES)),
            "sampling": Field("area", _choice(SURROUND_SAMPLING)),
        },
    ),
    "relax": (
        RelaxConfig,
        {
            "max_iter": Field(10, _int(min_value=0, max_value=10)),
            "epsilon": Field(1e-4, _float(**POSITIVE)),
            "sigma_compat": Field(2.0, _float(**POSITIVE)),
            "penalty": Field(1.0, _float(min_value=0.0, max_value=1.0)),
            "radius_px": Field(13, _int(min_value=1)),
            "feature_cross_weight": Field(0.0, _float(**UNIT)),
            "potential_gain": Field(10.0, _float(**POSITIVE)),
            "potential_mode": Field("side_share", _choice(POTENTIAL_MODES)),
            "participation_floor": Field(1e-6, _float(min_value=0.0, max_value=1.0)),
        },
    ),
    "experiment": (
        ExperimentConfig,
        {
            "name": Field("zhou_battery", _choice(EXPERIMENTS)),
            "neuron": Field("vertical,border_light_dark,left", validate_neuron),
            "families": Field("selected", _choice(FAMILY_MODES)),
            "seed": Field(0, _int(min_value=0)),
            "threads": Field(1, _int(min_value=1, max_value=64)),
            "output_dir": Field("out", validate_string),
            "dump_maps": Field(False, validate_boolean),
            "position_step_px": Field(4, _int(min_value=1)),
            "sizes_deg": Field((3.0, 4.0, 6.0, 8.0, 11.0), _floats(length=None)),
            "full_canvas_deg": Field(30.0, _float(**POSITIVE)),
            "kanizsa_pool": Field(
                ("border_light_dark", "border_dark_light"), validate_feature_list
            ),
            "overlap_pool": Field(tuple(f.value for f in FEATURES), validate_feature_list),
        },
    ),
}

DEFAULTS: dict[str, dict[str, Any]] = {
    section: {key: spec.default for key, spec in fields.items()}
    for section, (_, fields) in SCHEMA.items()
}


class ModelConfig(NamedTuple):

    """Complete validated configuration."""

    canvas: CanvasConfig
    stimulus: StimulusConfig
    filters: FilterConfig
    dorsal: DorsalConfig
    surround: SurroundConfig
    relax: RelaxConfig
    experiment: ExperimentConfig

    def to_dict(self) -> dict[str, dict[str, Any]]:
        """Convert to a plain nested dictionary (lists instead of tuples)."""
        return {
            name: {
                key: list(value) if isinstance(value, tuple) else value
                for key, value in section._asdict().items()
            }
            for name, section in zip(self._fields, self, strict=True)
        }

    def with_overrides(self, section: str, **values: Any) -> ModelConfig:
        """
        Return a copy with some keys of one section replaced and re-validated.

        Raises
        ------
        ConfigError
            If a key is unknown or a value is invalid
        """
        data = self.to_dict()
        data.setdefault(section, {}).update(values)
        return build_config(data)


# =============================================================================
# Loading and Validation
# =============================================================================


def _line_index(text: str) -> dict[str, int]:
    """Map ``section`` and ``section.key`` to 1-based YAML line numbers."""
    lines: dict[str, int] = {}
    root = yaml.compose(text)
    if not isinstance(root, yaml.MappingNode):
        return lines
    for section_node, body in root.value:
        section = str(section_node.value)
        lines[section] = section_node.start_mark.line + 1
        if isinstance(body, yaml.MappingNode):
            for key_node, _ in body.value:
                lines[f"{section}.{key_node.value}"] = key_node.start_mark.line + 1
    return lines


def _cross_checks(config: ModelConfig) -> list[ConfigError]:
    errors = []
    stim = config.stimulus
    if stim.figure_lum == stim.ground_lum:
        errors.append(
            ConfigError(
                "figure_lum must differ from ground_lum", "stimulus.figure_lum", stim.figure_lum
            )
        )
    filt = config.filters
    per_scale = (
        "ventral_rf_deg",
        "dorsal_rf_deg",
        "dorsal_ar_factors",
        "mt_rf_deg",
        "mt_ar",
        "mt_wr",
    )
    for name in per_scale:
        if len(getattr(filt, name)) != len(filt.ventral_rf_deg):
            errors.append(
                ConfigError(
                    f"'{name}' must list one value per scale",
                    f"filters.{name}",
                    getattr(filt, name),
                )
            )
    if config.surround.start_deg >= config.surround.max_extent_deg:
        errors.append(
            ConfigError(
                "start_deg must be below max_extent_deg",
                "surround.start_deg",
                config.surround.start_deg,
            )
        )
    return errors


def collect_config_errors(
    data: dict[str, Any], lines: dict[str, int] | None = None
) -> tuple[ModelConfig | None, list[ConfigError]]:
    """
    Validate raw configuration data, collecting every error.

    Parameters
    ----------
    data : dict[str, Any]
        Parsed YAML mapping of sections
    lines : dict[str, int] | None, optional
        Line index from the YAML source, by default None

    Returns
    -------
    tuple[ModelConfig | None, list[ConfigError]]
        The configuration (None when any error occurred) and the errors
    """
    lines = lines or {}
    errors: list[ConfigError] = []
    if not isinstance(data, dict):
        return None, [ConfigError("Configuration must be a mapping of sections", None, data, 1)]

    for section in data:
        if section not in SCHEMA:
            errors.append(
                ConfigError(f"Unknown section '{section}'", section, None, lines.get(section))
            )

    sections = {}
    for section, (section_type, fields) in SCHEMA.items():
        raw = data.get(section) or {}
        if not isinstance(raw, dict):
            errors.append(
                ConfigError(
                    f"Section '{section}' must be a mapping", section, raw, lines.get(section)
                )
            )
            raw = {}
        for key in raw:
            if key not in fields:
                name = f"{section}.{key}"
                errors.append(ConfigError(f"Unknown key '{name}'", name, raw[key], lines.get(name)))
        values = {}
        for key, spec in fields.items():
            name = f"{section}.{key}"
            try:
                values[key] = spec.validate(raw.get(key, spec.default), name)
            except ConfigError as e:
                e.line = lines.get(name)
                errors.append(e)
                values[key] = spec.validate(spec.default, name)
        sections[section] = section_type(**values)

    config = ModelConfig(**sections)
    for error in _cross_checks(config):
        error.line = lines.get(error.field or "")
        errors.append(error)
    return (None if errors else config), errors


def build_config(
    data: dict[str, Any] | None = None, lines: dict[str, int] | None = None
) -> ModelConfig:
    """
    Build a validated configuration from raw data, defaults filling the gaps.

    Raises
    ------
    ConfigError
        The first validation error found
    """
    config, errors = collect_config_errors(data or {}, lines)
    if errors:
        raise errors[0]
    assert config is not None
    return config


def default_config() -> ModelConfig:
    """Configuration with every default value."""
    return build_config({})


def parse_config_text(text: str) -> tuple[ModelConfig | None, list[ConfigError]]:
    """Parse and validate YAML text, collecting every error."""
    try:
        data = yaml.safe_load(text) or {}
        lines = _line_index(text) if text.strip() else {}
    except yaml.MarkedYAMLError as e:
        line = e.problem_mark.line + 1 if e.problem_mark else None
        return None, [ConfigError(f"YAML syntax error: {e.problem}", None, None, line)]
    except yaml.YAMLError as e:
        return None, [ConfigError(f"YAML syntax error: {e}")]
    return collect_config_errors(data, lines)


def load_config(file_path: pathlib.Path | str | None) -> ModelConfig:
    """
    Load and validate a configuration file; ``None`` gives the defaults.

    Raises
    ------
    ConfigError
        If the file is missing, malformed or invalid
    """
    if file_path is None:
        return default_config()
    path = pathlib.Path(file_path)
    if not path.exists():
        raise ConfigError(f"Config file not found: {path}", "config", str(path))
    config, errors = parse_config_text(path.read_text(encoding="utf-8"))
    if errors:
        raise errors[0]
    assert config is not None
    return config


def dump_config(config: ModelConfig) -> str:
    """Serialize a configuration as YAML."""
    return yaml.safe_dump(config.to_dict(), default_flow_style=None, sort_keys=False, indent=2)


def validate_config_file(file_path: pathlib.Path | str) -> ValidationResult:
    """
    Validate a configuration file without raising.

    Returns
    -------
    ValidationResult
        Every problem found, formatted as ``line N: message`` where the line is known
    """
    path = pathlib.Path(file_path)
    if not path.exists():
        return create_validation_result(False, [f"Config file not found: {path}"])
    config, errors = parse_config_text(path.read_text(encoding="utf-8"))
    context = {"file": str(path)}
    if config is not None:
        context["config"] = config.to_dict()
    return create_validation_result(not errors, [str(e) for e in errors], context=context)
