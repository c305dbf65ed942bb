"""Runtime configuration: default values, override parsing, snapshots.

All tunable defaults live in the packaged ``defaults.json``; the config
dataclasses in each module mirror that file and a unit test keeps the two
in sync. Overrides address scalar fields as ``section.key`` strings, e.g.
``fusion.eta_min=0.2``.
"""
from __future__ import annotations

import dataclasses
import json
from importlib import resources

from .digital_map import MapBuildConfig
from .ego import KfNoise
from .extraction import ExtractionConfig
from .fusion import FusionConfig
from .geometry import FovSector
from .scenario import GridSimConfig, TrackSimConfig


class ConfigError(ValueError):
    """An override names an unknown key or carries an unusable value."""


CONFIG_SECTIONS = {
    "extraction": ExtractionConfig,
    "fusion": FusionConfig,
    "map_build": MapBuildConfig,
    "grid_sim": GridSimConfig,
    "track_sim": TrackSimConfig,
    "kf_noise": KfNoise,
}

_SCALARS = (bool, int, float, str)


def _jsonable(value):
    if isinstance(value, FovSector):
        return {"min_angle": value.min_angle, "max_angle": value.max_angle,
                "max_range": value.max_range}
    if isinstance(value, tuple):
        return list(value)
    return value


def defaults_snapshot() -> dict:
    """Nested dict of every section's default values, JSON-safe."""
    out = {}
    for name, cls in sorted(CONFIG_SECTIONS.items()):
        out[name] = {f.name: _jsonable(getattr(cls(), f.name))
                     for f in dataclasses.fields(cls)}
    return out


def load_packaged_defaults() -> dict:
    text = resources.files("gridfuse").joinpath("defaults.json").read_text()
    return json.loads(text)


def coerce_override_value(text: str):
    """Parse an override value: JSON literal if possible, else raw string."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def parse_override(spec: str) -> tuple[str, str, object]:
    """Split ``section.key=value`` into its parts.

    Raises ConfigError on malformed input.
    """
    if "=" not in spec:
        raise ConfigError(f"override {spec!r} is not of the form KEY=VAL")
    key, _, raw = spec.partition("=")
    if key.count(".") != 1:
        raise ConfigError(
            f"override key {key!r} is not of the form section.field")
    section, _, field_name = key.partition(".")
    return section, field_name, coerce_override_value(raw)


def apply_overrides(configs: dict, overrides: dict) -> dict:
    """Return a copy of ``configs`` with dotted-key overrides applied.

    configs maps section name to a config dataclass instance; overrides
    maps ``section.field`` to an already-parsed value. Only scalar fields
    may be overridden; unknown sections or fields raise ConfigError.
    """
    out = dict(configs)
    for key, value in overrides.items():
        if key.count(".") != 1:
            raise ConfigError(
                f"override key {key!r} is not of the form section.field")
        section, _, field_name = key.partition(".")
        if section not in out:
            known = ", ".join(sorted(out))
            raise ConfigError(
                f"unknown config section {section!r} (known: {known})")
        cfg = out[section]
        field_map = {f.name: f for f in dataclasses.fields(cfg)}
        if field_name not in field_map:
            raise ConfigError(
                f"unknown field {field_name!r} in section {section!r}")
        current = getattr(cfg, field_name)
        if not isinstance(current, _SCALARS):
            raise ConfigError(
                f"field {section}.{field_name} is not a scalar and cannot "
                "be overridden from the command line")
        if not isinstance(value, _SCALARS):
            raise ConfigError(
                f"override value for {section}.{field_name} must be a "
                "scalar")
        if isinstance(current, bool):
            if not isinstance(value, bool):
                raise ConfigError(
                    f"{section}.{field_name} expects a boolean")
            cast = value
        elif isinstance(current, int) and not isinstance(current, bool):
            if isinstance(value, bool) or (isinstance(value, float)
                                           and not value.is_integer()):
                raise ConfigError(f"{section}.{field_name} expects an int")
            try:
                cast = int(value)
            except (TypeError, ValueError):
                raise ConfigError(
                    f"{section}.{field_name} expects an int, got {value!r}")
        elif isinstance(current, float):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(
                    f"{section}.{field_name} expects a number, got {value!r}")
            cast = float(value)
        else:
            cast = str(value)
        out[section] = dataclasses.replace(cfg, **{field_name: cast})
        validate = getattr(out[section], "validate", None)
        if validate is not None:
            try:
                validate()
            except ValueError as exc:
                raise ConfigError(
                    f"override {section}.{field_name}={value!r} rejected: "
                    f"{exc}") from exc
    return out


def default_configs() -> dict:
    """Fresh default instances for every section."""
    return {name: cls() for name, cls in CONFIG_SECTIONS.items()}
