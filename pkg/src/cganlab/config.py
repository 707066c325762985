"""Scenario configuration: sectioned key/value presets plus INI overrides.

A configuration is a mapping ``section -> {key: value}``. Each scenario
ships a ``desk`` preset (minutes-scale) and a ``paper`` preset (the full
experiment sizes). An INI file may override any key that the chosen preset
defines; values are coerced to the type of the preset default, and keys the
preset does not know are rejected.

Overrides look like::

    [train]
    iterations = 2000
    lr = 5e-4

    [model]
    g_hidden = 100,100
"""

from __future__ import annotations

import configparser
import copy
from pathlib import Path
from typing import Any, Mapping

SECTIONS = ("run", "train", "model", "data", "eval")


class ConfigError(ValueError):
    """Malformed or unknown configuration entries."""


def _coerce(raw: str, default: Any, where: str) -> Any:
    text = raw.strip()
    try:
        if isinstance(default, bool):
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        if isinstance(default, tuple):
            if text == "":
                return ()
            parts = [p.strip() for p in text.split(",")]
            kind = type(default[0]) if default else str
            if kind is bool:
                raise ValueError("tuples of booleans are not supported")
            return tuple(kind(p) for p in parts)
        if default is None:
            return None if text.lower() in ("", "none") else float(text)
        return text
    except ValueError as exc:
        raise ConfigError(f"{where}: cannot read {raw!r} as {type(default).__name__}") from exc


def merge(base: Mapping[str, Mapping[str, Any]], overrides: Mapping[str, Mapping[str, str]], source: str) -> dict:
    """Apply string overrides onto a typed preset, rejecting unknown keys."""
    out = copy.deepcopy({k: dict(v) for k, v in base.items()})
    for section, items in overrides.items():
        if section not in out:
            raise ConfigError(f"{source}: unknown section [{section}]")
        for key, raw in items.items():
            if key not in out[section]:
                raise ConfigError(f"{source}: unknown key {key!r} in [{section}]")
            out[section][key] = _coerce(str(raw), out[section][key], f"{source} [{section}] {key}")
    return out


def read_overrides(path: str | Path) -> dict[str, dict[str, str]]:
    parser = configparser.ConfigParser(interpolation=None, default_section="__none__")
    parser.optionxform = str  # keep key case
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    return {s: dict(parser.items(s)) for s in parser.sections()}


def load(base: Mapping[str, Mapping[str, Any]], path: str | Path | None) -> dict:
    if path is None:
        return merge(base, {}, "preset")
    return merge(base, read_overrides(path), str(path))


def to_jsonable(cfg: Mapping[str, Mapping[str, Any]]) -> dict:
    """Tuples become lists so the manifest is plain JSON."""
    return {s: {k: list(v) if isinstance(v, tuple) else v for k, v in items.items()} for s, items in cfg.items()}


def from_jsonable(cfg: Mapping[str, Mapping[str, Any]], base: Mapping[str, Mapping[str, Any]]) -> dict:
    """Inverse of :func:`to_jsonable`, checked against ``base`` for known keys and types."""
    out = copy.deepcopy({k: dict(v) for k, v in base.items()})
    for section, items in cfg.items():
        if section not in out:
            raise ConfigError(f"manifest: unknown section [{section}]")
        for key, value in items.items():
            if key not in out[section]:
                raise ConfigError(f"manifest: unknown key {key!r} in [{section}]")
            default = out[section][key]
            if isinstance(default, tuple):
                value = tuple(value)
            elif isinstance(default, float) and isinstance(value, int) and not isinstance(value, bool):
                value = float(value)
            elif default is not None and not isinstance(value, type(default)):
                raise ConfigError(f"manifest: [{section}] {key} has the wrong type")
            out[section][key] = value
    return out
