"""Line-oriented ``key = value`` text files.

Blank lines and ``#`` comments are ignored. Keys are case-sensitive and may
appear only once. Values are kept as strings; typed accessors convert them.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Iterable, Mapping

from .errors import ConfigError


def parse_kv(text: str, source: str = "<string>") -> dict[str, str]:
    entries: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        if key in entries:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        entries[key] = value
    return entries


def read_kv(path: str | Path) -> dict[str, str]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror or exc}") from exc
    return parse_kv(text, source=str(path))


def format_value(value) -> str:
    """Round-trip text for a config value (floats use ``repr``)."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (tuple, list)):
        return ", ".join(format_value(v) for v in value)
    return str(value)


def format_kv(items: Mapping[str, object] | Iterable[tuple[str, object]], header: str | None = None) -> str:
    pairs = items.items() if isinstance(items, Mapping) else items
    lines = [f"# {header}"] if header else []
    lines.extend(f"{key} = {format_value(value)}" for key, value in pairs)
    return "\n".join(lines) + "\n"


def get_float(entries: Mapping[str, str], key: str, default: float | None = None) -> float:
    if key not in entries:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default
    try:
        value = float(entries[key])
    except ValueError:
        raise ConfigError(f"key {key!r}: {entries[key]!r} is not a number") from None
    if math.isnan(value):
        raise ConfigError(f"key {key!r}: NaN is not allowed")
    return value


def get_int(entries: Mapping[str, str], key: str, default: int | None = None) -> int:
    if key not in entries:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default
    try:
        return int(entries[key])
    except ValueError:
        raise ConfigError(f"key {key!r}: {entries[key]!r} is not an integer") from None


def get_str(entries: Mapping[str, str], key: str, default: str | None = None) -> str:
    if key not in entries:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default
    return entries[key]


def get_float_list(entries: Mapping[str, str], key: str) -> tuple[float, ...] | None:
    if key not in entries or not entries[key].strip():
        return None
    try:
        return tuple(float(v) for v in entries[key].split(","))
    except ValueError:
        raise ConfigError(f"key {key!r}: expected a comma-separated list of numbers") from None
