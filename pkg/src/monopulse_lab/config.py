"""Line-based ``key = value`` configuration files."""

from __future__ import annotations

from pathlib import Path

from .errors import ConfigError


def parse_config(text: str, source="<config>") -> dict:
    """Blank lines and ``#`` comments are skipped; later keys win."""
    out = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip().replace("-", "_"), value.strip()
        if not sep or not key:
            raise ConfigError(f"{source}:{n}: expected key=value, got {raw.strip()!r}")
        out[key] = value
    return out


def load_config(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {str(path)!r}: {exc.strerror}") from None
    return parse_config(text, str(path))
