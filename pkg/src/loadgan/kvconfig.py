"""Flat key-value text files: one `key = value` per line, `#` comments."""

from __future__ import annotations

from pathlib import Path

from .errors import BadConfig


def parse_kv(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise BadConfig(f"line {lineno}: expected key = value, got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise BadConfig(f"line {lineno}: empty key")
        out[key] = value.strip()
    return out


def read_kv(path) -> dict[str, str]:
    return parse_kv(Path(path).read_text(encoding="utf-8"))


def write_kv(path, entries: dict) -> None:
    lines = [f"{k} = {v}" for k, v in entries.items()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def kv_int(kv: dict, key: str, default: int | None = None) -> int:
    if key not in kv:
        if default is None:
            raise BadConfig(f"missing config key {key!r}")
        return default
    try:
        return int(kv[key])
    except ValueError:
        raise BadConfig(f"config key {key!r} must be an integer, got {kv[key]!r}") from None


def kv_float(kv: dict, key: str, default: float | None = None) -> float:
    if key not in kv:
        if default is None:
            raise BadConfig(f"missing config key {key!r}")
        return default
    try:
        return float(kv[key])
    except ValueError:
        raise BadConfig(f"config key {key!r} must be a number, got {kv[key]!r}") from None
