"""Flat ``key = value`` text files used for run configs and noise profiles."""

from __future__ import annotations

from pathlib import Path


def parse_kv_text(text: str, source: str = "<string>") -> dict[str, str]:
    """Parse lines of ``key = value``; '#' starts a comment, blanks skipped."""
    items: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        value = value.strip()
        if not key:
            raise ValueError(f"{source}:{lineno}: empty key")
        if key in items:
            raise ValueError(f"{source}:{lineno}: duplicate key {key!r}")
        items[key] = value
    return items


def parse_kv_file(path) -> dict[str, str]:
    path = Path(path)
    return parse_kv_text(path.read_text(), source=str(path))


def format_kv(items) -> str:
    return "".join(f"{key} = {value}\n" for key, value in items)
