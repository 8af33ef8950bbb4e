"""Canonical JSON rendering and strict JSON loading."""

import json
import logging
from pathlib import Path
from typing import Any

from ..errors import ConfigError
from .file_io import atomic_write_text

logger = logging.getLogger(__name__)


def canonical_json(data: Any, indent: int = 2) -> str:
    """The project's one canonical JSON serialization (no trailing newline)."""
    return json.dumps(data, indent=indent, ensure_ascii=False, sort_keys=True)


def canonical_file(data: Any, indent: int = 2) -> str:
    """Canonical on-disk form: the JSON body plus the trailing newline."""
    return canonical_json(data, indent) + "\n"


def read_json_file(filepath: Path) -> dict[str, Any]:
    """Read a JSON object from ``filepath``.

    Raises:
        ConfigError: If the file cannot be read, is not JSON, or is not an object
    """
    try:
        data = json.loads(filepath.read_text(encoding="utf-8"))
    except OSError as e:
        logger.error("Error reading file %s: %s", filepath, e)
        raise ConfigError(f"{filepath}: cannot read ({e.strerror})") from e
    except json.JSONDecodeError as e:
        logger.error("Error parsing JSON from %s: %s", filepath, e)
        raise ConfigError(
            f"{filepath}: invalid JSON at line {e.lineno}: {e.msg}"
        ) from e
    if not isinstance(data, dict):
        raise ConfigError(f"{filepath}: top level must be a JSON object")
    return data


def write_json(filepath: Path, data: Any) -> None:
    atomic_write_text(filepath, canonical_file(data))


def is_json_canonical(text: str, indent: int = 2) -> bool:
    """True if ``text`` already equals the canonical rendering of its own parse.

    Raises ``json.JSONDecodeError`` if ``text`` is not valid JSON.
    """
    return text == canonical_file(json.loads(text), indent)


def canonicalize_json_file(path: Path, indent: int = 2) -> bool:
    """Rewrite ``path`` in canonical form if needed; return whether it changed.

    Reformatting only, never alters parsed data. Raises ``json.JSONDecodeError``
    on invalid JSON.
    """
    text = path.read_text(encoding="utf-8")
    data = json.loads(text)
    if text == canonical_file(data, indent):
        return False
    atomic_write_text(path, canonical_file(data, indent))
    return True
