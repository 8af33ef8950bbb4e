"""Artifact I/O helpers shared by the harness and the lint script."""

from .file_io import (
    atomic_write_bytes,
    atomic_write_text,
    format_cell,
    read_csv,
    render_csv,
    write_csv,
)
from .json_io import (
    canonical_file,
    canonical_json,
    canonicalize_json_file,
    is_json_canonical,
    read_json_file,
    write_json,
)

__all__ = [
    "atomic_write_bytes",
    "atomic_write_text",
    "canonical_file",
    "canonical_json",
    "canonicalize_json_file",
    "format_cell",
    "is_json_canonical",
    "read_csv",
    "read_json_file",
    "render_csv",
    "write_csv",
    "write_json",
]
