"""Atomic artifact writes and CSV emission."""

import csv
import io
import logging
import os
import tempfile
from collections.abc import Iterable, Sequence
from pathlib import Path

logger = logging.getLogger(__name__)

CsvCell = str | int | float | bool


def atomic_write_bytes(filepath: Path | str, data: bytes) -> None:
    """Write ``data`` via a same-directory temp file plus os.replace.

    The temp file shares the target's directory so the rename stays on one
    filesystem. On any failure the temp file is removed and the original
    target is untouched.
    """
    filepath = Path(filepath)
    parent = filepath.parent
    parent.mkdir(parents=True, exist_ok=True)
    tmp_path: str | None = None
    try:
        with tempfile.NamedTemporaryFile(
            mode="wb",
            dir=parent,
            prefix=filepath.name + ".",
            suffix=".tmp",
            delete=False,
        ) as tmp:
            tmp_path = tmp.name
            tmp.write(data)
            tmp.flush()
            os.fsync(tmp.fileno())
        os.chmod(tmp_path, 0o644)
        os.replace(tmp_path, filepath)
        tmp_path = None
        logger.debug("Wrote %s (%d bytes)", filepath, len(data))
    finally:
        if tmp_path is not None:
            Path(tmp_path).unlink(missing_ok=True)


def atomic_write_text(filepath: Path | str, text: str) -> None:
    atomic_write_bytes(filepath, text.encode("utf-8"))


def format_cell(value: CsvCell) -> str:
    """Floats use repr so a value round-trips and reruns stay byte-identical."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def render_csv(header: Sequence[str], rows: Iterable[Sequence[CsvCell]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        if len(row) != len(header):
            raise ValueError(f"CSV row has {len(row)} cells, header has {len(header)}")
        writer.writerow([format_cell(v) for v in row])
    return buffer.getvalue()


def write_csv(
    filepath: Path | str, header: Sequence[str], rows: Iterable[Sequence[CsvCell]]
) -> None:
    atomic_write_text(filepath, render_csv(header, rows))


def read_csv(filepath: Path | str) -> list[dict[str, str]]:
    with open(filepath, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))
