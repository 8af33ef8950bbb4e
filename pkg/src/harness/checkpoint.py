"""Binary checkpoint format.

Layout, all integers little-endian::

    b"PERL" | u32 version | u32 tensor count
    per tensor: u16 name length | utf-8 name
                u32 rows | u32 cols | u32 flags | u64 offset
    u64 payload length | float64 payload
    u32 config length | canonical JSON config echo

Flags: bit 0 trainable, bit 1 vector (stored as rows x 1). Offsets are
relative to the start of the payload.
"""

import json
import logging
import struct
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Final

import numpy as np
import numpy.typing as npt

from ..errors import CheckpointFormatError, ConfigError
from ..policy import PolicyNet
from ..utilities import atomic_write_bytes, canonical_json
from .experiment_config import ExperimentConfig, config_from_dict
from .network import build_network

logger = logging.getLogger(__name__)

MAGIC: Final = b"PERL"
VERSION: Final = 1

FLAG_TRAINABLE: Final = 0b01
FLAG_VECTOR: Final = 0b10

_HEADER: Final = struct.Struct("<4sII")
_NAME_LEN: Final = struct.Struct("<H")
_ENTRY: Final = struct.Struct("<IIIQ")
_PAYLOAD_LEN: Final = struct.Struct("<Q")
_CONFIG_LEN: Final = struct.Struct("<I")
_FLOAT: Final = np.dtype("<f8")


@dataclass(frozen=True)
class TensorRecord:
    name: str
    value: npt.NDArray[np.float64]
    trainable: bool

    @property
    def flags(self) -> int:
        trainable = FLAG_TRAINABLE if self.trainable else 0
        return trainable | (FLAG_VECTOR if self.value.ndim == 1 else 0)

    @property
    def rows_cols(self) -> tuple[int, int]:
        if self.value.ndim == 1:
            return self.value.shape[0], 1
        return self.value.shape[0], self.value.shape[1]


def encode_checkpoint(records: Sequence[TensorRecord], config_json: str) -> bytes:
    parts = [_HEADER.pack(MAGIC, VERSION, len(records))]
    offset = 0
    for rec in records:
        if rec.value.ndim not in (1, 2):
            raise CheckpointFormatError(
                f"{rec.name}: cannot store a {rec.value.ndim}-d tensor"
            )
        name = rec.name.encode("utf-8")
        rows, cols = rec.rows_cols
        parts.append(_NAME_LEN.pack(len(name)))
        parts.append(name)
        parts.append(_ENTRY.pack(rows, cols, rec.flags, offset))
        offset += rows * cols * _FLOAT.itemsize
    parts.append(_PAYLOAD_LEN.pack(offset))
    for rec in records:
        parts.append(np.ascontiguousarray(rec.value, dtype=_FLOAT).tobytes())
    config = config_json.encode("utf-8")
    parts.append(_CONFIG_LEN.pack(len(config)))
    parts.append(config)
    return b"".join(parts)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise CheckpointFormatError(
                f"truncated checkpoint: need {n} bytes for {what} "
                f"at offset {self.pos}, "
                f"{len(self.data) - self.pos} left"
            )
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: struct.Struct, what: str) -> tuple:
        return fmt.unpack(self.take(fmt.size, what))


def decode_checkpoint(data: bytes) -> tuple[list[TensorRecord], str]:
    """Parse and validate checkpoint bytes; returns the tensors and the config echo."""
    reader = _Reader(data)
    magic, version, count = reader.unpack(_HEADER, "header")
    if magic != MAGIC:
        raise CheckpointFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise CheckpointFormatError(
            f"unsupported checkpoint version {version}, expected {VERSION}"
        )

    manifest = []
    for i in range(count):
        (name_len,) = reader.unpack(_NAME_LEN, f"name length of tensor {i}")
        try:
            name = reader.take(name_len, f"name of tensor {i}").decode("utf-8")
        except UnicodeDecodeError as e:
            raise CheckpointFormatError(f"tensor {i}: name is not utf-8") from e
        rows, cols, flags, offset = reader.unpack(_ENTRY, f"manifest entry {name}")
        if flags & ~(FLAG_TRAINABLE | FLAG_VECTOR):
            raise CheckpointFormatError(f"{name}: unknown flag bits {flags:#x}")
        if flags & FLAG_VECTOR and cols != 1:
            raise CheckpointFormatError(f"{name}: vector tensor with {cols} columns")
        manifest.append((name, rows, cols, flags, offset))

    (payload_len,) = reader.unpack(_PAYLOAD_LEN, "payload length")
    payload = reader.take(payload_len, "payload")
    _check_extents(manifest, payload_len)

    (config_len,) = reader.unpack(_CONFIG_LEN, "config length")
    try:
        config_json = reader.take(config_len, "config echo").decode("utf-8")
    except UnicodeDecodeError as e:
        raise CheckpointFormatError("config echo is not utf-8") from e
    if reader.pos != len(data):
        raise CheckpointFormatError(
            f"{len(data) - reader.pos} trailing bytes after config echo"
        )

    records = []
    for name, rows, cols, flags, offset in manifest:
        values = np.frombuffer(payload, dtype=_FLOAT, count=rows * cols, offset=offset)
        if not np.all(np.isfinite(values)):
            raise CheckpointFormatError(f"{name}: non-finite values in payload")
        shape = (rows,) if flags & FLAG_VECTOR else (rows, cols)
        records.append(
            TensorRecord(
                name,
                values.astype(np.float64).reshape(shape),
                bool(flags & FLAG_TRAINABLE),
            )
        )
    return records, config_json


def _check_extents(
    manifest: list[tuple[str, int, int, int, int]], payload_len: int
) -> None:
    extents = []
    for name, rows, cols, _, offset in manifest:
        size = rows * cols * _FLOAT.itemsize
        if offset % _FLOAT.itemsize != 0:
            raise CheckpointFormatError(
                f"{name}: offset {offset} is not 8-byte aligned"
            )
        if offset + size > payload_len:
            raise CheckpointFormatError(
                f"{name}: bytes {offset}..{offset + size} fall outside "
                f"the {payload_len}-byte payload"
            )
        extents.append((offset, offset + size, name))
    extents.sort()
    for (_, end, left), (start, _, right) in zip(extents, extents[1:], strict=False):
        if start < end:
            raise CheckpointFormatError(f"{left} and {right} overlap in the payload")


def net_records(net: PolicyNet) -> list[TensorRecord]:
    return [
        TensorRecord(name, node.value, node.requires_grad)
        for name, node in net.named_tensors()
    ]


def save_checkpoint(net: PolicyNet, config: ExperimentConfig, path: Path | str) -> None:
    data = encode_checkpoint(net_records(net), canonical_json(config.echo_dict()))
    atomic_write_bytes(path, data)
    logger.info("Saved checkpoint %s (%d bytes)", path, len(data))


def load_checkpoint(path: Path | str) -> tuple[PolicyNet, ExperimentConfig]:
    """Rebuild the network the echoed config describes and fill it from ``path``."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise CheckpointFormatError(f"{path}: cannot read ({e.strerror})") from e
    records, config_json = decode_checkpoint(data)
    try:
        config = config_from_dict(json.loads(config_json), environ={})
    except (json.JSONDecodeError, ConfigError) as e:
        raise CheckpointFormatError(f"{path}: invalid config echo: {e}") from e

    net = build_network(config, skeleton=True)
    tensors = list(net.named_tensors())
    if len(tensors) != len(records):
        raise CheckpointFormatError(
            f"{path}: {len(records)} tensors stored, "
            f"the configured network has {len(tensors)}"
        )
    for (name, node), rec in zip(tensors, records, strict=True):
        if name != rec.name or node.shape != rec.value.shape:
            raise CheckpointFormatError(
                f"{path}: manifest entry {rec.name} {rec.value.shape} does not match "
                f"{name} {node.shape}"
            )
        node.value = rec.value.copy()
        node.requires_grad = rec.trainable
    logger.debug("Loaded %d tensors from %s", len(records), path)
    return net, config
