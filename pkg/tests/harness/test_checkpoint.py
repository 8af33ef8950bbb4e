"""Tests for the binary checkpoint format."""

import struct
from dataclasses import replace

import numpy as np
import pytest

from src.adapters import AdapterKind
from src.config import OUTPUT_DIR
from src.errors import CheckpointFormatError
from src.harness import (
    MAGIC,
    TensorRecord,
    build_network,
    decode_checkpoint,
    encode_checkpoint,
    load_checkpoint,
    net_records,
    save_checkpoint,
)
from src.utilities import canonical_json

RECORDS = [
    TensorRecord("a", np.arange(6.0).reshape(2, 3), True),
    TensorRecord("b", np.array([0.5, -1.5]), False),
]

# Byte offsets inside encode_checkpoint(RECORDS, "{}")
A_ROWS, A_FLAGS = 15, 23
B_COLS, B_OFFSET = 42, 50


def _corrupt(offset, fmt, value):
    data = bytearray(encode_checkpoint(RECORDS, "{}"))
    struct.pack_into(fmt, data, offset, value)
    return bytes(data)


class TestEncoding:
    def test_roundtrip(self):
        records, config_json = decode_checkpoint(encode_checkpoint(RECORDS, '{"x": 1}'))

        assert config_json == '{"x": 1}'
        assert [(r.name, r.trainable) for r in records] == [("a", True), ("b", False)]
        np.testing.assert_array_equal(records[0].value, RECORDS[0].value)
        np.testing.assert_array_equal(records[1].value, RECORDS[1].value)
        assert records[1].value.shape == (2,)

    def test_layout(self):
        data = encode_checkpoint(RECORDS, "{}")

        assert data[:4] == MAGIC
        assert struct.unpack_from("<II", data, 4) == (1, 2)
        assert data.endswith(struct.pack("<I", 2) + b"{}")

    def test_three_dimensional_tensor_rejected(self):
        with pytest.raises(CheckpointFormatError, match="cannot store a 3-d tensor"):
            encode_checkpoint([TensorRecord("t", np.zeros((1, 1, 1)), True)], "{}")


class TestCorruption:
    @pytest.mark.parametrize(
        ("data", "message"),
        [
            (b"XXXX" + encode_checkpoint(RECORDS, "{}")[4:], "bad magic"),
            (_corrupt(4, "<I", 2), "unsupported checkpoint version 2"),
            (encode_checkpoint(RECORDS, "{}")[:-1], "truncated checkpoint"),
            (encode_checkpoint(RECORDS, "{}")[:10], "truncated checkpoint"),
            (encode_checkpoint(RECORDS, "{}") + b"\0", "1 trailing bytes"),
            (_corrupt(A_FLAGS, "<I", 4), "unknown flag bits 0x4"),
            (_corrupt(B_COLS, "<I", 2), "vector tensor with 2 columns"),
            (_corrupt(A_ROWS, "<I", 3), "fall outside the 64-byte payload"),
            (_corrupt(B_OFFSET, "<Q", 8), "a and b overlap"),
            (_corrupt(B_OFFSET, "<Q", 47), "not 8-byte aligned"),
        ],
        ids=[
            "magic",
            "version",
            "short-echo",
            "short-manifest",
            "trailing",
            "flags",
            "vector-cols",
            "extent",
            "overlap",
            "alignment",
        ],
    )
    def test_rejected(self, data, message):
        with pytest.raises(CheckpointFormatError, match=message):
            decode_checkpoint(data)

    def test_non_finite_payload(self):
        records = [TensorRecord("a", np.array([1.0, np.nan]), True)]
        data = encode_checkpoint(records, "{}")

        with pytest.raises(CheckpointFormatError, match="a: non-finite values"):
            decode_checkpoint(data)


@pytest.mark.parametrize("kind", list(AdapterKind))
def test_save_load_save_is_byte_identical(make_config, tmp_path, kind):
    config = make_config(adapter={"kind": kind.value, "rank": 2})
    net = build_network(config)
    first, second = tmp_path / "first.perl", tmp_path / "second.perl"

    save_checkpoint(net, config, first)
    loaded, echoed = load_checkpoint(first)
    save_checkpoint(loaded, echoed, second)

    assert echoed == replace(config, output_dir=OUTPUT_DIR)
    assert first.read_bytes() == second.read_bytes()
    for (name, a), (_, b) in zip(
        net.named_tensors(), loaded.named_tensors(), strict=True
    ):
        np.testing.assert_array_equal(a.value, b.value, err_msg=name)
        assert a.requires_grad == b.requires_grad, name


def test_bytes_do_not_depend_on_output_dir(make_config, tmp_path):
    here = make_config(output_dir=str(tmp_path / "a"))
    there = make_config(output_dir=str(tmp_path / "b"))
    net = build_network(here)

    first, second = tmp_path / "here.perl", tmp_path / "there.perl"

    save_checkpoint(net, here, first)
    save_checkpoint(net, there, second)

    assert first.read_bytes() == second.read_bytes()


class TestLoadCheckpoint:
    def test_missing_file(self, tmp_path):
        with pytest.raises(CheckpointFormatError, match="cannot read"):
            load_checkpoint(tmp_path / "absent.perl")

    def test_invalid_config_echo(self, make_config, tmp_path):
        path = tmp_path / "ckpt.perl"
        records = net_records(build_network(make_config()))
        path.write_bytes(encode_checkpoint(records, "{}"))

        with pytest.raises(CheckpointFormatError, match="invalid config echo"):
            load_checkpoint(path)

    def test_echo_describing_another_network(self, make_config, tmp_path):
        stored = build_network(make_config(adapter={"rank": 2}))
        echo = canonical_json(make_config(adapter={"rank": 1}).to_dict())
        path = tmp_path / "ckpt.perl"
        path.write_bytes(encode_checkpoint(net_records(stored), echo))

        with pytest.raises(CheckpointFormatError, match="does not match"):
            load_checkpoint(path)

    def test_tensor_count_mismatch(self, make_config, tmp_path):
        stored = build_network(make_config(adapter={"kind": "DoRA"}))
        echo = canonical_json(make_config().to_dict())
        path = tmp_path / "ckpt.perl"
        path.write_bytes(encode_checkpoint(net_records(stored), echo))

        with pytest.raises(CheckpointFormatError, match="tensors stored"):
            load_checkpoint(path)
