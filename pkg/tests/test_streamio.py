"""IAFS stream files, sinks, and PGM emission."""

import struct

import numpy as np
import pytest

from diffstream import (
    ArraySink,
    BadMagic,
    CountMismatch,
    EmptyStream,
    FrameStream,
    FrameStreamWriter,
    NullSink,
    TruncatedFile,
    emit_pgm,
    read_stream,
    write_stream,
)


def test_round_trip_three_frames(tmp_path):
    rng = np.random.default_rng(51)
    values = rng.standard_normal((2, 3, 5)).astype(np.float32)
    path = tmp_path / "s.iafs"
    write_stream(path, values)
    back = read_stream(path)
    assert np.array_equal(back.values, values)
    assert (back.channels, back.frames, back.freq_bins) == (2, 3, 5)


def test_streaming_appends_and_finalize(tmp_path):
    rng = np.random.default_rng(52)
    path = tmp_path / "s.iafs"
    frames = [rng.standard_normal((1, 4)).astype(np.float32) for _ in range(7)]
    with FrameStreamWriter(path, 1, 4) as w:
        for f in frames:
            w.append(f)
    assert struct.unpack_from("<I", path.read_bytes(), 16)[0] == 7
    back = read_stream(path)
    assert np.array_equal(back.values, np.stack(frames, axis=1))


def test_unfinalized_count_zero_is_inferred(tmp_path):
    rng = np.random.default_rng(53)
    values = rng.standard_normal((2, 5, 3)).astype(np.float32)
    path = tmp_path / "s.iafs"
    write_stream(path, values)
    raw = bytearray(path.read_bytes())
    raw[16:20] = struct.pack("<I", 0)
    path.write_bytes(bytes(raw))
    back = read_stream(path)
    assert back.frames == 5
    assert np.array_equal(back.values, values)


def test_partial_frame_payload_is_truncated(tmp_path):
    values = np.zeros((2, 3, 4), dtype=np.float32)
    path = tmp_path / "s.iafs"
    write_stream(path, values)
    raw = path.read_bytes()
    path.write_bytes(raw[:-4])  # drop one value
    with pytest.raises(TruncatedFile):
        read_stream(path)


def test_count_mismatch(tmp_path):
    values = np.zeros((1, 4, 2), dtype=np.float32)
    path = tmp_path / "s.iafs"
    write_stream(path, values)
    raw = bytearray(path.read_bytes())
    raw[16:20] = struct.pack("<I", 9)
    path.write_bytes(bytes(raw))
    with pytest.raises(CountMismatch):
        read_stream(path)


def test_bad_magic_and_short_header(tmp_path):
    path = tmp_path / "bad.iafs"
    path.write_bytes(b"NOPE" + b"\x00" * 16)
    with pytest.raises(BadMagic):
        read_stream(path)
    path.write_bytes(b"IAFS\x01")
    with pytest.raises(TruncatedFile):
        read_stream(path)


def test_payload_layout_is_frame_major(tmp_path):
    # frame-major, then channel, then frequency
    values = np.arange(12, dtype=np.float32).reshape(2, 3, 2)  # (C, L, Fr)
    path = tmp_path / "s.iafs"
    write_stream(path, values)
    payload = np.frombuffer(path.read_bytes()[20:], dtype="<f4")
    expected = values.transpose(1, 0, 2).ravel()
    assert np.array_equal(payload, expected)


def test_sinks():
    sink = ArraySink()
    sink.append(np.ones((2, 3), np.float32))
    sink.append(np.zeros((2, 2, 3), np.float32))
    assert sink.stacked().shape == (2, 3, 3)
    null = NullSink()
    null.append(np.ones((2, 3), np.float32))
    null.append(np.ones((2, 5, 3), np.float32))
    assert null.frames == 6
    with pytest.raises(EmptyStream):
        ArraySink().stacked()


# -- PGM ----------------------------------------------------------------------

def read_pgm(path):
    data = path.read_bytes()
    header, rest = data.split(b"\n255\n", 1)
    magic, dims = header.split(b"\n", 1)
    w, h = (int(v) for v in dims.split())
    assert magic == b"P5"
    return np.frombuffer(rest, dtype=np.uint8).reshape(h, w)


def test_constant_stream_renders_mid_gray(tmp_path):
    values = np.full((1, 6, 2), 3.25, dtype=np.float32)
    path = tmp_path / "img.pgm"
    emit_pgm(FrameStream(values), path)
    img = read_pgm(path)
    assert img.shape == (2, 6)
    assert np.all(img == 128)


def test_min_max_normalization_hits_full_range(tmp_path):
    values = np.array([[[0.0], [1.0]]], dtype=np.float32)  # (1, 2, 1)
    path = tmp_path / "img.pgm"
    emit_pgm(FrameStream(values), path)
    img = read_pgm(path)
    assert img.shape == (1, 2)
    assert img.tolist() == [[0, 255]]


def test_width_equals_frame_count(tmp_path):
    rng = np.random.default_rng(54)
    values = rng.standard_normal((3, 17, 4)).astype(np.float32)
    path = tmp_path / "img.pgm"
    emit_pgm(FrameStream(values), path)
    img = read_pgm(path)
    assert img.shape == (12, 17)


def test_empty_stream_rejected(tmp_path):
    with pytest.raises(EmptyStream):
        emit_pgm(np.zeros((1, 0, 2), dtype=np.float32), tmp_path / "img.pgm")
