"""Binary frame-stream file format and grayscale image emission.

IAFS layout (all integers unsigned 32-bit little-endian):

    bytes 0..3    magic "IAFS"
    bytes 4..7    version, currently 1
    bytes 8..11   channels C
    bytes 12..15  frequency bins Fr
    bytes 16..19  frame count, 0 while a writer is still streaming
    payload       frames as little-endian float32, frame-major, then
                  channel-major, then frequency

A writer patches the frame count on close; readers accept count = 0 and
infer the count from the payload length, provided it divides into whole
frames.
"""

import struct
from dataclasses import dataclass

import numpy as np

from .errors import BadMagic, CountMismatch, EmptyStream, TruncatedFile

IAFS_MAGIC = b"IAFS"
IAFS_VERSION = 1
_HEADER = struct.Struct("<4sIIII")


@dataclass
class FrameStream:
    """An in-memory frame stream; ``values`` has shape (C, frames, Fr)."""

    values: np.ndarray

    @property
    def channels(self) -> int:
        return self.values.shape[0]

    @property
    def frames(self) -> int:
        return self.values.shape[1]

    @property
    def freq_bins(self) -> int:
        return self.values.shape[2]


class FrameStreamWriter:
    """Streaming IAFS writer; use as a context manager or call close()."""

    def __init__(self, path, channels: int, freq_bins: int):
        self.channels = int(channels)
        self.freq_bins = int(freq_bins)
        self.frames_written = 0
        self._fh = open(path, "wb")
        self._fh.write(_HEADER.pack(IAFS_MAGIC, IAFS_VERSION, self.channels, self.freq_bins, 0))

    def append(self, values: np.ndarray) -> None:
        """Append one frame (C, Fr) or a block (C, k, Fr)."""
        arr = np.asarray(values, dtype=np.float32)
        if arr.ndim == 2:
            arr = arr[:, None, :]
        if arr.ndim != 3 or arr.shape[0] != self.channels or arr.shape[2] != self.freq_bins:
            raise CountMismatch(
                f"expected frames shaped ({self.channels}, k, {self.freq_bins}), got {arr.shape}"
            )
        # frame-major on disk
        self._fh.write(np.ascontiguousarray(arr.transpose(1, 0, 2)).tobytes())
        self.frames_written += arr.shape[1]

    def close(self) -> None:
        if self._fh.closed:
            return
        self._fh.seek(16)
        self._fh.write(struct.pack("<I", self.frames_written))
        self._fh.close()

    def __enter__(self) -> "FrameStreamWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def write_stream(path, values: np.ndarray) -> None:
    """Write a whole (C, frames, Fr) array as one finalized IAFS file."""
    arr = np.asarray(values, dtype=np.float32)
    with FrameStreamWriter(path, arr.shape[0], arr.shape[2]) as w:
        w.append(arr)


def read_stream(path) -> FrameStream:
    """Read an IAFS file; infers the frame count when the header says 0."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise TruncatedFile(f"file shorter than the {_HEADER.size}-byte header")
    magic, version, channels, freq_bins, count = _HEADER.unpack_from(raw)
    if magic != IAFS_MAGIC:
        raise BadMagic(f"expected magic {IAFS_MAGIC!r}, got {magic!r}")
    if version != IAFS_VERSION:
        raise BadMagic(f"unsupported IAFS version {version}")
    payload = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size)
    per_frame = channels * freq_bins
    if per_frame == 0 or payload.size % per_frame != 0:
        raise TruncatedFile(
            f"payload of {payload.size} values is not whole frames of {per_frame}"
        )
    frames = payload.size // per_frame
    if count != 0 and count != frames:
        raise CountMismatch(f"header says {count} frames, payload holds {frames}")
    values = payload.reshape(frames, channels, freq_bins).transpose(1, 0, 2)
    return FrameStream(values=np.ascontiguousarray(values))


class ArraySink:
    """Collects appended frames in memory; test and demo convenience only."""

    def __init__(self):
        self._blocks: list[np.ndarray] = []

    def append(self, values: np.ndarray) -> None:
        arr = np.asarray(values, dtype=np.float32)
        if arr.ndim == 2:
            arr = arr[:, None, :]
        self._blocks.append(arr.copy())

    def stacked(self) -> np.ndarray:
        if not self._blocks:
            raise EmptyStream("no frames collected")
        return np.concatenate(self._blocks, axis=1)


class NullSink:
    """Discards frames, counting them; used by memory probes."""

    def __init__(self):
        self.frames = 0

    def append(self, values: np.ndarray) -> None:
        arr = np.asarray(values)
        self.frames += 1 if arr.ndim == 2 else arr.shape[1]


def emit_pgm(stream, path) -> None:
    """Render a stream as a binary PGM: width = frames, height = C * Fr.

    Linear min-max normalization to 0..255; a zero-range stream renders as
    uniform mid-gray 128.
    """
    values = stream.values if isinstance(stream, FrameStream) else np.asarray(stream)
    if values.ndim != 3 or values.shape[1] == 0:
        raise EmptyStream("need a nonempty (C, frames, Fr) stream")
    C, L, Fr = values.shape
    image = values.transpose(0, 2, 1).reshape(C * Fr, L).astype(np.float64)
    lo, hi = image.min(), image.max()
    if hi > lo:
        pixels = np.rint((image - lo) / (hi - lo) * 255.0).astype(np.uint8)
    else:
        pixels = np.full(image.shape, 128, dtype=np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{L} {C * Fr}\n255\n".encode("ascii"))
        fh.write(pixels.tobytes())
