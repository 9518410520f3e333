"""Self-attention importance analysis over the frame window.

Key positions map onto sampling regions by noise level: keys just past
the buffer hold the most-denoised frames (timesteps near 1, the Final
region of sampling) and keys at the tail hold the noisiest frames (the
Initial region). Buffer rows and columns are excluded before averaging,
and each region score is the mean attention mass that post-buffer
queries direct at that region's keys.

IAAM interchange format (integers unsigned 32-bit little-endian):

    bytes 0..3    magic "IAAM"
    bytes 4..7    version, currently 1
    bytes 8..11   Q, query count
    bytes 12..15  K, key count
    payload       Q*K little-endian float32, row-major (query-major)
"""

import math
import struct
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadMagic,
    BadShape,
    EmptyRegion,
    NegativeValue,
    NonFiniteValue,
    TruncatedFile,
)
from .plan import DEFAULT_FRACTIONS, SamplingRegion, focus_from_scores, split_sizes

IAAM_MAGIC = b"IAAM"
IAAM_VERSION = 1
_HEADER = struct.Struct("<4sIII")


@dataclass
class AttentionMap:
    """Square query-by-key score matrix over a frame window."""

    scores: np.ndarray
    buffer_len: int | None = None

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=np.float32)
        if self.scores.ndim != 2 or self.scores.shape[0] != self.scores.shape[1]:
            raise BadShape(f"attention map must be square, got shape {self.scores.shape}")
        if not np.all(np.isfinite(self.scores)):
            raise NonFiniteValue("attention map holds NaN or infinite entries")
        if np.any(self.scores < 0.0):
            raise NegativeValue("attention map holds negative entries")

    @property
    def window_len(self) -> int:
        return self.scores.shape[0]


@dataclass(frozen=True)
class AttentionProfile:
    """Mean attention mass per sampling region of the key axis."""

    score_initial: float
    score_middle: float
    score_final: float


def write_attention_map(amap, path) -> None:
    """Write an AttentionMap (or a square array) as an IAAM file."""
    scores = amap.scores if isinstance(amap, AttentionMap) else np.asarray(amap)
    scores = AttentionMap(scores).scores  # validates
    q, k = scores.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(IAAM_MAGIC, IAAM_VERSION, q, k))
        fh.write(scores.astype("<f4").tobytes())


def load_attention_map(path) -> AttentionMap:
    """Read and validate an IAAM file."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise TruncatedFile(f"file shorter than the {_HEADER.size}-byte header")
    magic, version, q, k = _HEADER.unpack_from(raw)
    if magic != IAAM_MAGIC:
        raise BadMagic(f"expected magic {IAAM_MAGIC!r}, got {magic!r}")
    if version != IAAM_VERSION:
        raise BadMagic(f"unsupported IAAM version {version}")
    if q != k:
        raise BadShape(f"attention map must be square, file declares {q}x{k}")
    payload = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size)
    if payload.size != q * k:
        raise TruncatedFile(f"expected {q * k} payload values, found {payload.size}")
    return AttentionMap(scores=payload.reshape(q, k).copy())


def key_region_bounds(
    window_len: int, buffer_len: int, fractions=DEFAULT_FRACTIONS
) -> dict[SamplingRegion, range]:
    """Partition post-buffer key positions into Final, Middle, Initial ranges.

    Final sits next to the buffer (most denoised keys); Initial is the
    noisy tail.
    """
    if not 0 <= buffer_len < window_len:
        raise EmptyRegion(
            f"need 0 <= buffer_len < window length, got {buffer_len} of {window_len}"
        )
    s_init, s_mid, s_fin = split_sizes(window_len - buffer_len, fractions)
    lo = buffer_len
    bounds = {
        SamplingRegion.FINAL: range(lo, lo + s_fin),
        SamplingRegion.MIDDLE: range(lo + s_fin, lo + s_fin + s_mid),
        SamplingRegion.INITIAL: range(lo + s_fin + s_mid, window_len),
    }
    return bounds


def region_scores(
    amap: AttentionMap,
    buffer_len: int,
    bounds: dict[SamplingRegion, range] | None = None,
) -> AttentionProfile:
    """Average attention mass over (post-buffer queries) x (keys per region)."""
    if buffer_len >= amap.window_len:
        raise EmptyRegion(
            f"buffer_len {buffer_len} leaves no post-buffer positions of {amap.window_len}"
        )
    if bounds is None:
        bounds = key_region_bounds(amap.window_len, buffer_len)
    for region, rng in bounds.items():
        if len(rng) == 0:
            raise EmptyRegion(f"{region.value} key range is empty")
        if rng.start < buffer_len or rng.stop > amap.window_len:
            raise EmptyRegion(f"{region.value} range {rng} exceeds post-buffer keys")
    queries = amap.scores[buffer_len:, :]
    # fsum is order-independent, so query-row permutations cannot move a score
    means = {
        region: math.fsum(queries[:, rng.start:rng.stop].ravel().tolist())
        / (queries.shape[0] * len(rng))
        for region, rng in bounds.items()
    }
    return AttentionProfile(
        score_initial=means[SamplingRegion.INITIAL],
        score_middle=means[SamplingRegion.MIDDLE],
        score_final=means[SamplingRegion.FINAL],
    )


def recommend_focus(profile: AttentionProfile) -> SamplingRegion:
    """Region with the highest score; ties resolve Middle over Final over Initial."""
    region, _ = focus_from_scores(
        profile.score_initial, profile.score_middle, profile.score_final
    )
    return region


def profile_report_csv(profile: AttentionProfile) -> str:
    """``region,score`` rows plus a ``focus,<region>`` line."""
    focus = recommend_focus(profile)
    lines = [
        "region,score",
        f"initial,{profile.score_initial!r}",
        f"middle,{profile.score_middle!r}",
        f"final,{profile.score_final!r}",
        f"focus,{focus.value}",
    ]
    return "\n".join(lines) + "\n"
