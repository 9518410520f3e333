"""Constant-memory streaming generation over a diagonal frame queue.

The queue window is one array of b + n frames:

    index 0 .. b-1      buffer: CLEAN frames, context only, never perturbed
    index b .. b+n-1    diagonal position j = 1..n holding the frame at
                        timestep t_{n+1-j}; timesteps increase along the
                        window, so index b is nearly clean (tau = t_n = 1)
                        and index b+n-1 is pure noise (tau = t_1 = M)

One step makes a single noise prediction over the whole window, advances
every diagonal frame one schedule index, dequeues the head frame (now
CLEAN) as output, slides it into the buffer, and enqueues a fresh
standard-normal frame at the tail. The per-frame timestep vector is
therefore invariant across steps, and total storage never depends on how
many frames have been produced.

A queue instance belongs to one worker at a time; completed frames are
emitted immediately and never accumulated by the engine.
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .denoise import (
    Denoiser,
    FrameWindow,
    GaussianProcessDenoiser,
    GaussianProcessSpec,
    advance_frames,
    batch_sample,
)
from .errors import InvalidCount, ShapeMismatch, SinkFailure
from .plan import TimestepSchedule
from .rng import STREAM_ENQUEUE, STREAM_RENOISE, derive_rng
from .runstats import AllocationMeter, RunStats
from .schedule import CLEAN, NoiseSchedule

BUFFER_MODES = ("sliding", "static")


@dataclass
class DiagonalQueue:
    """Fixed-size window of frames at strictly increasing noise levels."""

    values: np.ndarray          # (C, b + n, Fr) float32
    taus: np.ndarray            # (b + n,) int64, CLEAN prefix of length b
    buffer_len: int
    tsched: TimestepSchedule
    produced: int = 0

    @property
    def length(self) -> int:
        return self.values.shape[1]

    @property
    def diagonal_len(self) -> int:
        return self.length - self.buffer_len

    @property
    def diagonal_taus(self) -> np.ndarray:
        return self.taus[self.buffer_len:]

    def window(self, condition: np.ndarray | None = None) -> FrameWindow:
        cond = condition if condition is not None else np.zeros(0, dtype=np.float32)
        return FrameWindow(self.values, self.taus, cond)

    def validate(self) -> None:
        """Check the structural invariants; test support."""
        b, n = self.buffer_len, self.diagonal_len
        if n != len(self.tsched):
            raise InvalidCount(f"diagonal holds {n} frames for a {len(self.tsched)}-step plan")
        if not np.all(self.taus[:b] == CLEAN):
            raise InvalidCount("buffer frames must be CLEAN")
        diag = self.taus[b:]
        if not np.all(np.diff(diag) > 0):
            raise InvalidCount("diagonal timesteps must strictly increase")
        if sorted(diag.tolist()) != sorted(self.tsched.steps):
            raise InvalidCount("diagonal timesteps must be exactly the schedule steps")
        if not np.all(np.isfinite(self.values)):
            raise ShapeMismatch("queue values must be finite")


@dataclass
class StreamConfig:
    """Everything a generation run needs besides its length."""

    tsched: TimestepSchedule
    sched: NoiseSchedule
    gp: GaussianProcessSpec
    seed: int = 0
    buffer_len: int | None = None
    buffer_mode: str = "sliding"
    channels: int = 1
    freq_bins: int = 1
    condition: np.ndarray | None = None
    mode: str = "fifo"

    def __post_init__(self):
        if self.buffer_mode not in BUFFER_MODES:
            raise InvalidCount(f"buffer_mode must be one of {BUFFER_MODES}")

    @property
    def resolved_buffer_len(self) -> int:
        if self.buffer_len is None:
            return math.ceil(len(self.tsched) / 4)
        return self.buffer_len

    def make_denoiser(self) -> Denoiser:
        return GaussianProcessDenoiser(self.gp)


def init_queue(
    tsched: TimestepSchedule,
    buffer_len: int,
    den: Denoiser,
    sched: NoiseSchedule,
    condition: np.ndarray | None = None,
    seed: int = 0,
    channels: int = 1,
    freq_bins: int = 1,
) -> DiagonalQueue:
    """Prime a queue: b clean frames plus n frames re-noised onto the diagonal.

    b + n primer frames are drawn by a batch run over the full plan; the
    first b stay clean as the buffer, and diagonal position j is re-noised
    from its primer frame to timestep t_{n+1-j} with fresh seeded noise.
    """
    if buffer_len < 0:
        raise InvalidCount(f"buffer_len must be >= 0, got {buffer_len}")
    n = len(tsched)
    primer = batch_sample(
        buffer_len + n, tsched, den, sched, condition,
        seed=seed, channels=channels, freq_bins=freq_bins,
    )
    taus = np.concatenate([
        np.full(buffer_len, CLEAN, dtype=np.int64),
        np.asarray(tsched.steps[::-1], dtype=np.int64),
    ])
    noise = derive_rng(seed, STREAM_RENOISE).standard_normal(
        (channels, n, freq_bins), dtype=np.float32
    )
    diag_ab = sched.alpha_bar_at(taus[buffer_len:])
    values = primer.astype(np.float32, copy=True)
    values[:, buffer_len:, :] = (
        np.sqrt(diag_ab)[None, :, None] * primer[:, buffer_len:, :].astype(np.float64)
        + np.sqrt(1.0 - diag_ab)[None, :, None] * noise.astype(np.float64)
    ).astype(np.float32)
    return DiagonalQueue(values=values, taus=taus, buffer_len=buffer_len, tsched=tsched)


def fifo_step(
    q: DiagonalQueue,
    den: Denoiser,
    sched: NoiseSchedule,
    condition: np.ndarray | None,
    rng: np.random.Generator,
    buffer_mode: str = "sliding",
    meter: AllocationMeter | None = None,
) -> tuple[DiagonalQueue, np.ndarray]:
    """Advance the queue one step; returns the queue and the completed frame.

    The queue is updated in place: one window-wide noise prediction, one
    schedule-index advance per diagonal frame, dequeue of the clean head,
    enqueue of a fresh noise frame at the tail. The timestep vector (and
    hence the timestep multiset) is untouched.
    """
    b = q.buffer_len
    eps = den.predict_eps(q.window(condition), sched)
    taus_cur = q.taus[b:]
    taus_next = np.concatenate([[CLEAN], taus_cur[:-1]])
    newdiag = advance_frames(q.values[:, b:, :], eps[:, b:, :], taus_cur, taus_next, sched)
    completed = newdiag[:, 0, :].copy()
    fresh = rng.standard_normal((q.values.shape[0], q.values.shape[2]), dtype=np.float32)
    if meter is not None:
        meter.pulse(eps.nbytes + newdiag.nbytes + completed.nbytes + fresh.nbytes)
    if b > 0 and buffer_mode == "sliding":
        q.values[:, :b - 1, :] = q.values[:, 1:b, :]
        q.values[:, b - 1, :] = completed
    q.values[:, b:-1, :] = newdiag[:, 1:, :]
    q.values[:, -1, :] = fresh
    q.produced += 1
    return q, completed


def generate_stream(N: int, cfg: StreamConfig, sink) -> RunStats:
    """Produce `N` frames in `N` steps, writing each completed frame to `sink`.

    Exactly one denoiser call per frame. Peak accounted memory covers the
    queue arrays plus the per-step transients and is independent of `N`.
    """
    if N < 1:
        raise InvalidCount(f"N must be >= 1, got {N}")
    t0 = time.perf_counter()
    den = cfg.make_denoiser()
    b = cfg.resolved_buffer_len
    q = init_queue(
        cfg.tsched, b, den, cfg.sched, cfg.condition,
        seed=cfg.seed, channels=cfg.channels, freq_bins=cfg.freq_bins,
    )
    meter = AllocationMeter()
    meter.hold("queue_values", q.values.nbytes)
    meter.hold("queue_taus", q.taus.nbytes)
    rng = derive_rng(cfg.seed, STREAM_ENQUEUE)
    for step in range(N):
        q, frame = fifo_step(q, den, cfg.sched, cfg.condition, rng, cfg.buffer_mode, meter)
        try:
            sink.append(frame)
        except Exception as exc:
            raise SinkFailure(f"sink failed after {step} frames: {exc}", frames_written=step)
    wall_ms = (time.perf_counter() - t0) * 1000.0
    return RunStats(frames=N, denoiser_calls=N, peak_bytes=meter.peak, wall_ms=wall_ms)


def generate_batch(N: int, cfg: StreamConfig, sink) -> RunStats:
    """Uniform-timestep baseline: all `N` frames denoised together, then emitted."""
    if N < 1:
        raise InvalidCount(f"N must be >= 1, got {N}")
    t0 = time.perf_counter()
    den = cfg.make_denoiser()
    meter = AllocationMeter()
    frames = batch_sample(
        N, cfg.tsched, den, cfg.sched, cfg.condition,
        seed=cfg.seed, channels=cfg.channels, freq_bins=cfg.freq_bins, meter=meter,
    )
    try:
        sink.append(frames)
    except Exception as exc:
        raise SinkFailure(f"sink failed: {exc}", frames_written=0)
    wall_ms = (time.perf_counter() - t0) * 1000.0
    return RunStats(
        frames=N, denoiser_calls=len(cfg.tsched), peak_bytes=meter.peak, wall_ms=wall_ms
    )


def generate_concat(N: int, W: int, cfg: StreamConfig, sink) -> RunStats:
    """Concatenation baseline: independent uniform-timestep windows of `W` frames."""
    if N < 1 or W < 1:
        raise InvalidCount(f"need N >= 1 and W >= 1, got N={N}, W={W}")
    t0 = time.perf_counter()
    den = cfg.make_denoiser()
    meter = AllocationMeter()
    calls = 0
    boundaries: list[int] = []
    done = 0
    window_index = 0
    while done < N:
        k = min(W, N - done)
        frames = batch_sample(
            k, cfg.tsched, den, cfg.sched, cfg.condition,
            seed=cfg.seed, channels=cfg.channels, freq_bins=cfg.freq_bins,
            window_index=window_index, meter=meter,
        )
        calls += len(cfg.tsched)
        if done > 0:
            boundaries.append(done)
        try:
            sink.append(frames)
        except Exception as exc:
            raise SinkFailure(f"sink failed after {done} frames: {exc}", frames_written=done)
        done += k
        window_index += 1
    wall_ms = (time.perf_counter() - t0) * 1000.0
    return RunStats(
        frames=N, denoiser_calls=calls, peak_bytes=meter.peak, wall_ms=wall_ms,
        boundaries=tuple(boundaries),
    )
