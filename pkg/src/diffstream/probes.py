"""Stream statistics against Gaussian-process targets, plus memory reports.

The analytic targets for a declared process are closed form: marginal
mean mu and variance sigma^2, lag-k autocorrelation rho^k, and mean
squared adjacent-frame difference 2 sigma^2 (1 - rho) inside one
realisation versus 2 sigma^2 across independent realisations. Boundary
statistics compare the adjacent-frame differences that straddle window
seams against all the others.
"""

from dataclasses import dataclass

import numpy as np
import scipy.signal

from .denoise import GaussianProcessSpec, GPMode
from .errors import EmptyStream, InvalidCount
from .fifo import StreamConfig, generate_batch, generate_stream
from .runstats import RunStats
from .streamio import FrameStream, NullSink


@dataclass(frozen=True)
class ChannelStats:
    channel: int
    mean: float
    variance: float
    autocorr: tuple[float, ...]
    msd_interior: float
    msd_boundary: float | None
    boundary_interior_ratio: float | None


@dataclass(frozen=True)
class StatsReport:
    per_channel: tuple[ChannelStats, ...]
    target_mean: float
    target_variance: float
    target_autocorr: tuple[float, ...]
    target_msd_interior: float
    target_msd_boundary: float

    def to_csv(self) -> str:
        lines = ["metric,channel,value,target"]
        for ch in self.per_channel:
            lines.append(f"mean,{ch.channel},{ch.mean!r},{self.target_mean!r}")
            lines.append(f"variance,{ch.channel},{ch.variance!r},{self.target_variance!r}")
            for k, (r, t) in enumerate(zip(ch.autocorr, self.target_autocorr), start=1):
                lines.append(f"lag{k}_autocorr,{ch.channel},{r!r},{t!r}")
            lines.append(
                f"msd_interior,{ch.channel},{ch.msd_interior!r},{self.target_msd_interior!r}"
            )
            if ch.msd_boundary is not None:
                lines.append(
                    f"msd_boundary,{ch.channel},{ch.msd_boundary!r},{self.target_msd_boundary!r}"
                )
                lines.append(
                    f"boundary_interior_ratio,{ch.channel},{ch.boundary_interior_ratio!r},"
                )
        return "\n".join(lines) + "\n"


def stream_stats(
    stream,
    spec: GaussianProcessSpec,
    boundaries=None,
    max_lag: int = 5,
) -> StatsReport:
    """Estimate per-channel moments of a (C, frames, Fr) stream.

    `boundaries` lists frame indices that start a new window; the
    adjacent-frame squared differences at those seams are reported
    separately from the interior ones.
    """
    values = stream.values if isinstance(stream, FrameStream) else np.asarray(stream)
    if values.ndim != 3 or values.shape[1] < 2:
        raise EmptyStream("need a (C, frames, Fr) stream of at least 2 frames")
    C, L, Fr = values.shape
    boundary_idx = np.asarray(sorted(boundaries), dtype=int) if boundaries else None
    if boundary_idx is not None and (
        boundary_idx.size and (boundary_idx[0] < 1 or boundary_idx[-1] >= L)
    ):
        raise InvalidCount(f"boundaries must lie in [1..{L - 1}]")

    per_channel = []
    for c in range(C):
        x = values[c].astype(np.float64)
        m = float(x.mean())
        var = float(x.var())
        xm = x - m
        denom = float((xm * xm).sum())
        acf = []
        for k in range(1, max_lag + 1):
            num = float((xm[:-k, :] * xm[k:, :]).sum())
            acf.append(num / denom if denom > 0 else 0.0)
        d2 = np.square(np.diff(x, axis=0)).mean(axis=1)  # (L-1,) per adjacent pair
        if boundary_idx is not None and boundary_idx.size:
            mask = np.zeros(L - 1, dtype=bool)
            mask[boundary_idx - 1] = True
            msd_boundary = float(d2[mask].mean())
            msd_interior = float(d2[~mask].mean())
            ratio = msd_boundary / msd_interior if msd_interior > 0 else float("inf")
        else:
            msd_boundary = None
            msd_interior = float(d2.mean())
            ratio = None
        per_channel.append(ChannelStats(
            channel=c, mean=m, variance=var, autocorr=tuple(acf),
            msd_interior=msd_interior, msd_boundary=msd_boundary,
            boundary_interior_ratio=ratio,
        ))

    rho = spec.rho
    return StatsReport(
        per_channel=tuple(per_channel),
        target_mean=spec.mean,
        target_variance=spec.variance,
        target_autocorr=tuple(rho ** k for k in range(1, max_lag + 1)),
        target_msd_interior=2.0 * spec.variance * (1.0 - rho),
        target_msd_boundary=2.0 * spec.variance,
    )


def simulate_gp(
    spec: GaussianProcessSpec,
    n_frames: int,
    seed: int = 0,
    channels: int = 1,
    freq_bins: int = 1,
) -> np.ndarray:
    """Draw directly from the declared process; the reference for estimators.

    AR1 uses the stationary recursion x_t = mu + rho (x_{t-1} - mu) + w_t
    with w_t ~ N(0, sigma^2 (1 - rho^2)) and a stationary start.
    """
    rng = np.random.default_rng(seed)
    sd = np.sqrt(spec.variance)
    if spec.mode is GPMode.FRAME_LOCAL or spec.rho == 0.0:
        return spec.mean + sd * rng.standard_normal((channels, n_frames, freq_bins))
    innov = rng.standard_normal((channels, n_frames, freq_bins))
    innov *= sd * np.sqrt(1.0 - spec.rho ** 2)
    innov[:, 0, :] = sd * rng.standard_normal((channels, freq_bins))
    x = scipy.signal.lfilter([1.0], [1.0, -spec.rho], innov, axis=1)
    return spec.mean + x


def run_for_stats(cfg: StreamConfig, N: int) -> RunStats:
    """Execute one run for its RunStats only, discarding frames."""
    sink = NullSink()
    if cfg.mode == "fifo":
        return generate_stream(N, cfg, sink)
    if cfg.mode == "batch":
        return generate_batch(N, cfg, sink)
    raise InvalidCount(f"memory probe supports fifo and batch modes, got {cfg.mode!r}")


def memory_report(runs, process_rss: bool = False) -> str:
    """CSV memory report over (cfg, N) pairs.

    One row per run with its mode, N and accounted peak bytes; the
    ``constant`` verdict is true iff all fifo rows report identical
    peaks. ``process_rss=True`` appends a process-level RSS column for
    plotting; it plays no part in the verdict.
    """
    runs = list(runs)
    if not runs:
        raise InvalidCount("memory report needs at least one run")
    rows = []
    for cfg, N in runs:
        stats = run_for_stats(cfg, N)
        rss = _process_rss() if process_rss else None
        rows.append((cfg.mode, N, stats.peak_bytes, rss))
    fifo_peaks = [p for mode, _, p, _ in rows if mode == "fifo"]
    constant = all(p == fifo_peaks[0] for p in fifo_peaks) if fifo_peaks else True
    header = "mode,frames,peak_bytes,constant"
    if process_rss:
        header += ",rss_bytes"
    lines = [header]
    for mode, N, peak, rss in rows:
        line = f"{mode},{N},{peak},{str(constant).lower()}"
        if process_rss:
            line += f",{rss if rss is not None else ''}"
        lines.append(line)
    return "\n".join(lines) + "\n"


def _process_rss() -> int | None:
    try:
        import psutil
    except ImportError:
        return None
    return psutil.Process().memory_info().rss
