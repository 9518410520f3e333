"""Stream statistics estimators and the memory report."""

import numpy as np
import pytest

from diffstream import (
    GaussianProcessSpec,
    InvalidCount,
    SamplingRegion,
    StreamConfig,
    build_linear_schedule,
    curved_schedule,
    equally_spaced,
    memory_report,
    simulate_gp,
    stream_stats,
)

AR1 = GaussianProcessSpec.ar1(0.0, 1.0, 0.9)


def test_direct_ar1_simulation_recovers_lag_one():
    x = simulate_gp(AR1, 100_000, seed=61)
    report = stream_stats(x, AR1)
    ch = report.per_channel[0]
    assert abs(ch.autocorr[0] - 0.9) <= 0.01
    assert ch.autocorr[1] == pytest.approx(0.81, abs=0.02)
    assert report.target_autocorr[0] == 0.9


def test_iid_stream_has_no_lag_one_correlation():
    spec = GaussianProcessSpec.frame_local(0.0, 1.0)
    x = simulate_gp(spec, 100_000, seed=62)
    report = stream_stats(x, spec)
    assert abs(report.per_channel[0].autocorr[0]) <= 0.02


def test_interior_msd_matches_closed_form():
    x = simulate_gp(AR1, 100_000, seed=63)
    report = stream_stats(x, AR1)
    target = 2.0 * 1.0 * (1.0 - 0.9)
    assert report.target_msd_interior == pytest.approx(target)
    assert report.per_channel[0].msd_interior == pytest.approx(target, rel=0.05)


def test_ar1_mean_and_variance_targets():
    spec = GaussianProcessSpec.ar1(1.5, 2.0, 0.6)
    x = simulate_gp(spec, 200_000, seed=64)
    report = stream_stats(x, spec)
    ch = report.per_channel[0]
    assert ch.mean == pytest.approx(1.5, abs=0.05)
    assert ch.variance == pytest.approx(2.0, rel=0.05)


def test_estimator_converges_with_length():
    """Doubling the stream keeps the estimate inside its shrinking 3-SE band."""
    rho = 0.8
    spec = GaussianProcessSpec.ar1(0.0, 1.0, rho)
    for seed in (65, 66, 67):
        for n in (20_000, 40_000, 80_000):
            x = simulate_gp(spec, n, seed=seed)
            est = stream_stats(x, spec).per_channel[0].autocorr[0]
            stderr = np.sqrt((1.0 - rho * rho) / n)
            assert abs(est - rho) <= 3 * stderr


def test_boundary_splitting():
    # two independent halves stitched at frame 50
    rng = np.random.default_rng(68)
    x = rng.standard_normal((1, 100, 8)).astype(np.float32)
    spec = GaussianProcessSpec.frame_local(0.0, 1.0)
    report = stream_stats(x, spec, boundaries=[50])
    ch = report.per_channel[0]
    assert ch.msd_boundary is not None
    assert ch.boundary_interior_ratio == pytest.approx(
        ch.msd_boundary / ch.msd_interior
    )
    with pytest.raises(InvalidCount):
        stream_stats(x, spec, boundaries=[0])


def test_csv_report_shape():
    x = simulate_gp(AR1, 500, seed=69, channels=2)
    report = stream_stats(x, AR1, boundaries=[100, 200], max_lag=3)
    lines = report.to_csv().strip().splitlines()
    assert lines[0] == "metric,channel,value,target"
    # per channel: mean, variance, 3 lags, interior, boundary, ratio
    assert len(lines) == 1 + 2 * 8


def small_cfg(mode):
    sched = build_linear_schedule(60, 1e-3, 4e-2)
    return StreamConfig(
        tsched=equally_spaced(60, 12), sched=sched,
        gp=GaussianProcessSpec.frame_local(0.0, 1.0),
        seed=70, buffer_len=3, freq_bins=2, mode=mode,
    )


def test_memory_report_verdict_and_scaling():
    runs = [(small_cfg("fifo"), n) for n in (64, 256, 1024)]
    runs += [(small_cfg("batch"), n) for n in (64, 128)]
    text = memory_report(runs)
    lines = text.strip().splitlines()
    assert lines[0] == "mode,frames,peak_bytes,constant"
    rows = [line.split(",") for line in lines[1:]]
    fifo_peaks = [int(r[2]) for r in rows if r[0] == "fifo"]
    batch_peaks = [int(r[2]) for r in rows if r[0] == "batch"]
    assert len(set(fifo_peaks)) == 1
    assert all(r[3] == "true" for r in rows)
    assert batch_peaks[1] / batch_peaks[0] == pytest.approx(2.0, abs=0.05)


def test_memory_report_single_run_trivially_constant():
    text = memory_report([(small_cfg("fifo"), 32)])
    assert text.strip().splitlines()[1].endswith("true")


def test_fifo_with_curved_schedule_runs_in_memory_report():
    sched = build_linear_schedule(100, 1e-3, 3e-2)
    cfg = StreamConfig(
        tsched=curved_schedule(100, 50, SamplingRegion.FINAL, 3),
        sched=sched, gp=GaussianProcessSpec.frame_local(0.0, 1.0),
        seed=71, freq_bins=2, mode="fifo",
    )
    text = memory_report([(cfg, 16), (cfg, 64)])
    assert "true" in text
