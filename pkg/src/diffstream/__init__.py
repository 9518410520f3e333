"""diffstream: constant-memory streaming diffusion sampling.

A fixed-size queue of latent frames at strictly increasing noise levels
is denoised one schedule index per step, emitting one finished frame and
absorbing one fresh noise frame, so arbitrarily long streams cost the
memory of a single window. Timestep schedules may be equally spaced or
curved around the sampling region that self-attention analysis scores
highest. Closed-form Gaussian-process denoisers stand in for a trained
model, making the sampler's statistical behaviour exactly checkable.
"""

from .attention import (
    AttentionMap,
    AttentionProfile,
    key_region_bounds,
    load_attention_map,
    profile_report_csv,
    recommend_focus,
    region_scores,
    write_attention_map,
)
from .denoise import (
    Denoiser,
    FrameWindow,
    GaussianProcessDenoiser,
    GaussianProcessSpec,
    GPMode,
    batch_sample,
    ddim_step,
    gp_predict_eps,
    sample_from_noise,
)
from .errors import *  # noqa: F401,F403
from .fifo import (
    DiagonalQueue,
    StreamConfig,
    fifo_step,
    generate_batch,
    generate_concat,
    generate_stream,
    init_queue,
)
from .plan import (
    RegionBounds,
    SamplingRegion,
    TimestepSchedule,
    curved_from_profile,
    curved_schedule,
    equally_spaced,
    export_schedule_csv,
    focus_from_scores,
    import_schedule_csv,
    region_bounds,
    region_focused,
    split_sizes,
)
from .probes import StatsReport, memory_report, simulate_gp, stream_stats
from .rng import derive_rng
from .runstats import AllocationMeter, RunStats, write_runstats_csv
from .schedule import (
    CLEAN,
    NoiseSchedule,
    build_linear_schedule,
    forward_perturb,
)
from .streamio import (
    ArraySink,
    FrameStream,
    FrameStreamWriter,
    NullSink,
    emit_pgm,
    read_stream,
    write_stream,
)

__version__ = "0.1.0"
