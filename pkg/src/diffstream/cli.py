"""Command line surface.

Commands: generate, schedule, analyze-attn, profile-mem, stats. Flags
mirror the library parameter names one-to-one; an optional key=value
config file supplies defaults and explicit flags win on conflict.

Exit codes: 0 success, 2 usage error, 3 runtime error.
"""

import argparse
import sys
from dataclasses import replace

from .attention import load_attention_map, profile_report_csv, region_scores
from .denoise import GaussianProcessSpec
from .errors import DiffStreamError, InvalidCount
from .fifo import StreamConfig, generate_batch, generate_concat, generate_stream
from .plan import (
    DEFAULT_BASE_STEPS,
    DEFAULT_SKIP_FACTOR,
    SamplingRegion,
    curved_from_profile,
    curved_schedule,
    equally_spaced,
    export_schedule_csv,
)
from .probes import memory_report, stream_stats
from .runstats import write_runstats_csv
from .schedule import (
    DEFAULT_BETA_END,
    DEFAULT_BETA_START,
    DEFAULT_M,
    build_linear_schedule,
)
from .streamio import FrameStreamWriter, emit_pgm, read_stream

_REGIONS = {r.value: r for r in SamplingRegion}


def _fractions(text: str) -> tuple[float, float, float]:
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("fractions must be three comma-separated numbers")
    return tuple(parts)


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(p) for p in text.split(",") if p)


def _add_noise_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--M", type=int, default=DEFAULT_M, help="diffusion timestep count")
    p.add_argument("--beta-start", type=float, default=DEFAULT_BETA_START)
    p.add_argument("--beta-end", type=float, default=DEFAULT_BETA_END)


def _add_plan_opts(p: argparse.ArgumentParser, flag: str) -> None:
    p.add_argument(
        flag, dest="preset", default="final",
        choices=["equal", "initial", "middle", "final", "auto"],
    )
    p.add_argument("--steps", type=int, default=None,
                   help="step count for the equal preset (default: base steps)")
    p.add_argument("--base-steps", type=int, default=DEFAULT_BASE_STEPS)
    p.add_argument("--P", type=int, default=DEFAULT_SKIP_FACTOR, help="skip factor")
    p.add_argument("--fractions", type=_fractions, default=(1 / 3, 1 / 3, 1 / 3))
    p.add_argument("--attn", default=None, help="IAAM map for the auto preset")
    p.add_argument("--attn-buffer-len", type=int, default=0)


def _add_gp_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--denoiser", default="framelocal", choices=["framelocal", "ar1"])
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--var", type=float, default=1.0)
    p.add_argument("--rho", type=float, default=0.0)


def _add_run_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--channels", type=int, default=1)
    p.add_argument("--freq-bins", type=int, default=4)
    p.add_argument("--buffer-len", type=int, default=None)
    p.add_argument("--buffer-mode", default="sliding", choices=["sliding", "static"])


def _gp_spec(args) -> GaussianProcessSpec:
    if args.denoiser == "ar1":
        return GaussianProcessSpec.ar1(args.mu, args.var, args.rho)
    return GaussianProcessSpec.frame_local(args.mu, args.var)


def _build_plan(args):
    if args.preset == "equal":
        n = args.steps if args.steps is not None else args.base_steps
        return equally_spaced(args.M, n)
    if args.preset == "auto":
        if not args.attn:
            raise InvalidCount("the auto preset needs --attn <map.iaam>")
        amap = load_attention_map(args.attn)
        profile = region_scores(amap, args.attn_buffer_len)
        return curved_from_profile(
            profile, args.M, args.P, args.fractions, base_steps=args.base_steps
        )
    return curved_schedule(
        args.M, args.base_steps, _REGIONS[args.preset], args.P, args.fractions
    )


def _build_config(args, mode: str) -> StreamConfig:
    return StreamConfig(
        tsched=_build_plan(args),
        sched=build_linear_schedule(args.M, args.beta_start, args.beta_end),
        gp=_gp_spec(args),
        seed=args.seed,
        buffer_len=args.buffer_len,
        buffer_mode=args.buffer_mode,
        channels=args.channels,
        freq_bins=args.freq_bins,
        mode=mode,
    )


def cmd_generate(args) -> int:
    cfg = _build_config(args, args.mode)
    with FrameStreamWriter(args.out, args.channels, args.freq_bins) as sink:
        if args.mode == "fifo":
            stats = generate_stream(args.frames, cfg, sink)
        elif args.mode == "batch":
            stats = generate_batch(args.frames, cfg, sink)
        else:
            stats = generate_concat(args.frames, args.window, cfg, sink)
    stats_path = args.stats_out or (args.out + ".stats.csv")
    write_runstats_csv(stats, stats_path)
    if args.pgm:
        emit_pgm(read_stream(args.out), args.pgm)
    print(f"wrote {args.frames} frames to {args.out} "
          f"(calls={stats.denoiser_calls}, peak_bytes={stats.peak_bytes})")
    return 0


def cmd_schedule(args) -> int:
    tsched = _build_plan(args)
    if args.out:
        export_schedule_csv(tsched, args.out)
    else:
        sys.stdout.write("index,tau,region\n")
        for k, (tau, region) in enumerate(zip(tsched.steps, tsched.regions), start=1):
            sys.stdout.write(f"{k},{tau},{region.value}\n")
    focus = tsched.focus.value if tsched.focus else "none"
    notes = "".join(f" {k}" for k, v in tsched.meta.items() if v)
    print(f"total steps: {len(tsched)} (focus: {focus}{notes})", file=sys.stderr)
    return 0


def cmd_analyze_attn(args) -> int:
    amap = load_attention_map(args.map)
    profile = region_scores(amap, args.buffer_len)
    report = profile_report_csv(profile)
    if args.out:
        with open(args.out, "w", encoding="ascii") as fh:
            fh.write(report)
    else:
        sys.stdout.write(report)
    return 0


def cmd_profile_mem(args) -> int:
    base = _build_config(args, "fifo")
    runs = [(replace(base, mode="fifo"), n) for n in args.fifo_frames]
    runs += [(replace(base, mode="batch"), n) for n in args.batch_frames]
    if not runs:
        raise InvalidCount("profile-mem needs at least one of --fifo-frames/--batch-frames")
    report = memory_report(runs, process_rss=args.process_rss)
    if args.out:
        with open(args.out, "w", encoding="ascii") as fh:
            fh.write(report)
    else:
        sys.stdout.write(report)
    return 0


def cmd_stats(args) -> int:
    stream = read_stream(args.stream)
    boundaries = list(args.boundaries) if args.boundaries else None
    if boundaries is None and args.window:
        boundaries = list(range(args.window, stream.frames, args.window))
    report = stream_stats(stream, _gp_spec(args), boundaries, max_lag=args.max_lag)
    text = report.to_csv()
    if args.out:
        with open(args.out, "w", encoding="ascii") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(
        prog="diffstream",
        description="Constant-memory streaming diffusion sampling with oracle denoisers.",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    registry: dict[str, argparse.ArgumentParser] = {}

    g = subs.add_parser("generate", help="generate a frame stream")
    g.add_argument("--mode", default="fifo", choices=["fifo", "batch", "concat"])
    g.add_argument("--frames", type=int, required=True)
    g.add_argument("--window", type=int, default=64, help="concat window size")
    _add_plan_opts(g, "--schedule")
    _add_noise_opts(g)
    _add_gp_opts(g)
    _add_run_opts(g)
    g.add_argument("--out", required=True, help="IAFS output path")
    g.add_argument("--stats-out", default=None, help="RunStats CSV (default <out>.stats.csv)")
    g.add_argument("--pgm", default=None, help="also render the stream as a PGM image")
    g.add_argument("--config", default=None)
    g.set_defaults(func=cmd_generate)
    registry["generate"] = g

    s = subs.add_parser("schedule", help="print or export a timestep schedule")
    _add_plan_opts(s, "--preset")
    s.add_argument("--M", type=int, default=DEFAULT_M)
    s.add_argument("--out", default=None, help="CSV path (default: stdout)")
    s.add_argument("--config", default=None)
    s.set_defaults(func=cmd_schedule)
    registry["schedule"] = s

    a = subs.add_parser("analyze-attn", help="region scores and focus for an IAAM map")
    a.add_argument("--map", required=True)
    a.add_argument("--buffer-len", type=int, default=0)
    a.add_argument("--out", default=None)
    a.add_argument("--config", default=None)
    a.set_defaults(func=cmd_analyze_attn)
    registry["analyze-attn"] = a

    m = subs.add_parser("profile-mem", help="peak-memory report across run lengths")
    m.add_argument("--fifo-frames", type=_int_list, default=(128, 1024, 16384))
    m.add_argument("--batch-frames", type=_int_list, default=(128, 256))
    _add_plan_opts(m, "--schedule")
    _add_noise_opts(m)
    _add_gp_opts(m)
    _add_run_opts(m)
    m.add_argument("--process-rss", action="store_true")
    m.add_argument("--out", default=None)
    m.add_argument("--config", default=None)
    m.set_defaults(func=cmd_profile_mem)
    registry["profile-mem"] = m

    t = subs.add_parser("stats", help="stream statistics against GP targets")
    t.add_argument("--stream", required=True)
    _add_gp_opts(t)
    t.add_argument("--boundaries", type=_int_list, default=None)
    t.add_argument("--window", type=int, default=None,
                   help="derive boundaries from a concat window size")
    t.add_argument("--max-lag", type=int, default=5)
    t.add_argument("--out", default=None)
    t.add_argument("--config", default=None)
    t.set_defaults(func=cmd_stats)
    registry["stats"] = t

    return parser, registry


def _load_config_defaults(path: str, sub: argparse.ArgumentParser) -> dict:
    by_dest = {a.dest: a for a in sub._actions}
    defaults = {}
    with open(path, "r", encoding="ascii") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            dest = key.strip().replace("-", "_")
            action = by_dest.get(dest)
            if action is None:
                raise InvalidCount(f"unknown config key {key.strip()!r}")
            value = value.strip()
            if isinstance(action, argparse._StoreTrueAction):
                defaults[dest] = value.lower() in ("1", "true", "yes")
            elif action.type is not None:
                defaults[dest] = action.type(value)
            else:
                defaults[dest] = value
    return defaults


def main(argv=None) -> int:
    parser, registry = build_parser()
    args = parser.parse_args(argv)
    config = getattr(args, "config", None)
    if config:
        try:
            defaults = _load_config_defaults(config, registry[args.command])
        except (OSError, DiffStreamError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 3
        registry[args.command].set_defaults(**defaults)
        args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DiffStreamError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
