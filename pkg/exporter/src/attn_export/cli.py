"""attn-export command line: dump an averaged attention map from a model."""

import argparse
import sys
from pathlib import Path

from .capture import CaptureConfig, NoHookedModules, ShapeAuditError, capture


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="attn-export",
        description="Hook decoder self-attention during sampling and write an IAAM map.",
    )
    p.add_argument("--model", required=True,
                   help="'tiny', 'tiny:<seed>', or a checkpoint path")
    p.add_argument("--prompt", required=True)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--steps", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--buffer-len", type=int, default=4)
    p.add_argument("--window", type=int, default=24)
    p.add_argument("--blocks", default=None,
                   help="comma-separated module names; default: all decoder self-attention")
    p.add_argument("--per-step-dir", type=Path, default=None,
                   help="also dump one IAAM per sampling step")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    config = CaptureConfig(
        model=args.model,
        prompt=args.prompt,
        steps=args.steps,
        seed=args.seed,
        buffer_len=args.buffer_len,
        window=args.window,
        blocks=tuple(args.blocks.split(",")) if args.blocks else None,
        out=args.out,
        per_step_dir=args.per_step_dir,
    )
    try:
        out = capture(config)
    except (NoHookedModules, ShapeAuditError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    print(f"wrote {out} and {out}.audit.csv")
    return 0


if __name__ == "__main__":
    sys.exit(main())
