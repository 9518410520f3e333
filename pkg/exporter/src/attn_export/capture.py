"""Capture decoder self-attention during sampling and export an IAAM map.

The capture harness drives the model through a staggered-window sampling
loop (clean buffer frames in front, strictly increasing noise levels
behind, one deterministic update per frame per step), which is the
inference regime the downstream analyzer assumes. Every hooked
self-attention module is patched to return its per-head weights; the
matrices are averaged over heads, hooked layers, and sampling steps in a
canonical order, and the result is written in the IAAM interchange
format:

    magic "IAAM", then u32 LE version=1, Q, K, then Q*K f32 LE row-major

A sidecar CSV (``<out>.audit.csv``) logs the shape of every captured
matrix plus the capture metadata, including the buffer length the
analyzer should exclude.
"""

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .model import TinyAudioDenoiser, resolve_model

IAAM_MAGIC = b"IAAM"
IAAM_VERSION = 1


class NoHookedModules(RuntimeError):
    """The requested decoder blocks contain no self-attention to hook."""


class ShapeAuditError(RuntimeError):
    """A captured attention matrix is not square over the frame axis."""


@dataclass
class CaptureConfig:
    model: str = "tiny"
    prompt: str = ""
    steps: int = 8
    seed: int = 0
    buffer_len: int = 4
    window: int = 24
    blocks: tuple[str, ...] | None = None  # None hooks every decoder self-attention
    out: Path = Path("map.iaam")
    per_step_dir: Path | None = None
    meta: dict = field(default_factory=dict)


def write_iaam(path, scores: np.ndarray) -> None:
    scores = np.asarray(scores, dtype=np.float32)
    q, k = scores.shape
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sIII", IAAM_MAGIC, IAAM_VERSION, q, k))
        fh.write(scores.astype("<f4").tobytes())


def _attention_modules(model: nn.Module, blocks) -> dict[str, nn.MultiheadAttention]:
    chosen = {}
    for name, module in model.named_modules():
        if not isinstance(module, nn.MultiheadAttention):
            continue
        if blocks is None:
            if name.startswith("decoder"):
                chosen[name] = module
        elif name in blocks:
            chosen[name] = module
    if not chosen:
        raise NoHookedModules("no self-attention modules matched the hook request")
    return chosen


class _WeightTap:
    """Patch MultiheadAttention forwards to always yield per-head weights."""

    def __init__(self, modules: dict[str, nn.MultiheadAttention]):
        self.modules = modules
        self.records: list[tuple[str, torch.Tensor]] = []
        self._originals = {}

    def __enter__(self):
        for name, module in self.modules.items():
            original = module.forward

            def wrapped(*args, _original=original, _name=name, **kwargs):
                kwargs["need_weights"] = True
                kwargs["average_attn_weights"] = False
                out, weights = _original(*args, **kwargs)
                self.records.append((_name, weights.detach()))
                return out, weights

            self._originals[name] = original
            module.forward = wrapped
        return self

    def __exit__(self, *exc):
        for name, module in self.modules.items():
            module.forward = self._originals[name]

    def drain(self) -> list[tuple[str, torch.Tensor]]:
        records, self.records = self.records, []
        return records


def _staggered_sampling(model: TinyAudioDenoiser, config: CaptureConfig, tap: _WeightTap):
    """One streaming window driven for config.steps updates."""
    spec = model.spec
    n = config.window - config.buffer_len
    if n < 2:
        raise ShapeAuditError("window must exceed buffer_len by at least 2 frames")
    beta = torch.linspace(1e-4, 2e-2, spec.timesteps, dtype=torch.float64)
    alpha_bar = torch.cumprod(1.0 - beta, dim=0)

    ladder = torch.round(torch.linspace(spec.timesteps, 1, n)).long()  # descending
    taus = torch.cat([torch.zeros(config.buffer_len, dtype=torch.long),
                      ladder.flip(0)])  # ascending noise along the window

    gen = torch.Generator().manual_seed(config.seed)
    z = torch.randn(1, spec.channels, config.window, spec.freq_bins, generator=gen)
    z[:, :, :config.buffer_len] *= 0.1  # pretend-clean context
    cond = model.embed_prompt(config.prompt)

    def ab(t: torch.Tensor) -> torch.Tensor:
        return alpha_bar[t.clamp(min=1) - 1].float()

    captured: list[tuple[int, str, torch.Tensor]] = []
    with torch.no_grad():
        for step in range(config.steps):
            eps = model(z, taus, cond)
            for name, weights in tap.drain():
                captured.append((step, name, weights))
            diag = z[:, :, config.buffer_len:]
            t_cur = taus[config.buffer_len:]
            t_next = torch.cat([torch.zeros(1, dtype=torch.long), t_cur[:-1]])
            a_cur = ab(t_cur)[None, None, :, None]
            e = eps[:, :, config.buffer_len:]
            x0 = (diag - torch.sqrt(1 - a_cur) * e) / torch.sqrt(a_cur)
            a_next = ab(t_next)[None, None, :, None]
            advanced = torch.sqrt(a_next) * x0 + torch.sqrt(1 - a_next) * e
            advanced[:, :, 0] = x0[:, :, 0]  # head frame reaches clean
            completed = advanced[:, :, 0]
            if config.buffer_len > 0:
                z[:, :, :config.buffer_len - 1] = z[:, :, 1:config.buffer_len].clone()
                z[:, :, config.buffer_len - 1] = completed
            z[:, :, config.buffer_len:-1] = advanced[:, :, 1:]
            z[:, :, -1] = torch.randn(
                1, spec.channels, spec.freq_bins, generator=gen
            )
    return captured


def _audit_and_average(captured, window: int):
    """Mean over heads, layers, steps; canonical (step, layer) order."""
    if not captured:
        raise NoHookedModules("sampling produced no attention records")
    per_key: dict[tuple[int, str], np.ndarray] = {}
    shapes = []
    for step, name, weights in captured:
        if weights.ndim != 4:
            raise ShapeAuditError(f"{name} step {step}: expected (B, H, Q, K) weights")
        b, heads, q, k = weights.shape
        shapes.append((step, name, heads, q, k))
        if q != k or q != window:
            raise ShapeAuditError(
                f"{name} step {step}: weights {q}x{k} are not square over the "
                f"{window}-frame window"
            )
        per_key[(step, name)] = weights[0].mean(dim=0).double().numpy()
    ordered = [per_key[key] for key in sorted(per_key)]
    return np.mean(ordered, axis=0), shapes


def capture(config: CaptureConfig) -> Path:
    """Run the capture and write the IAAM map plus its audit sidecar."""
    model = resolve_model(config.model)
    modules = _attention_modules(model, config.blocks)
    with _WeightTap(modules) as tap:
        captured = _staggered_sampling(model, config, tap)
    averaged, shapes = _audit_and_average(captured, config.window)

    out = Path(config.out)
    write_iaam(out, averaged)
    if config.per_step_dir is not None:
        per_dir = Path(config.per_step_dir)
        per_dir.mkdir(parents=True, exist_ok=True)
        for step in sorted({s for s, _, _ in captured}):
            step_maps = [
                w[0].mean(dim=0).double().numpy()
                for s, _, w in sorted(captured, key=lambda r: r[1])
                if s == step
            ]
            write_iaam(per_dir / f"step_{step:04d}.iaam", np.mean(step_maps, axis=0))

    audit = out.with_name(out.name + ".audit.csv")
    with open(audit, "w", encoding="utf-8") as fh:
        fh.write(
            f"# model={config.model} steps={config.steps} seed={config.seed} "
            f"buffer_len={config.buffer_len} window={config.window} "
            f"prompt={config.prompt!r}\n"
        )
        fh.write("step,layer,heads,q,k\n")
        for step, name, heads, q, k in shapes:
            fh.write(f"{step},{name},{heads},{q},{k}\n")
    return out
