"""A small text-to-audio style denoiser to instrument.

The network follows the usual latent-denoiser layout: a convolutional
encoder over the (channels, frames, freq) latent, a stack of decoder
blocks that self-attend over the frame axis, and a convolutional head
predicting the noise. It accepts a per-frame timestep vector (embedded
sinusoidally per frame) and a text condition produced by a byte-level
embedding stand-in for a text encoder.

Weights are deterministic in the seed, and checkpoints round-trip through
``save_checkpoint`` / ``load_model``, so captures are reproducible
without downloading anything.
"""

import math
from dataclasses import asdict, dataclass

import torch
from torch import nn


@dataclass(frozen=True)
class ModelSpec:
    channels: int = 4
    freq_bins: int = 8
    heads: int = 4
    decoder_blocks: int = 2
    cond_dim: int = 16
    timesteps: int = 1000
    seed: int = 0


def timestep_embedding(taus: torch.Tensor, dim: int) -> torch.Tensor:
    """Per-frame sinusoidal embedding; tau 0 (clean) is a valid input."""
    half = dim // 2
    freqs = torch.exp(
        -math.log(10_000.0) * torch.arange(half, dtype=torch.float32) / max(half - 1, 1)
    )
    angles = taus.float()[:, None] * freqs[None, :]
    emb = torch.cat([torch.sin(angles), torch.cos(angles)], dim=-1)
    if emb.shape[-1] < dim:
        emb = torch.nn.functional.pad(emb, (0, dim - emb.shape[-1]))
    return emb


class DecoderBlock(nn.Module):
    """Pre-norm self-attention over frame tokens plus a feed-forward."""

    def __init__(self, dim: int, heads: int):
        super().__init__()
        self.norm1 = nn.LayerNorm(dim)
        self.attn = nn.MultiheadAttention(dim, heads, batch_first=True)
        self.norm2 = nn.LayerNorm(dim)
        self.ff = nn.Sequential(nn.Linear(dim, 2 * dim), nn.GELU(), nn.Linear(2 * dim, dim))

    def forward(self, tokens: torch.Tensor) -> torch.Tensor:
        h = self.norm1(tokens)
        attended, _ = self.attn(h, h, h, need_weights=False)
        tokens = tokens + attended
        return tokens + self.ff(self.norm2(tokens))


class TextStub(nn.Module):
    """Byte-level prompt embedding; a stand-in for a text encoder."""

    def __init__(self, cond_dim: int):
        super().__init__()
        self.table = nn.Embedding(256, cond_dim)

    def forward(self, prompt: str) -> torch.Tensor:
        data = prompt.encode("utf-8") or b"\x00"
        ids = torch.tensor(list(data), dtype=torch.long)
        return self.table(ids).mean(dim=0)


class TinyAudioDenoiser(nn.Module):
    """Noise predictor over (1, C, frames, freq) latents with per-frame taus."""

    def __init__(self, spec: ModelSpec):
        super().__init__()
        torch.manual_seed(spec.seed)
        self.spec = spec
        dim = spec.channels * spec.freq_bins
        self.encoder = nn.Sequential(
            nn.Conv2d(spec.channels, spec.channels, 3, padding=1),
            nn.GELU(),
            nn.Conv2d(spec.channels, spec.channels, 3, padding=1),
        )
        self.tau_proj = nn.Linear(dim, dim)
        self.cond_proj = nn.Linear(spec.cond_dim, dim)
        self.text = TextStub(spec.cond_dim)
        self.decoder = nn.ModuleList(
            DecoderBlock(dim, spec.heads) for _ in range(spec.decoder_blocks)
        )
        self.head = nn.Conv2d(spec.channels, spec.channels, 3, padding=1)

    def forward(self, z: torch.Tensor, taus: torch.Tensor, cond: torch.Tensor) -> torch.Tensor:
        b, c, frames, freq = z.shape
        h = self.encoder(z)
        tokens = h.permute(0, 2, 1, 3).reshape(b, frames, c * freq)
        tokens = tokens + self.tau_proj(timestep_embedding(taus, c * freq))[None]
        tokens = tokens + self.cond_proj(cond)[None, None, :]
        for block in self.decoder:
            tokens = block(tokens)
        h = tokens.reshape(b, frames, c, freq).permute(0, 2, 1, 3)
        return self.head(h)

    def embed_prompt(self, prompt: str) -> torch.Tensor:
        with torch.no_grad():
            return self.text(prompt)


def build_model(spec: ModelSpec = ModelSpec()) -> TinyAudioDenoiser:
    model = TinyAudioDenoiser(spec)
    model.eval()
    return model


def save_checkpoint(model: TinyAudioDenoiser, path) -> None:
    torch.save({"spec": asdict(model.spec), "state_dict": model.state_dict()}, path)


def load_model(path) -> TinyAudioDenoiser:
    payload = torch.load(path, map_location="cpu", weights_only=True)
    model = TinyAudioDenoiser(ModelSpec(**payload["spec"]))
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model


def resolve_model(identifier: str) -> TinyAudioDenoiser:
    """``tiny`` (optionally ``tiny:<seed>``) builds in place; else a checkpoint path."""
    if identifier == "tiny":
        return build_model()
    if identifier.startswith("tiny:"):
        return build_model(ModelSpec(seed=int(identifier.split(":", 1)[1])))
    return load_model(identifier)
