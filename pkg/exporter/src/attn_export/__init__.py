"""attn_export: dump decoder self-attention maps as IAAM files.

Patches the self-attention modules of a denoiser's decoder during a
staggered-window sampling run, averages the captured query/key score
matrices over heads, layers, and steps, and writes the IAAM interchange
format plus a per-layer shape audit. The output feeds any IAAM consumer;
nothing here imports the analysis side.
"""

from .capture import (
    CaptureConfig,
    NoHookedModules,
    ShapeAuditError,
    capture,
    write_iaam,
)
from .model import (
    ModelSpec,
    TinyAudioDenoiser,
    build_model,
    load_model,
    resolve_model,
    save_checkpoint,
)

__version__ = "0.1.0"
