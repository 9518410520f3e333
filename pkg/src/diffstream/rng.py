"""Deterministic derivation of random streams from one 64-bit seed.

Every random draw in the package flows from a single user seed through a
counter-based splitting rule: sub-stream ``path`` maps to a Philox
generator keyed by ``SeedSequence(entropy=seed, spawn_key=path)``. The
path assignments are part of the reproducibility contract and are stable
across versions:

    (0, w)  initial latents of batch window ``w``; plain batch runs and the
            queue primer use w = 0, concatenation windows use w = 0, 1, ...
    (1,)    re-noising of the primer frames during queue initialisation
    (2,)    fresh tail frames enqueued by the streaming engine, drawn in
            step order from one generator
"""

import numpy as np

STREAM_BATCH = 0
STREAM_RENOISE = 1
STREAM_ENQUEUE = 2


def derive_rng(seed: int, *path: int) -> np.random.Generator:
    """Generator for sub-stream `path` of `seed`."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(path))
    return np.random.Generator(np.random.Philox(ss))
