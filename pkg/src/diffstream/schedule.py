"""Forward-diffusion noise mathematics.

A schedule holds the per-step noise variances ``beta[tau]`` and cumulative
signal coefficients ``alpha_bar[tau] = prod_{s<=tau} (1 - beta[s])`` for
tau = 1..M, and the training-consistent perturbation

    z_tau = sqrt(alpha_bar[tau]) * x0 + sqrt(1 - alpha_bar[tau]) * eps.

Timesteps are 1-based. A fully denoised frame is marked with the distinct
sentinel :data:`CLEAN`, never with coefficients for a fictitious tau = 0.
Schedule math is carried in float64; frame data keeps its own dtype.

Instances are immutable after construction and safe to share across
workers.
"""

from dataclasses import dataclass
from typing import Final

import numpy as np

from .errors import InvalidRange, ShapeMismatch, TimestepOutOfRange

#: Sentinel timestep marking a fully denoised frame.
CLEAN: Final[int] = 0

DEFAULT_M: Final[int] = 1000
DEFAULT_BETA_START: Final[float] = 1e-4
DEFAULT_BETA_END: Final[float] = 2e-2


@dataclass(frozen=True)
class NoiseSchedule:
    """Per-timestep noise coefficients, indexed tau = 1..M."""

    beta: np.ndarray
    alpha_bar: np.ndarray

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=np.float64)
        alpha_bar = np.asarray(self.alpha_bar, dtype=np.float64)
        if beta.ndim != 1 or beta.shape != alpha_bar.shape or beta.size < 1:
            raise InvalidRange("beta and alpha_bar must be equal-length 1-D arrays")
        if not (np.all(beta > 0.0) and np.all(beta < 1.0)):
            raise InvalidRange("beta values must lie strictly inside (0, 1)")
        if not (np.all(alpha_bar > 0.0) and np.all(alpha_bar < 1.0)):
            raise InvalidRange("alpha_bar values must lie strictly inside (0, 1)")
        if alpha_bar.size > 1 and not np.all(np.diff(alpha_bar) < 0.0):
            raise InvalidRange("alpha_bar must be strictly decreasing")
        if alpha_bar[0] != 1.0 - beta[0]:
            raise InvalidRange("alpha_bar[1] must equal 1 - beta[1] exactly")
        beta.setflags(write=False)
        alpha_bar.setflags(write=False)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "alpha_bar", alpha_bar)

    @property
    def M(self) -> int:
        return self.beta.size

    def alpha_bar_at(self, tau) -> np.ndarray:
        """alpha_bar for timestep(s) `tau`; raises TimestepOutOfRange outside [1..M]."""
        t = np.asarray(tau)
        if np.any(t < 1) or np.any(t > self.M):
            raise TimestepOutOfRange(f"tau must be in [1..{self.M}], got {tau}")
        return self.alpha_bar[t - 1]

    def cache_key(self) -> bytes:
        """Stable identity of the coefficient table, for memoised solves."""
        return self.beta.tobytes()

    def to_csv(self, path) -> None:
        """Dump the table as CSV with header ``tau,beta,alpha_bar``."""
        with open(path, "w", encoding="ascii") as fh:
            fh.write("tau,beta,alpha_bar\n")
            for tau in range(1, self.M + 1):
                fh.write(f"{tau},{float(self.beta[tau - 1])!r},{float(self.alpha_bar[tau - 1])!r}\n")


def build_linear_schedule(
    M: int = DEFAULT_M,
    beta_start: float = DEFAULT_BETA_START,
    beta_end: float = DEFAULT_BETA_END,
) -> NoiseSchedule:
    """Linear beta schedule from `beta_start` (tau=1) to `beta_end` (tau=M).

    Requires M >= 1 and 0 < beta_start <= beta_end < 1.
    """
    if M < 1:
        raise InvalidRange(f"M must be >= 1, got {M}")
    if not (0.0 < beta_start <= beta_end < 1.0):
        raise InvalidRange(
            f"need 0 < beta_start <= beta_end < 1, got ({beta_start}, {beta_end})"
        )
    beta = np.linspace(beta_start, beta_end, M, dtype=np.float64)
    alpha_bar = np.cumprod(1.0 - beta)
    return NoiseSchedule(beta=beta, alpha_bar=alpha_bar)


def forward_perturb(x0: np.ndarray, tau: int, eps: np.ndarray, sched: NoiseSchedule) -> np.ndarray:
    """Noise `x0` to the level of timestep `tau` using the noise draw `eps`.

    Returns sqrt(alpha_bar) * x0 + sqrt(1 - alpha_bar) * eps, computed in
    float64 and cast back to the dtype of `x0`. Deterministic in its inputs.
    """
    x0 = np.asarray(x0)
    eps = np.asarray(eps)
    if x0.shape != eps.shape:
        raise ShapeMismatch(f"x0 shape {x0.shape} != eps shape {eps.shape}")
    ab = float(sched.alpha_bar_at(tau))
    z = np.sqrt(ab) * x0.astype(np.float64) + np.sqrt(1.0 - ab) * eps.astype(np.float64)
    return z.astype(x0.dtype, copy=False)
