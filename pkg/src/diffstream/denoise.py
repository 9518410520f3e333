"""Noise predictors and the deterministic sampling update.

The denoiser contract is a noise prediction eps_hat over a window of
frames, where every frame carries its own timestep (or the CLEAN
sentinel). The ground-truth denoisers here are exact conditional
expectations for a declared Gaussian process over the frame axis:

    x ~ GP with mean mu and covariance Sigma_ij = variance * rho**|i-j|
    z_i = a_i x_i + sqrt(s_i) eps_i,   a_i = sqrt(alpha_bar[tau_i]),
                                       s_i = 1 - alpha_bar[tau_i]

    E[x | z] = mu + Sigma A (A Sigma A + S)^-1 (z - A mu)
    eps_hat_i = (z_i - a_i E[x | z]_i) / sqrt(s_i)

CLEAN frames enter the conditioning as noiseless observations (a_i = 1,
s_i = 0) and receive eps_hat = 0, which callers ignore. The frame-local
mode (rho = 0) is computed by its per-frame closed form and never touches
a linear solve; the AR1 mode always goes through the dense factorisation,
so the two modes cross-check each other at rho = 0.

Denoisers are stateless given their spec and safe to call concurrently;
samplers own their random state.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.linalg

from .errors import NonDecreasingStep, ShapeMismatch, SingularSystem
from .plan import TimestepSchedule
from .rng import STREAM_BATCH, derive_rng
from .schedule import CLEAN, NoiseSchedule


@dataclass
class FrameWindow:
    """A window of latent frames with per-frame timesteps.

    ``values`` has shape (channels, length, freq_bins); ``taus`` has one
    entry per frame, each CLEAN or in [1..M]; ``condition`` is carried
    through to the denoiser unchanged.
    """

    values: np.ndarray
    taus: np.ndarray
    condition: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.float32))

    def __post_init__(self):
        self.values = np.asarray(self.values)
        self.taus = np.asarray(self.taus, dtype=np.int64)
        if self.values.ndim != 3:
            raise ShapeMismatch(f"values must be (C, L, Fr), got shape {self.values.shape}")
        if self.taus.shape != (self.values.shape[1],):
            raise ShapeMismatch(
                f"taus must have one entry per frame, got {self.taus.shape} "
                f"for {self.values.shape[1]} frames"
            )

    @property
    def length(self) -> int:
        return self.values.shape[1]


class GPMode(Enum):
    FRAME_LOCAL = "framelocal"
    AR1 = "ar1"


@dataclass(frozen=True)
class GaussianProcessSpec:
    """Stationary Gaussian data distribution over the frame axis.

    ``mean`` applies per frequency bin; ``rho`` is the AR(1) lag-one
    correlation. FRAME_LOCAL mode requires rho = 0.
    """

    mean: float = 0.0
    variance: float = 1.0
    rho: float = 0.0
    mode: GPMode = GPMode.FRAME_LOCAL

    def __post_init__(self):
        if self.variance <= 0.0:
            raise ValueError(f"variance must be positive, got {self.variance}")
        if not 0.0 <= self.rho < 1.0:
            raise ValueError(f"rho must be in [0, 1), got {self.rho}")
        if self.mode is GPMode.FRAME_LOCAL and self.rho != 0.0:
            raise ValueError("frame-local mode requires rho = 0")

    @classmethod
    def frame_local(cls, mean: float = 0.0, variance: float = 1.0) -> "GaussianProcessSpec":
        return cls(mean=mean, variance=variance, rho=0.0, mode=GPMode.FRAME_LOCAL)

    @classmethod
    def ar1(cls, mean: float, variance: float, rho: float) -> "GaussianProcessSpec":
        return cls(mean=mean, variance=variance, rho=rho, mode=GPMode.AR1)


class Denoiser(ABC):
    """Noise predictor over a frame window with per-frame timesteps."""

    @abstractmethod
    def predict_eps(self, window: FrameWindow, sched: NoiseSchedule) -> np.ndarray:
        """Predicted noise, shaped like ``window.values``; CLEAN entries are zero."""


def _signal_noise_coeffs(taus: np.ndarray, sched: NoiseSchedule):
    """(a, s) per frame: a = sqrt(alpha_bar), s = 1 - alpha_bar; CLEAN -> (1, 0)."""
    noisy = taus != CLEAN
    ab = np.ones(taus.shape, dtype=np.float64)
    if np.any(noisy):
        ab[noisy] = sched.alpha_bar_at(taus[noisy])
    a = np.sqrt(ab)
    s = np.where(noisy, 1.0 - ab, 0.0)
    return a, s, noisy


def gp_predict_eps(
    window: FrameWindow, spec: GaussianProcessSpec, sched: NoiseSchedule
) -> np.ndarray:
    """Exact conditional-expectation noise prediction for `spec`.

    Channels and frequency bins are independent copies of the process, so
    the AR1 solve factors once per window and applies to all bins.
    """
    z = window.values.astype(np.float64, copy=False)
    C, L, Fr = z.shape
    a, s, noisy = _signal_noise_coeffs(window.taus, sched)

    if spec.mode is GPMode.FRAME_LOCAL:
        # closed form per frame: Cov(x, z) = a*var, Var(z) = a^2 var + s
        v = a * a * spec.variance + s
        gain = a * spec.variance / v
        ex = spec.mean + gain[None, :, None] * (z - (a * spec.mean)[None, :, None])
    else:
        ex = _ar1_posterior_mean(z, a, s, spec)

    eps = np.zeros_like(z)
    if np.any(noisy):
        num = z[:, noisy, :] - a[None, noisy, None] * ex[:, noisy, :]
        eps[:, noisy, :] = num / np.sqrt(s[noisy])[None, :, None]
    return eps.astype(window.values.dtype, copy=False)


def _ar1_covariance(L: int, spec: GaussianProcessSpec) -> np.ndarray:
    idx = np.arange(L)
    return spec.variance * spec.rho ** np.abs(idx[:, None] - idx[None, :])


def _ar1_posterior_mean(z, a, s, spec):
    C, L, Fr = z.shape
    sigma = _ar1_covariance(L, spec)
    gram = (a[:, None] * sigma * a[None, :]) + np.diag(s)
    rhs = (z - (a * spec.mean)[None, :, None]).transpose(1, 0, 2).reshape(L, C * Fr)
    try:
        solved = scipy.linalg.solve(gram, rhs, assume_a="pos")
    except (scipy.linalg.LinAlgError, np.linalg.LinAlgError) as exc:
        raise SingularSystem(f"dense conditioning solve failed: {exc}") from exc
    ex = spec.mean + (sigma * a[None, :]) @ solved
    return ex.reshape(L, C, Fr).transpose(1, 0, 2)


class GaussianProcessDenoiser(Denoiser):
    """Denoiser wrapper around :func:`gp_predict_eps`.

    Streaming runs present the same timestep vector every step, so the AR1
    Cholesky factor is memoised per (taus, schedule) pair.
    """

    def __init__(self, spec: GaussianProcessSpec):
        self.spec = spec
        self._cache: dict[tuple[bytes, bytes, int], tuple] = {}

    def predict_eps(self, window: FrameWindow, sched: NoiseSchedule) -> np.ndarray:
        if self.spec.mode is GPMode.FRAME_LOCAL:
            return gp_predict_eps(window, self.spec, sched)
        return self._predict_ar1(window, sched)

    def _predict_ar1(self, window: FrameWindow, sched: NoiseSchedule) -> np.ndarray:
        z = window.values.astype(np.float64, copy=False)
        C, L, Fr = z.shape
        a, s, noisy = _signal_noise_coeffs(window.taus, sched)
        key = (window.taus.tobytes(), sched.cache_key(), L)
        hit = self._cache.get(key)
        if hit is None:
            sigma = _ar1_covariance(L, self.spec)
            gram = (a[:, None] * sigma * a[None, :]) + np.diag(s)
            try:
                factor = scipy.linalg.cho_factor(gram)
            except (scipy.linalg.LinAlgError, np.linalg.LinAlgError) as exc:
                raise SingularSystem(f"dense conditioning solve failed: {exc}") from exc
            hit = (factor, sigma * a[None, :])
            self._cache[key] = hit
        factor, sigma_a = hit
        rhs = (z - (a * self.spec.mean)[None, :, None]).transpose(1, 0, 2).reshape(L, C * Fr)
        solved = scipy.linalg.cho_solve(factor, rhs)
        ex = (self.spec.mean + sigma_a @ solved).reshape(L, C, Fr).transpose(1, 0, 2)
        eps = np.zeros_like(z)
        if np.any(noisy):
            num = z[:, noisy, :] - a[None, noisy, None] * ex[:, noisy, :]
            eps[:, noisy, :] = num / np.sqrt(s[noisy])[None, :, None]
        return eps.astype(window.values.dtype, copy=False)


def ddim_step(
    z: np.ndarray,
    eps_hat: np.ndarray,
    tau: int,
    tau_next: int,
    sched: NoiseSchedule,
) -> np.ndarray:
    """Deterministic update from timestep `tau` to `tau_next` (or CLEAN).

    Forms the clean estimate x0 = (z - sqrt(1 - ab) eps_hat) / sqrt(ab) and
    re-noises it to the target level; with ``tau_next == CLEAN`` the clean
    estimate itself is returned.
    """
    z = np.asarray(z)
    eps_hat = np.asarray(eps_hat)
    if z.shape != eps_hat.shape:
        raise ShapeMismatch(f"z shape {z.shape} != eps_hat shape {eps_hat.shape}")
    if tau_next != CLEAN and tau_next >= tau:
        raise NonDecreasingStep(f"tau_next {tau_next} must be below tau {tau}")
    ab = float(sched.alpha_bar_at(tau))
    zf = z.astype(np.float64, copy=False)
    ef = eps_hat.astype(np.float64, copy=False)
    x0 = (zf - np.sqrt(1.0 - ab) * ef) / np.sqrt(ab)
    if tau_next == CLEAN:
        return x0.astype(z.dtype, copy=False)
    ab_next = float(sched.alpha_bar_at(tau_next))
    out = np.sqrt(ab_next) * x0 + np.sqrt(1.0 - ab_next) * ef
    return out.astype(z.dtype, copy=False)


def advance_frames(
    values: np.ndarray,
    eps_hat: np.ndarray,
    taus: np.ndarray,
    taus_next: np.ndarray,
    sched: NoiseSchedule,
) -> np.ndarray:
    """Vectorised per-frame ddim_step; frames with taus_next == CLEAN yield x0."""
    zf = values.astype(np.float64, copy=False)
    ef = eps_hat.astype(np.float64, copy=False)
    ab = sched.alpha_bar_at(taus)
    x0 = (zf - np.sqrt(1.0 - ab)[None, :, None] * ef) / np.sqrt(ab)[None, :, None]
    to_clean = taus_next == CLEAN
    ab_next = np.ones(taus_next.shape, dtype=np.float64)
    if np.any(~to_clean):
        ab_next[~to_clean] = sched.alpha_bar_at(taus_next[~to_clean])
    out = np.sqrt(ab_next)[None, :, None] * x0 + np.sqrt(1.0 - ab_next)[None, :, None] * ef
    out[:, to_clean, :] = x0[:, to_clean, :]
    return out.astype(values.dtype, copy=False)


def sample_from_noise(
    z_init: np.ndarray,
    tsched: TimestepSchedule,
    den: Denoiser,
    sched: NoiseSchedule,
    condition: np.ndarray | None = None,
    meter=None,
) -> np.ndarray:
    """Run the deterministic chain on given start latents, uniform taus per step."""
    z = np.asarray(z_init)
    if z.ndim != 3:
        raise ShapeMismatch(f"z_init must be (C, L, Fr), got shape {z.shape}")
    cond = condition if condition is not None else np.zeros(0, dtype=np.float32)
    L = z.shape[1]
    steps = tsched.steps
    for k, tau in enumerate(steps):
        taus = np.full(L, tau, dtype=np.int64)
        eps = den.predict_eps(FrameWindow(z, taus, cond), sched)
        tau_next = steps[k + 1] if k + 1 < len(steps) else CLEAN
        z_next = ddim_step(z, eps, tau, tau_next, sched)
        if meter is not None:
            meter.pulse(taus.nbytes + eps.nbytes + z_next.nbytes)
        z = z_next
    return z


def batch_sample(
    n_frames: int,
    tsched: TimestepSchedule,
    den: Denoiser,
    sched: NoiseSchedule,
    condition: np.ndarray | None = None,
    seed: int = 0,
    channels: int = 1,
    freq_bins: int = 1,
    window_index: int = 0,
    meter=None,
) -> np.ndarray:
    """Sample `n_frames` frames with every frame sharing the timestep at each step.

    Start latents are standard normal from the (seed, 0, window_index)
    stream; the result is bit-reproducible for a fixed seed.
    """
    if n_frames < 1:
        raise ShapeMismatch(f"n_frames must be >= 1, got {n_frames}")
    rng = derive_rng(seed, STREAM_BATCH, window_index)
    z0 = rng.standard_normal((channels, n_frames, freq_bins), dtype=np.float32)
    if meter is not None:
        meter.hold("latents", z0.nbytes)
    return sample_from_noise(z0, tsched, den, sched, condition, meter=meter)
