"""Shared fixtures and independent reference implementations.

The reference routines here deliberately re-derive results by the most
direct construction available (explicit loops, joint covariance matrices,
direct solves) so library code and tests never share a code path.
"""

import numpy as np
import pytest

from diffstream import CLEAN, build_linear_schedule


@pytest.fixture(scope="session")
def default_sched():
    return build_linear_schedule()


def brute_force_gp_eps(values, taus, mean, variance, rho, sched):
    """Noise prediction by explicit joint-Gaussian conditioning.

    Builds the full covariance of (x, z) elementwise, conditions per
    channel and bin with a direct solve, and maps the posterior mean back
    to a noise estimate. CLEAN frames are noiseless observations.
    """
    values = np.asarray(values, dtype=np.float64)
    C, L, Fr = values.shape
    sigma = np.empty((L, L))
    for i in range(L):
        for j in range(L):
            sigma[i, j] = variance * rho ** abs(i - j)
    a = np.empty(L)
    s = np.empty(L)
    for i, t in enumerate(taus):
        if t == CLEAN:
            a[i], s[i] = 1.0, 0.0
        else:
            ab = float(sched.alpha_bar[int(t) - 1])
            a[i], s[i] = np.sqrt(ab), 1.0 - ab
    D = np.diag(a)
    cov_zz = D @ sigma @ D + np.diag(s)
    cov_xz = sigma @ D
    eps = np.zeros_like(values)
    for c in range(C):
        for f in range(Fr):
            z = values[c, :, f]
            ex = mean + cov_xz @ np.linalg.solve(cov_zz, z - a * mean)
            for i, t in enumerate(taus):
                if t != CLEAN:
                    eps[c, i, f] = (z[i] - a[i] * ex[i]) / np.sqrt(s[i])
    return eps


def ddim_gaussian_retention(steps, sched, variance=1.0):
    """Closed-form output variance of the deterministic chain on a Gaussian prior.

    Start latents are standard normal. For a Gaussian prior the exact
    conditional-mean predictor makes every update linear in z, so the
    whole chain is one scalar gain: a mixing factor per transition plus a
    final collapse to the clean estimate. Returns gain^2, the variance of
    the chain output.
    """
    ab = np.array([float(sched.alpha_bar[t - 1]) for t in steps])
    gain = 1.0
    for k in range(len(ab) - 1):
        va = ab[k] * variance + (1.0 - ab[k])
        x0_coef = np.sqrt(ab[k]) * variance / va
        eps_coef = np.sqrt(1.0 - ab[k]) / va
        gain *= np.sqrt(ab[k + 1]) * x0_coef + np.sqrt(1.0 - ab[k + 1]) * eps_coef
    va = ab[-1] * variance + (1.0 - ab[-1])
    gain *= np.sqrt(ab[-1]) * variance / va
    return gain * gain
