"""Conjugate Bayesian estimation of the spacing-policy coefficients.

Spacing is modelled as ``S = s0 + tau * V + eps`` with ``eps ~ N(0, sigma^2)``
and a bivariate normal belief over ``gamma = [s0, tau]``. Because the model is
linear-Gaussian the posterior stays normal and is available in closed form:

    cov_post  = (cov_prior^-1 + Z^T Z / sigma^2)^-1
    mean_post = cov_post (Z^T S / sigma^2 + cov_prior^-1 mean_prior)

with ``Z`` the design matrix whose rows are ``[1, V_j]``. All 2x2 algebra is
done with explicit adjugate formulas.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import SingularPrior

DET_FLOOR = 1e-300
SYMMETRY_TOL = 1e-12


def _inv2(a, b, c, d, what):
    det = a * d - b * c
    if not det > DET_FLOOR:
        raise SingularPrior(f"{what} is singular or not positive definite (det={det:.3g})")
    return d / det, -b / det, -c / det, a / det


@dataclass(frozen=True, eq=False)
class GaussianBelief:
    """Normal belief over ``[s0, tau]`` (metres, seconds)."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float).reshape(2)
        cov = np.array(self.cov, dtype=float).reshape(2, 2)
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise ValueError("belief contains non-finite values")
        if abs(cov[0, 1] - cov[1, 0]) > SYMMETRY_TOL:
            raise ValueError("covariance is not symmetric")
        cov = 0.5 * (cov + cov.T)
        if not (cov[0, 0] > 0 and cov[0, 0] * cov[1, 1] - cov[0, 1] ** 2 > 0):
            raise ValueError("covariance is not positive definite")
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def tau(self) -> float:
        return float(self.mean[1])

    @property
    def tau_var(self) -> float:
        return float(self.cov[1, 1])

    def with_tau_mean(self, tau: float) -> "GaussianBelief":
        return GaussianBelief([self.mean[0], tau], self.cov)


# prior used in the reference experiment: s0 ~ 1 m (tight), tau ~ 1.6 s
DEFAULT_PRIOR = GaussianBelief([1.0, 1.6], [[1e-4, -1e-5], [-1e-5, 0.125]])


@dataclass(frozen=True, eq=False)
class MeasurementBatch:
    spacings: np.ndarray
    speeds: np.ndarray
    noise_var: float

    def __post_init__(self):
        s = np.array(self.spacings, dtype=float).reshape(-1)
        v = np.array(self.speeds, dtype=float).reshape(-1)
        if s.shape != v.shape:
            raise ValueError("spacings and speeds must have equal length")
        if not self.noise_var > 0:
            raise ValueError(f"noise_var must be positive, got {self.noise_var}")
        if not (np.all(np.isfinite(s)) and np.all(np.isfinite(v))):
            raise ValueError("measurements must be finite")
        object.__setattr__(self, "spacings", s)
        object.__setattr__(self, "speeds", v)

    def __len__(self):
        return self.spacings.size

    @classmethod
    def concat(cls, batches) -> "MeasurementBatch":
        batches = list(batches)
        return cls(np.concatenate([b.spacings for b in batches]),
                   np.concatenate([b.speeds for b in batches]),
                   batches[0].noise_var)


def _posterior_from_sums(prior, n, sum_v, sum_vv, sum_s, sum_vs, noise_var):
    c = prior.cov
    p00, p01, p10, p11 = _inv2(c[0, 0], c[0, 1], c[1, 0], c[1, 1], "prior covariance")
    w = 1.0 / noise_var
    l00 = p00 + n * w
    l01 = p01 + sum_v * w
    l10 = p10 + sum_v * w
    l11 = p11 + sum_vv * w
    q00, q01, q10, q11 = _inv2(l00, l01, l10, l11, "posterior precision")
    m0, m1 = prior.mean
    h0 = sum_s * w + p00 * m0 + p01 * m1
    h1 = sum_vs * w + p10 * m0 + p11 * m1
    off = 0.5 * (q01 + q10)
    mean = (q00 * h0 + q01 * h1, q10 * h0 + q11 * h1)
    return GaussianBelief(mean, ((q00, off), (off, q11)))


def posterior_update(prior: GaussianBelief, batch: MeasurementBatch) -> GaussianBelief:
    """Condition ``prior`` on a batch of (spacing, speed) measurements."""
    if len(batch) == 0:
        return prior
    s, v = batch.spacings, batch.speeds
    return _posterior_from_sums(prior, s.size, v.sum(), v @ v, s.sum(), v @ s,
                                batch.noise_var)


def sequential_update(prior: GaussianBelief, batches) -> GaussianBelief:
    """Fold :func:`posterior_update` over ``batches``, each posterior becoming the next prior."""
    belief = prior
    noise_var = None
    for batch in batches:
        if noise_var is None:
            noise_var = batch.noise_var
        elif batch.noise_var != noise_var:
            raise ValueError("all batches must share noise_var")
        belief = posterior_update(belief, batch)
    return belief


def windowed_estimate(prior: GaussianBelief, history: MeasurementBatch,
                      window_len: int) -> GaussianBelief:
    """Posterior from the most recent ``window_len`` samples against a fixed prior."""
    if window_len < 1:
        raise ValueError("window_len must be >= 1")
    window = MeasurementBatch(history.spacings[-window_len:], history.speeds[-window_len:],
                              history.noise_var)
    return posterior_update(prior, window)


def log_likelihood(batch: MeasurementBatch, gamma) -> float:
    """Gaussian log-likelihood of the spacings given ``gamma = [s0, tau]``."""
    if len(batch) == 0:
        return 0.0
    s0, tau = gamma
    resid = batch.spacings - (s0 + tau * batch.speeds)
    var = batch.noise_var
    return float(-0.5 * resid.size * math.log(2.0 * math.pi * var) - (resid @ resid) / (2.0 * var))


class WindowedEstimator:
    """Streaming form of :func:`windowed_estimate` for one vehicle."""

    def __init__(self, prior: GaussianBelief, noise_var: float, window_len: int):
        if window_len < 1:
            raise ValueError("window_len must be >= 1")
        if not noise_var > 0:
            raise ValueError("noise_var must be positive")
        self.prior = prior
        self.noise_var = noise_var
        self.window_len = window_len
        self._s = deque(maxlen=window_len)
        self._v = deque(maxlen=window_len)

    @property
    def full(self) -> bool:
        return len(self._s) == self.window_len

    def reset(self) -> None:
        self._s.clear()
        self._v.clear()

    def update(self, spacing: float, speed: float) -> GaussianBelief:
        self._s.append(spacing)
        self._v.append(speed)
        s = np.fromiter(self._s, float, len(self._s))
        v = np.fromiter(self._v, float, len(self._v))
        return _posterior_from_sums(self.prior, s.size, v.sum(), v @ v, s.sum(), v @ s,
                                    self.noise_var)
