"""Brute-force posterior moments by 2-D grid quadrature.

Used to cross-check the closed-form conjugate update. Nothing here relies on
the closed form: the unnormalised log posterior is the Gaussian
log-likelihood plus ``scipy.stats.multivariate_normal.logpdf`` of the prior.
The grid is placed with a few Newton steps on finite-difference derivatives,
then moments are plain weighted sums over a whitened uniform grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import multivariate_normal

from .estimator import GaussianBelief, MeasurementBatch, posterior_update


def log_posterior_unnorm(points: np.ndarray, prior: GaussianBelief,
                         batch: MeasurementBatch) -> np.ndarray:
    """``log p(S | gamma) + log prior(gamma)`` for each row of ``points`` (m x 2)."""
    points = np.atleast_2d(points)
    var = batch.noise_var
    resid = batch.spacings[None, :] - (points[:, :1] + points[:, 1:2] * batch.speeds[None, :])
    loglik = (-0.5 * batch.spacings.size * math.log(2.0 * math.pi * var)
              - np.sum(resid ** 2, axis=1) / (2.0 * var))
    return loglik + multivariate_normal(prior.mean, prior.cov).logpdf(points)


def _fd_grad_hess(f, x, h):
    g = np.zeros(2)
    H = np.zeros((2, 2))
    f0 = f(x[None, :])[0]
    for i in range(2):
        e = np.zeros(2)
        e[i] = h[i]
        fp, fm = f(np.array([x + e, x - e]))
        g[i] = (fp - fm) / (2 * h[i])
        H[i, i] = (fp - 2 * f0 + fm) / h[i] ** 2
    e0 = np.array([h[0], 0.0])
    e1 = np.array([0.0, h[1]])
    fpp, fpm, fmp, fmm = f(np.array([x + e0 + e1, x + e0 - e1, x - e0 + e1, x - e0 - e1]))
    H[0, 1] = H[1, 0] = (fpp - fpm - fmp + fmm) / (4 * h[0] * h[1])
    return g, H


def quadrature_posterior(prior: GaussianBelief, batch: MeasurementBatch,
                         half_width: float = 10.0, n_grid: int = 201):
    """Posterior mean and covariance by grid quadrature. Returns ``(mean, cov)``."""
    f = lambda pts: log_posterior_unnorm(pts, prior, batch)  # noqa: E731

    # locate the mode and local curvature
    x = np.array(prior.mean, dtype=float)
    scale = np.sqrt(np.diag(prior.cov))
    for _ in range(4):
        g, H = _fd_grad_hess(f, x, 1e-2 * scale)
        x = x - np.linalg.solve(H, g)
        scale = np.sqrt(np.diag(np.linalg.inv(-H)))
    _, H = _fd_grad_hess(f, x, 1e-1 * scale)
    L = np.linalg.cholesky(np.linalg.inv(-H))

    u = np.linspace(-half_width, half_width, n_grid)
    uu = np.stack(np.meshgrid(u, u, indexing="ij"), axis=-1).reshape(-1, 2)
    pts = x + uu @ L.T
    logw = f(pts)
    w = np.exp(logw - logw.max())
    w /= w.sum()
    mean = w @ pts
    d = pts - mean
    cov = (d * w[:, None]).T @ d
    return mean, cov


def relative_errors(belief: GaussianBelief, mean: np.ndarray, cov: np.ndarray):
    """Scale-aware relative differences ``(mean_err, cov_err)``.

    Mean components are compared relative to ``max(|mean_i|, sd_i)``,
    covariance entries relative to ``sd_i * sd_j``.
    """
    sd = np.sqrt(np.diag(belief.cov))
    mean_err = np.max(np.abs(mean - belief.mean) / np.maximum(np.abs(belief.mean), sd))
    cov_err = np.max(np.abs(cov - belief.cov) / np.outer(sd, sd))
    return float(mean_err), float(cov_err)


def random_case(rng: np.random.Generator, max_n: int = 5):
    """A random prior inside a bounded box plus a batch of 1..max_n measurements."""
    mean = np.array([rng.uniform(0.0, 10.0), rng.uniform(0.5, 3.0)])
    sd = np.array([rng.uniform(0.01, 3.0), rng.uniform(0.05, 1.0)])
    rho = rng.uniform(-0.9, 0.9)
    cov = np.array([[sd[0] ** 2, rho * sd[0] * sd[1]], [rho * sd[0] * sd[1], sd[1] ** 2]])
    prior = GaussianBelief(mean, cov)
    n = int(rng.integers(1, max_n + 1))
    noise_var = float(rng.uniform(0.01, 4.0))
    speeds = rng.uniform(0.0, 40.0, n)
    truth = rng.multivariate_normal(mean, cov)
    spacings = truth[0] + truth[1] * speeds + rng.normal(0.0, math.sqrt(noise_var), n)
    return prior, MeasurementBatch(spacings, speeds, noise_var)


@dataclass
class CrossCheck:
    cases: int
    max_mean_err: float
    max_cov_err: float

    @property
    def max_err(self) -> float:
        return max(self.max_mean_err, self.max_cov_err)


def cross_check(cases: int = 100, seed: int = 0) -> CrossCheck:
    """Compare closed form and quadrature on ``cases`` random small problems."""
    rng = np.random.default_rng(seed)
    worst_mean = worst_cov = 0.0
    for _ in range(cases):
        prior, batch = random_case(rng)
        mean, cov = quadrature_posterior(prior, batch)
        m_err, c_err = relative_errors(posterior_update(prior, batch), mean, cov)
        worst_mean = max(worst_mean, m_err)
        worst_cov = max(worst_cov, c_err)
    return CrossCheck(cases, worst_mean, worst_cov)
