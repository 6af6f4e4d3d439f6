"""Martingale reduction for a fixed product prior.

Under a product prior the conditional mean of X_i given the past is just
mu_i, so the centred residuals Y_i = X_i - mu_i are computed exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import convex_sets as cs
from . import priors as pr

_TINY = 5e-324


@dataclass(frozen=True, eq=False)
class ReducedSample:
    X: np.ndarray
    Y: np.ndarray
    theta: np.ndarray
    M: float
    sigma_bar_sq: float

    @property
    def n(self) -> int:
        return self.X.shape[0]


def reduce(X, prior: pr.PriorPoint, family: pr.PriorFamily, sigma_sq: float | None = None) -> ReducedSample:
    """Centre one draw (n, d) at its conditional means."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if isinstance(family, pr.DiscreteFamily):
        theta = family.space.extreme_means(prior.extreme)
    else:
        theta = prior.mu_matrix(family.n, family.d)
    if X.shape != theta.shape:
        raise ValueError(f"sample shape {X.shape} does not match prior shape {theta.shape}")
    if sigma_sq is None:
        sigma_sq = pr.sigma_bar_sq(family)
    return ReducedSample(X, X - theta, theta, family.M, float(sigma_sq))


def check_reduction_bound(rs: ReducedSample, theta_avg_body: cs.ConvexBody, tol: float = 1e-12) -> bool:
    """rho_Theta(mean X) <= |mean Y| (+ tol)."""
    rho = cs.distance_to(theta_avg_body, rs.X.mean(axis=0))
    return bool(rho <= np.linalg.norm(rs.Y.mean(axis=0)) + tol)


def reduction_gaps(X: np.ndarray, theta: np.ndarray, body: cs.ConvexBody) -> np.ndarray:
    """Batch form: |mean Y| - rho_Theta(mean X) for X of shape (m, n, d)."""
    xbar = X.mean(axis=1)
    ybar = xbar - theta.mean(axis=0)
    return np.linalg.norm(ybar, axis=1) - cs.distances(body, xbar)


def _check_freedman_args(s, n, sigma_sq, M):
    if not s > 0:
        raise ValueError("freedman_tail needs s > 0")
    if n < 1 or sigma_sq < 0 or M <= 0:
        raise ValueError("freedman_tail needs n >= 1, sigma_sq >= 0, M > 0")


def freedman_log_tail(s: float, n: int, sigma_sq: float, M: float) -> float:
    """log Psi(s) = -s^2 / (2 n sigma^2 + 4 M s / 3)."""
    _check_freedman_args(s, n, sigma_sq, M)
    return -(s * s) / (2.0 * n * sigma_sq + 4.0 * M * s / 3.0)


def freedman_tail(s: float, n: int, sigma_sq: float, M: float) -> float:
    """Freedman tail for increments bounded by 2M with predictable variation n sigma^2."""
    # keep the value strictly positive even when exp underflows
    return min(1.0, max(math.exp(freedman_log_tail(s, n, sigma_sq, M)), _TINY))


def azuma_log_tail(s: float, n: int, M: float) -> float:
    """log Psi(s) = -s^2 / (8 n M^2) for increments bounded by 2M."""
    if not s > 0 or n < 1 or M <= 0:
        raise ValueError("azuma_log_tail needs s > 0, n >= 1, M > 0")
    return -(s * s) / (8.0 * n * M * M)


def azuma_tail(s: float, n: int, M: float) -> float:
    return min(1.0, max(math.exp(azuma_log_tail(s, n, M)), _TINY))
