"""Numpy implementations of the hot kernels.

Mirrors the API of the compiled extension ``rasch_assess._core``; one of the
two is selected at import time by :mod:`rasch_assess.backend`. Response
matrices are int64 arrays with -1 marking a missing cell; parameters are
float64. The profile kernels are only called on oracle-scale matrices, so the
(grid x cells) intermediates stay small.
"""

from __future__ import annotations

import numpy as np

NAME = "pure"


def _cum(tau):
    return np.concatenate(([0.0], np.cumsum(np.asarray(tau, dtype=float))))


def _eta(theta, cum):
    # theta (...,) -> eta (..., M+1), max-subtracted for stable exp
    k = np.arange(cum.size, dtype=float)
    eta = np.asarray(theta, dtype=float)[..., None] * k - cum
    return eta - eta.max(axis=-1, keepdims=True)


def prob_table(theta, tau):
    """Category probabilities for each entry of ``theta``; shape (..., M+1)."""
    w = np.exp(_eta(theta, _cum(tau)))
    return w / w.sum(axis=-1, keepdims=True)


def esw(beta, delta, tau):
    """Expected score and score variance on the persons x items grid."""
    p = prob_table(np.asarray(beta, dtype=float)[:, None] - np.asarray(delta, dtype=float)[None, :], tau)
    k = np.arange(p.shape[-1], dtype=float)
    e = p @ k
    w = p @ (k * k) - e * e
    return e, w


def _cell_loglik(x, beta, delta, tau):
    # log P(X = x) per cell; 0.0 where missing
    cum = _cum(tau)
    theta = np.asarray(beta, dtype=float)[:, None] - np.asarray(delta, dtype=float)[None, :]
    eta = _eta(theta, cum)
    lse = np.log(np.exp(eta).sum(axis=-1))
    obs = x >= 0
    picked = np.take_along_axis(eta, np.where(obs, x, 0)[..., None], axis=-1)[..., 0]
    return np.where(obs, picked - lse, 0.0)

def person_loglik(x, beta, delta, tau):
    """Log-likelihood contribution of each person's observed cells; shape (N,)."""
    return _cell_loglik(x, beta, delta, tau).sum(axis=1)


def item_loglik(x, beta, delta, tau):
    """Log-likelihood contribution of each item's observed cells; shape (I,)."""
    return _cell_loglik(x, beta, delta, tau).sum(axis=0)


def total_loglik(x, beta, delta, tau):
    """Joint log-likelihood over all observed cells."""
    return float(_cell_loglik(x, beta, delta, tau).sum())


def _profile(theta_grid, x_cells, cum):
    # theta_grid (G, T) for T observed cells with codes x_cells (T,)
    eta = _eta(theta_grid, cum)
    lse = np.log(np.exp(eta).sum(axis=-1))
    picked = eta[:, np.arange(x_cells.size), x_cells]
    return (picked - lse).sum(axis=1)


def beta_profile(x_row, delta, tau, grid):
    """Log-likelihood of one person's row at each candidate measure in ``grid``."""
    obs = x_row >= 0
    theta = np.asarray(grid, dtype=float)[:, None] - np.asarray(delta, dtype=float)[None, obs]
    return _profile(theta, x_row[obs], _cum(tau))


def delta_profile(x_col, beta, tau, grid):
    """Log-likelihood of one item's column at each candidate difficulty."""
    obs = x_col >= 0
    theta = np.asarray(beta, dtype=float)[None, obs] - np.asarray(grid, dtype=float)[:, None]
    return _profile(theta, x_col[obs], _cum(tau))


def tau_profile(x, beta, delta, tau, j, grid):
    """Log-likelihood with threshold ``tau[j]`` replaced by each grid value."""
    x = np.asarray(x)
    obs = x >= 0
    theta = (np.asarray(beta, dtype=float)[:, None] - np.asarray(delta, dtype=float)[None, :])[obs]
    codes = x[obs]
    cum0 = _cum(tau)
    k = np.arange(cum0.size, dtype=float)
    grid = np.asarray(grid, dtype=float)
    # cum[k] shifts by (g - tau[j]) for every step k > j
    shift = (grid - float(tau[j]))[:, None] * (k > j)
    eta = theta[None, :, None] * k - (cum0 + shift[:, None, :])
    eta -= eta.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(eta).sum(axis=-1))
    picked = eta[:, np.arange(codes.size), codes]
    return (picked - lse).sum(axis=1)
