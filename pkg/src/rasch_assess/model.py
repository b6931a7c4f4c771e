"""Rating-scale model math.

All functions work on the logit scale. A response in categories 0..M is
modeled with person measure ``beta``, item difficulty ``delta`` and shared
step thresholds ``tau`` (tau[j-1] is the step from category j-1 to j; the
step into category 0 is fixed at 0):

    P(X = k) = exp(k*(beta - delta) - cum_tau[k]) / sum_m exp(...)

where ``cum_tau[k]`` is the cumulative threshold sum up to step k. The
functions broadcast over ``beta``/``delta`` so callers can pass scalars or
arrays of matching shape.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "category_probability",
    "category_distribution",
    "expected_score",
    "score_variance",
    "cumulative_thresholds",
]


def cumulative_thresholds(tau) -> np.ndarray:
    """Return cum_tau[k] = sum of tau[0..k-1] for k = 0..M (cum_tau[0] = 0)."""
    tau = np.asarray(tau, dtype=float)
    if tau.ndim != 1:
        raise ValueError("tau must be a 1-d sequence of step thresholds")
    return np.concatenate(([0.0], np.cumsum(tau)))


def _log_weights(theta, tau):
    """Unnormalized log category weights k*theta - cum_tau[k], stacked on a
    trailing axis of length M+1."""
    theta = np.asarray(theta, dtype=float)
    cum = cumulative_thresholds(tau)
    k = np.arange(cum.size, dtype=float)
    return theta[..., None] * k - cum


def category_distribution(beta, delta, tau) -> np.ndarray:
    """Probabilities of all categories 0..M; trailing axis has length M+1.

    Normalized with max-subtraction so extreme logits cannot overflow.
    """
    eta = _log_weights(np.asarray(beta, dtype=float) - np.asarray(delta, dtype=float), tau)
    eta -= eta.max(axis=-1, keepdims=True)
    w = np.exp(eta)
    return w / w.sum(axis=-1, keepdims=True)


def category_probability(beta, delta, tau, k: int):
    """Probability of scoring exactly category ``k``."""
    probs = category_distribution(beta, delta, tau)
    m = probs.shape[-1] - 1
    if not 0 <= k <= m:
        raise ValueError(f"category {k} outside 0..{m}")
    out = probs[..., k]
    return float(out) if np.isscalar(beta) and np.isscalar(delta) else out

def expected_score(beta, delta, tau):
    """Model-expected score, in [0, M]."""
    probs = category_distribution(beta, delta, tau)
    k = np.arange(probs.shape[-1], dtype=float)
    out = probs @ k
    return float(out) if np.isscalar(beta) and np.isscalar(delta) else out


def score_variance(beta, delta, tau):
    """Model score variance; also equals d(expected_score)/d(beta)."""
    probs = category_distribution(beta, delta, tau)
    k = np.arange(probs.shape[-1], dtype=float)
    mean = probs @ k
    out = probs @ (k * k) - mean * mean
    return float(out) if np.isscalar(beta) and np.isscalar(delta) else out
