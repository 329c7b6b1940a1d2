"""OSPA error between estimated and true DOA sets (angles in radians)."""
from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment

DEFAULT_PENALTY = 0.0430


def _cost(small: np.ndarray, large: np.ndarray, penalty: float) -> np.ndarray:
    return np.minimum(penalty, np.abs(small[:, None] - large[None, :])) ** 2


def ospa_trial_sum(estimates, truth, penalty: float = DEFAULT_PENALTY) -> float:
    """Un-normalized OSPA sum for one trial.

    Best assignment of the smaller set into the larger one under the cutoff
    distance ``min(penalty, |a - b|)`` squared, plus ``penalty**2`` per
    unmatched element.
    """
    est = np.atleast_1d(np.asarray(estimates, dtype=float))
    tru = np.atleast_1d(np.asarray(truth, dtype=float))
    if tru.size == 0:
        raise ValueError("the true DOA set must not be empty")
    small, large = (est, tru) if est.size <= tru.size else (tru, est)
    total = penalty ** 2 * (large.size - small.size)
    if small.size:
        cost = _cost(small, large, penalty)
        rows, cols = linear_sum_assignment(cost)
        total += float(cost[rows, cols].sum())
    return float(total)


def ospa_single_trial(estimates, truth, penalty: float = DEFAULT_PENALTY) -> float:
    """Squared OSPA for one trial, normalized by the larger cardinality."""
    est = np.atleast_1d(estimates)
    tru = np.atleast_1d(truth)
    if tru.size == 0:
        raise ValueError("the true DOA set must not be empty")
    return ospa_trial_sum(est, tru, penalty) / max(est.size, tru.size)


def ospa_aggregate(per_trial_terms) -> float:
    """Root of the mean of per-trial squared OSPA values."""
    terms = np.asarray(per_trial_terms, dtype=float)
    if terms.size == 0:
        raise ValueError("need at least one trial")
    return float(np.sqrt(np.mean(terms)))


def ospa(estimates_per_trial, truth, penalty: float = DEFAULT_PENALTY) -> float:
    return ospa_aggregate([ospa_single_trial(e, truth, penalty) for e in estimates_per_trial])


def rmse(estimates, truth) -> float:
    """Plain RMSE after optimal matching; sets must have equal size."""
    est = np.sort(np.atleast_1d(estimates))
    tru = np.atleast_1d(truth)
    if est.size != tru.size:
        raise ValueError("RMSE needs equally sized sets")
    cost = (est[:, None] - tru[None, :]) ** 2
    rows, cols = linear_sum_assignment(cost)
    return float(np.sqrt(cost[rows, cols].mean()))
