"""Coarray-domain measurements: the standard model and the enhanced model.

Entry ``k`` of a coarray vector is the covariance entry ``C[i, m]`` of the
first sensor pair with ``n_i - n_m = lags[k]``. For a source at ``theta`` it
therefore carries the phase ``exp(j pi lag sin(theta))``, the same convention
as the physical steering vectors.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .geometry import ArrayGeometry, CoarrayIndex, coarray_select
from .signal_model import CouplingModel, circular_gaussian, effective_manifold, make_rng


class CoarrayModel(str, enum.Enum):
    DCTM = "DCTM"
    EDCTM_EXACT = "EDCTM"
    EDCTM_ESTIMATED = "EDCTM_estimated"


@dataclass(frozen=True)
class CoarrayVector:
    values: np.ndarray
    model: CoarrayModel = CoarrayModel.DCTM
    alpha: float | None = None

    def __len__(self):
        return self.values.size


def vec(m: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(m).reshape(-1, order="F")


def pair_vector(m: np.ndarray) -> np.ndarray:
    """``m[i, j]`` at position ``i * N + j``, aligned with the difference vector.

    Equal to ``vec(m.T)``; for Hermitian ``m`` this is ``conj(vec(m))``.
    """
    return np.asarray(m).reshape(-1)


def _check_square(cov: np.ndarray, index: CoarrayIndex) -> np.ndarray:
    cov = np.asarray(cov)
    n = index.n_sensors
    if cov.shape != (n, n):
        raise ValueError(f"covariance must be {n}x{n}, got {cov.shape}")
    return cov


def dctm(cov: np.ndarray, index: CoarrayIndex) -> CoarrayVector:
    """Difference-coarray measurement of an N x N covariance matrix."""
    cov = _check_square(cov, index)
    return CoarrayVector(coarray_select(pair_vector(cov), index), CoarrayModel.DCTM)


def hollow(m: np.ndarray) -> np.ndarray:
    m = np.array(m, dtype=complex)
    np.fill_diagonal(m, 0)
    return m


def eta_prime_exact(geom: ArrayGeometry, doas, source_sample_cov: np.ndarray,
                    index: CoarrayIndex | None = None,
                    coupling: CouplingModel | None = None) -> np.ndarray:
    """Coarray contribution of the off-diagonal source sample covariance.

    Needs the true DOAs and realized source waveforms, so it is only available
    inside simulations.
    """
    index = geom.index if index is None else index
    a = effective_manifold(geom, doas, coupling)
    cs = np.atleast_2d(source_sample_cov)
    if cs.shape != (a.shape[1], a.shape[1]):
        raise ValueError("source covariance size does not match the number of DOAs")
    err = a @ hollow(cs) @ a.conj().T
    return coarray_select(pair_vector(err), index)


def edctm(cov: np.ndarray, eta: np.ndarray, index: CoarrayIndex,
          alpha: float | None = None) -> CoarrayVector:
    base = dctm(cov, index).values
    eta = np.asarray(eta)
    if eta.shape != base.shape:
        raise ValueError(f"error term has length {eta.size}, expected {base.size}")
    model = CoarrayModel.EDCTM_EXACT if alpha is None else CoarrayModel.EDCTM_ESTIMATED
    return CoarrayVector(base - eta, model, alpha)


def eta_prime_estimated(eta: np.ndarray, alpha: float, rng_seed=None) -> np.ndarray:
    """Perturb the exact error term with white noise of variance ``alpha ||eta||^2 / dof``."""
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    eta = np.asarray(eta, dtype=complex)
    if alpha == 0:
        return eta.copy()
    var = alpha * np.vdot(eta, eta).real / eta.size
    return eta + circular_gaussian(make_rng(rng_seed), eta.shape, var)


def eta_prime_moments_oracle(geom: ArrayGeometry, doas, powers, n_snapshots: int,
                             index: CoarrayIndex | None = None,
                             coupling: CouplingModel | None = None):
    """Analytic mean and per-entry variance of the error term.

    For uncorrelated circular Gaussian sources the off-diagonal sample
    covariance entries are zero-mean, mutually uncorrelated, and
    ``E|C_ab|^2 = p_a p_b / T``. Propagating through the linear map gives
    ``var_k = (1/T) sum_{a != b} |A[i_k, a]|^2 |A[m_k, b]|^2 p_a p_b``.
    """
    index = geom.index if index is None else index
    a = effective_manifold(geom, doas, coupling)
    p = np.asarray(powers, dtype=float)
    rows, cols = index.row_col()
    ai = np.abs(a[rows]) ** 2 * p  # dof x D
    am = np.abs(a[cols]) ** 2 * p
    full = ai.sum(axis=1) * am.sum(axis=1)
    diag = (ai * am).sum(axis=1)
    variance = (full - diag) / n_snapshots
    return np.zeros(index.dof, dtype=complex), variance
