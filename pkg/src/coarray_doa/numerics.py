"""Small dense complex linear algebra used by the recovery pipeline."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

RANK_RTOL = 1e-10
SINGULAR_FLOOR = 1e-30


class RankDeficientError(np.linalg.LinAlgError):
    pass


class ConvergenceError(np.linalg.LinAlgError):
    pass


def _pivoted_qr(columns: np.ndarray):
    q, r, piv = scipy.linalg.qr(columns, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    rank = int(np.sum(diag > RANK_RTOL * diag[0])) if diag.size and diag[0] > 0 else 0
    return q, r, piv, rank


def independent_columns(columns: np.ndarray) -> np.ndarray:
    """Positions of a numerically independent subset, in pivot order."""
    if columns.shape[1] == 0:
        return np.zeros(0, dtype=int)
    _, _, piv, rank = _pivoted_qr(columns)
    return np.sort(piv[:rank])


@dataclass(frozen=True)
class Projector:
    """Orthogonal projector onto the span of a set of columns."""

    basis: np.ndarray  # N x m orthonormal

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    @property
    def size(self) -> int:
        return self.basis.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T

    @property
    def complement(self) -> np.ndarray:
        return np.eye(self.size) - self.matrix


def projector(columns: np.ndarray) -> Projector:
    """Projector onto ``range(columns)``; raises on rank deficiency."""
    columns = np.atleast_2d(np.asarray(columns, dtype=complex))
    n, m = columns.shape
    if m == 0:
        return Projector(np.zeros((n, 0), dtype=complex))
    if m > n:
        raise RankDeficientError(f"{m} columns cannot be independent in dimension {n}")
    q, _, _, rank = _pivoted_qr(columns)
    if rank < m:
        raise RankDeficientError(f"numerical rank {rank} < {m} columns")
    return Projector(q[:, :m])


def restricted_least_squares(b: np.ndarray, y: np.ndarray, support) -> np.ndarray:
    """Minimize ``||y - B z||`` with ``z`` vanishing outside ``support``.

    Solved by QR of the restricted columns rather than normal equations.
    """
    support = np.asarray(list(support), dtype=int)
    z = np.zeros(b.shape[1], dtype=complex)
    if support.size == 0:
        return z
    sub = b[:, support]
    if support.size > sub.shape[0]:
        raise RankDeficientError(f"support of size {support.size} exceeds {sub.shape[0]} rows")
    q, r, piv, rank = _pivoted_qr(sub)
    if rank < support.size:
        raise RankDeficientError(f"restricted dictionary has rank {rank} < {support.size}")
    coef = scipy.linalg.solve_triangular(r, q.conj().T @ y)
    z[support[piv]] = coef
    return z


def hermitian_eig(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and unitary eigenvectors of a Hermitian matrix."""
    m = np.asarray(m, dtype=complex)
    scale = np.linalg.norm(m)
    if np.linalg.norm(m - m.conj().T) > 1e-8 * max(scale, 1.0):
        raise ValueError("matrix is not Hermitian")
    m = (m + m.conj().T) / 2
    try:
        w, v = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(str(exc)) from exc
    return w, v


def _certified_upper(gram: np.ndarray) -> float:
    """Upper bound on the largest eigenvalue of a PSD matrix.

    The smaller of the Gershgorin bound and ``tr(G^64)^(1/64)``; the latter
    overshoots by at most a factor ``n^(1/64)``.
    """
    gersh = float(np.max(np.sum(np.abs(gram), axis=1)))
    m = gram / gersh if gersh > 0 else gram
    log_scale = np.log(gersh) if gersh > 0 else 0.0
    for _ in range(6):
        s = float(np.max(np.abs(m)))
        if s == 0.0:
            return 0.0
        m = m / s
        log_scale = 2 * (log_scale + np.log(s))
        m = m @ m
    trace = float(np.real(np.trace(m)))
    trace_bound = np.exp((log_scale + np.log(max(trace, 1e-300))) / 64) if trace > 0 else 0.0
    return min(gersh, float(trace_bound))


def spectral_norm_sq(b: np.ndarray, n_iter: int = 50, rtol: float = 1e-6, seed: int = 0) -> float:
    """Estimate of ``||B||_2^2`` that never falls below the true value.

    Power iteration on the Gram matrix gives the Rayleigh quotient plus the
    residual norm. With clustered top eigenvalues the iteration can stop short
    of the largest one, so the result is floored by a certified upper bound.
    """
    gram = b @ b.conj().T if b.shape[0] <= b.shape[1] else b.conj().T @ b
    return max(_power_estimate(gram, n_iter, rtol, seed), _certified_upper(gram))


def _power_estimate(gram: np.ndarray, n_iter: int, rtol: float, seed: int) -> float:
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(gram.shape[0]) + 1j * rng.standard_normal(gram.shape[0])
    v /= np.linalg.norm(v)
    rho = 0.0
    for _ in range(n_iter):
        w = gram @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
        new = float(np.real(np.vdot(v, gram @ v)))
        done = abs(new - rho) <= rtol * new
        rho = new
        if done:
            break
    resid = float(np.linalg.norm(gram @ v - rho * v))
    return rho + resid


def ml_log_score(u: Projector, cov: np.ndarray, support_size: int | None = None) -> float:
    """Log of the concentrated stochastic ML cost for a candidate support.

    ``log det(U C U + tr(U_perp C) / (N - m) U_perp)``, with ``U`` the projector
    onto the candidate manifold. Returns ``inf`` when the argument is singular.
    """
    n = cov.shape[0]
    m = u.rank if support_size is None else int(support_size)
    if m >= n:
        raise ValueError(f"support size {m} must be smaller than N={n}")
    p = u.matrix
    p_perp = np.eye(n) - p
    noise = np.real(np.trace(p_perp @ cov)) / (n - m)
    arg = p @ cov @ p + noise * p_perp
    arg = (arg + arg.conj().T) / 2
    try:
        chol = np.linalg.cholesky(arg)
    except np.linalg.LinAlgError:
        return np.inf
    pivots = np.real(np.diag(chol)) ** 2
    if np.min(pivots) < SINGULAR_FLOOR:
        return np.inf
    return float(np.sum(np.log(pivots)))


def ml_score(u: Projector, cov: np.ndarray, support_size: int | None = None) -> float:
    return float(np.exp(ml_log_score(u, cov, support_size)))
