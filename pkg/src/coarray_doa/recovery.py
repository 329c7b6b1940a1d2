"""Greedy and thresholding sparse recovery over the coarray dictionary.

All solvers work on a dictionary whose last column is the noise atom (the
unit vector at the zero lag). Column indices are 0-based, so the noise atom
sits at index ``g``.

``omp`` and ``lbml_omp`` start from the noise atom and add ``n_atoms`` grid
atoms, one per iteration. The thresholding baselines (``romp``, ``iht``,
``cosamp``) search all ``g + 1`` columns for a ``sparsity``-term
approximation and the noise atom is discarded afterwards if it was picked.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dictionary import AngularGrid, Dictionary
from .numerics import (RankDeficientError, independent_columns, ml_log_score, projector,
                       restricted_least_squares, spectral_norm_sq)


@dataclass
class RecoveryResult:
    support: list[int]
    coefficients: np.ndarray
    doa_estimates: np.ndarray
    trace: list[tuple[list[int], int]] = field(default_factory=list)
    fallback: bool = False
    iterations: int = 0

    @property
    def grid_support(self) -> list[int]:
        """Support without the noise atom."""
        noise = self.coefficients.size - 1
        return [i for i in self.support if i != noise]


def _unpack(dictionary):
    if isinstance(dictionary, Dictionary):
        return dictionary.matrix, dictionary.grid
    return np.asarray(dictionary), None


def extract_doas(support, grid: AngularGrid | None, noise_atom: int | None = None) -> np.ndarray:
    """Grid angles of the support with the noise atom removed, ascending."""
    if grid is None:
        return np.zeros(0)
    noise_atom = grid.size if noise_atom is None else noise_atom
    idx = sorted(i for i in support if i != noise_atom)
    return grid.angles[np.asarray(idx, dtype=int)] if idx else np.zeros(0)


def _result(support, h, grid, **kw) -> RecoveryResult:
    return RecoveryResult(support=list(support), coefficients=h,
                          doa_estimates=extract_doas(support, grid, h.size - 1), **kw)


def omp(dictionary, y: np.ndarray, n_atoms: int) -> RecoveryResult:
    """Orthogonal matching pursuit with the noise atom pre-selected."""
    b, grid = _unpack(dictionary)
    g = b.shape[1] - 1
    if n_atoms + 1 > b.shape[0]:
        raise ValueError(f"cannot fit {n_atoms} atoms plus noise with {b.shape[0]} measurements")
    y = np.asarray(y, dtype=complex)
    support = [g]
    available = np.ones(g, dtype=bool)
    h = np.zeros(g + 1, dtype=complex)
    trace = []
    for _ in range(min(n_atoms, g)):
        corr = np.abs(b[:, :g].conj().T @ (y - b @ h))
        corr[~available] = -np.inf
        j = int(np.argmax(corr))
        support.append(j)
        available[j] = False
        trace.append(([j], j))
        h = restricted_least_squares(b, y, support)
    return _result(support, h, grid, trace=trace, iterations=len(trace))


def candidate_window(available_idx: np.ndarray, j: int, q: int) -> np.ndarray:
    """The ``q`` entries of ``available_idx`` nearest to ``j`` (which it contains).

    Near either end of the grid the window is shifted inwards rather than
    wrapped, so it still holds ``q`` candidates when enough are available.
    """
    n0 = int(np.searchsorted(available_idx, j))
    width = min(q, available_idx.size)
    start = min(max(n0 - (q - 1) // 2, 0), available_idx.size - width)
    return available_idx[start:start + width]


def lbml_omp(dictionary: Dictionary, y: np.ndarray, n_atoms: int, cov: np.ndarray,
             n_candidates: int = 11) -> RecoveryResult:
    """List-based maximum-likelihood OMP.

    Each iteration takes the OMP pick, lists its ``n_candidates`` nearest free
    grid neighbours, and keeps the one whose physical-array support (the most
    recent atoms plus the candidate) minimizes the concentrated ML cost under
    the sample covariance ``cov``.
    """
    if n_candidates < 1 or n_candidates % 2 == 0:
        raise ValueError("the number of candidates must be a positive odd integer")
    b, grid = dictionary.matrix, dictionary.grid
    manifold = dictionary.physical_manifold
    n_sensors = manifold.shape[0]
    if cov.shape != (n_sensors, n_sensors):
        raise ValueError("covariance does not match the physical array")
    g = b.shape[1] - 1
    if n_atoms + 1 > b.shape[0]:
        raise ValueError(f"cannot fit {n_atoms} atoms plus noise with {b.shape[0]} measurements")
    y = np.asarray(y, dtype=complex)
    # Keeps every candidate support at most N - 1 columns wide.
    window = max(n_sensors - 2, 0)

    support = [g]
    available = np.ones(g, dtype=bool)
    h = np.zeros(g + 1, dtype=complex)
    trace = []
    fallback = False
    for _ in range(min(n_atoms, g)):
        corr = np.abs(b[:, :g].conj().T @ (y - b @ h))
        corr[~available] = -np.inf
        j = int(np.argmax(corr))
        candidates = candidate_window(np.flatnonzero(available), j, n_candidates)

        atoms = support[1:]
        recent = atoms[len(atoms) - window:] if window else []
        scores = np.full(candidates.size, np.inf)
        for k, v in enumerate(candidates):
            cols = recent + [int(v)]
            try:
                u = projector(manifold[:, cols])
            except RankDeficientError:
                continue
            scores[k] = ml_log_score(u, cov, len(cols))
        if np.all(np.isinf(scores)):
            chosen = j
            fallback = True
        else:
            chosen = int(candidates[int(np.argmin(scores))])

        support.append(chosen)
        available[chosen] = False
        trace.append((candidates.tolist(), chosen))
        h = restricted_least_squares(b, y, support)
    return _result(support, h, grid, trace=trace, fallback=fallback, iterations=len(trace))


def _fit_independent(b, y, support):
    """Least squares on ``support``, dropping numerically dependent columns."""
    support = [int(i) for i in support]
    try:
        return restricted_least_squares(b, y, support), support
    except RankDeficientError:
        keep = independent_columns(b[:, support])
        support = [support[i] for i in keep]
        return restricted_least_squares(b, y, support), support


def romp(dictionary, y: np.ndarray, sparsity: int) -> RecoveryResult:
    """Regularized OMP.

    Per iteration: take the ``sparsity`` largest correlations, keep the run of
    comparable magnitudes (within a factor of two) with the most energy, add it
    to the support and refit. The final support is pruned to ``sparsity``.
    """
    b, grid = _unpack(dictionary)
    n_cols = b.shape[1]
    y = np.asarray(y, dtype=complex)
    h = np.zeros(n_cols, dtype=complex)
    support: list[int] = []
    if sparsity <= 0:
        return _result(support, h, grid)
    y_norm = np.linalg.norm(y)
    it = 0
    while len(support) < sparsity and it < sparsity:
        it += 1
        r = y - b @ h
        if np.linalg.norm(r) <= 1e-12 * max(y_norm, 1e-300):
            break
        u = np.abs(b.conj().T @ r)
        u[support] = 0.0
        top = np.argsort(-u, kind="stable")[:sparsity]
        top = top[u[top] > 0]
        if top.size == 0:
            break
        mags = u[top]
        best, best_energy = None, -1.0
        for start in range(top.size):
            stop = start
            while stop + 1 < top.size and mags[start] <= 2 * mags[stop + 1]:
                stop += 1
            energy = float(np.sum(mags[start:stop + 1] ** 2))
            if energy > best_energy:
                best, best_energy = top[start:stop + 1], energy
        support.extend(int(i) for i in best if i not in support)
        h, support = _fit_independent(b, y, support)
    if len(support) > sparsity:
        keep = np.argsort(-np.abs(h[support]), kind="stable")[:sparsity]
        support = [support[i] for i in sorted(keep)]
        h, support = _fit_independent(b, y, support)
    return _result(support, h, grid, iterations=it)


def _top(values: np.ndarray, k: int) -> np.ndarray:
    return np.sort(np.argsort(-np.abs(values), kind="stable")[:k])


def iht(dictionary, y: np.ndarray, sparsity: int, max_iterations: int = 300,
        step_tolerance: float = 1e-6) -> RecoveryResult:
    """Iterative hard thresholding with step ``1 / ||B||_2^2``."""
    b, grid = _unpack(dictionary)
    y = np.asarray(y, dtype=complex)
    n_cols = b.shape[1]
    h = np.zeros(n_cols, dtype=complex)
    if sparsity <= 0:
        return _result([], h, grid)
    step = 1.0 / spectral_norm_sq(b)
    it = 0
    for it in range(1, max_iterations + 1):
        grad = b.conj().T @ (y - b @ h)
        new = h + step * grad
        keep = _top(new, sparsity)
        pruned = np.zeros_like(new)
        pruned[keep] = new[keep]
        change = np.linalg.norm(pruned - h)
        h = pruned
        if change <= step_tolerance * max(np.linalg.norm(h), 1e-300):
            break
    support = [int(i) for i in np.flatnonzero(h)]
    if support:
        h, support = _fit_independent(b, y, support)
    return _result(support, h, grid, iterations=it)


def cosamp(dictionary, y: np.ndarray, sparsity: int, max_iterations: int = 300,
           step_tolerance: float = 1e-6) -> RecoveryResult:
    """Compressive sampling matching pursuit."""
    b, grid = _unpack(dictionary)
    y = np.asarray(y, dtype=complex)
    dof, n_cols = b.shape
    h = np.zeros(n_cols, dtype=complex)
    y_norm = np.linalg.norm(y)
    if sparsity <= 0 or y_norm == 0:
        return _result([], h, grid)
    r = y.copy()
    r_norm = y_norm
    support: list[int] = []
    it = 0
    for it in range(1, max_iterations + 1):
        proxy = np.abs(b.conj().T @ r)
        omega = np.argsort(-proxy, kind="stable")[:2 * sparsity]
        merged = np.union1d(omega, np.asarray(support, dtype=int))
        if merged.size > dof:
            merged = np.sort(merged[np.argsort(-proxy[merged], kind="stable")[:dof]])
        est, _ = _fit_independent(b, y, merged)
        keep = _top(est, sparsity)
        keep = keep[est[keep] != 0]
        # Refit on the pruned support: on a coherent grid the merged fit can
        # hold large cancelling coefficients that pruning alone would keep.
        h, support = _fit_independent(b, y, [int(i) for i in keep])
        r = y - b @ h
        new_norm = np.linalg.norm(r)
        if new_norm <= step_tolerance * y_norm or abs(r_norm - new_norm) <= step_tolerance * y_norm:
            break
        r_norm = new_norm
    return _result(support, h, grid, iterations=it)
