"""Spatial-smoothing MUSIC on the contiguous part of the difference coarray."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dictionary import AngularGrid
from .geometry import CoarrayIndex, contiguous_extent
from .numerics import hermitian_eig
from .signal_model import steering_from_sines


@dataclass(frozen=True)
class MusicSpectrum:
    grid: AngularGrid
    values: np.ndarray

    def peak_to_median(self) -> float:
        return float(np.max(self.values) / np.median(self.values))

    def to_csv(self, path: str | Path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["sine", "value"])
            for s, v in zip(self.grid.sines, self.values):
                w.writerow([f"{s:.10g}", f"{v:.10g}"])


def contiguous_segment(index: CoarrayIndex) -> int:
    return contiguous_extent(index)


def smoothed_covariance(values: np.ndarray, index: CoarrayIndex) -> np.ndarray:
    """Average of ``z_i z_i^H`` over the M + 1 overlapping subvectors.

    Subvector ``i`` covers lags ``i - M .. i`` of the contiguous segment.
    """
    m = contiguous_extent(index)
    lag_pos = {int(l): k for k, l in enumerate(index.lags)}
    seg = np.asarray(values)[[lag_pos[l] for l in range(-m, m + 1)]]
    subs = np.stack([seg[i:i + m + 1] for i in range(m + 1)], axis=1)
    return subs @ subs.conj().T / (m + 1)


def local_maxima(values: np.ndarray) -> np.ndarray:
    """Indices of circular local maxima, tallest first.

    The spectrum is periodic in sine (period 2) for integer lags, so the grid
    ends are neighbours.
    """
    left = np.roll(values, 1)
    right = np.roll(values, -1)
    peaks = np.flatnonzero((values > left) & (values >= right))
    return peaks[np.argsort(-values[peaks], kind="stable")]


def ss_music(coarray_vec, index: CoarrayIndex, grid: AngularGrid, n_sources: int):
    """Pseudospectrum ``1 / ||E_n^H a(sin)||^2`` and the ``n_sources`` tallest peaks.

    Returns ``(spectrum, doas)``; fewer DOAs are reported when the spectrum
    has fewer local maxima.
    """
    values = getattr(coarray_vec, "values", coarray_vec)
    m = contiguous_extent(index)
    if n_sources < 1:
        raise ValueError("n_sources must be at least 1")
    if n_sources >= m + 1:
        raise ValueError(
            f"{n_sources} sources need a contiguous coarray segment longer than {m + 1}")
    r = smoothed_covariance(values, index)
    _, vecs = hermitian_eig(r)
    noise = vecs[:, : m + 1 - n_sources]
    a = steering_from_sines(np.arange(m + 1), grid.sines)
    proj = np.sum(np.abs(noise.conj().T @ a) ** 2, axis=0)
    spec = 1.0 / np.maximum(proj, np.finfo(float).tiny)
    peaks = local_maxima(spec)[:n_sources]
    return MusicSpectrum(grid, spec), np.sort(grid.angles[peaks])
