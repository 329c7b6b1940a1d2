"""Angular grids and the sparse coarray dictionary ``B = [A_D(grid) | i]``."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .geometry import ArrayGeometry, CoarrayIndex
from .signal_model import steering_from_sines


@dataclass(frozen=True)
class AngularGrid:
    sines: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.sines, dtype=float)
        if s.size < 2 or np.any(np.diff(s) <= 0):
            raise ValueError("grid must hold at least two strictly increasing sines")
        if s[0] < -1 or s[-1] > 1:
            raise ValueError("grid sines must lie in [-1, 1]")
        object.__setattr__(self, "sines", s)

    @property
    def angles(self) -> np.ndarray:
        return np.arcsin(self.sines)

    @property
    def size(self) -> int:
        return self.sines.size

    @property
    def spacing(self) -> float:
        return float(self.sines[1] - self.sines[0])

    def nearest(self, sines) -> np.ndarray:
        """Index of the nearest grid point for each sine."""
        s = np.atleast_1d(np.asarray(sines, dtype=float))
        idx = np.clip(np.searchsorted(self.sines, s), 1, self.size - 1)
        left = self.sines[idx - 1]
        right = self.sines[idx]
        return np.where(s - left <= right - s, idx - 1, idx)

    def snap(self, doas) -> np.ndarray:
        """DOAs moved onto the nearest grid angle."""
        return self.angles[self.nearest(np.sin(np.asarray(doas, dtype=float)))]


def build_grid(g: int) -> AngularGrid:
    """``g`` points uniform in sine over ``[-1, 1 - 2/g]``.

    The right end is left open: with integer sensor positions ``sin = 1`` and
    ``sin = -1`` give the same steering vector.
    """
    if g < 2:
        raise ValueError("grid needs at least two points")
    return AngularGrid(-1.0 + 2.0 * np.arange(g) / g)


@dataclass(frozen=True)
class Dictionary:
    matrix: np.ndarray            # dof x (g + 1)
    grid: AngularGrid
    physical_manifold: np.ndarray  # N x g
    lags: np.ndarray

    @property
    def noise_atom(self) -> int:
        """0-based column of the noise atom (the last one)."""
        return self.grid.size

    @property
    def dof(self) -> int:
        return self.matrix.shape[0]


def build_dictionary(geom: ArrayGeometry, index: CoarrayIndex | None, grid: AngularGrid) -> Dictionary:
    index = geom.index if index is None else index
    coarray_part = steering_from_sines(index.lags, grid.sines)
    noise = np.zeros((index.dof, 1), dtype=complex)
    noise[index.center, 0] = 1.0
    return Dictionary(
        matrix=np.hstack([coarray_part, noise]),
        grid=grid,
        physical_manifold=steering_from_sines(geom.as_array(), grid.sines),
        lags=index.lags,
    )


@lru_cache(maxsize=16)
def cached_dictionary(positions: tuple[int, ...], g: int) -> Dictionary:
    geom = ArrayGeometry(positions)
    return build_dictionary(geom, geom.index, build_grid(g))
