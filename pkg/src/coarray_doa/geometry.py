"""Non-uniform linear array layouts and their difference coarrays.

Sensor positions are integers in units of half a wavelength. The coarray
machinery follows the Kronecker construction ``c = a (x) 1 - 1 (x) a``: entry
``k = i * N + m`` of ``c`` is the difference ``n_i - n_m``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np


class GeometryKind(str, enum.Enum):
    ULA = "ULA"
    NAQ2 = "NAQ2"
    SNAQ2 = "SNAQ2"
    MRA = "MRA"
    MHA = "MHA"
    CUSTOM = "Custom"


class UnsupportedGeometryError(ValueError):
    pass


# Restricted (hole-free) minimum-redundancy layouts.
MRA_TABLE: dict[int, tuple[int, ...]] = {
    3: (0, 1, 3),
    4: (0, 1, 4, 6),
    5: (0, 1, 4, 7, 9),
    6: (0, 1, 6, 9, 11, 13),
    7: (0, 1, 4, 10, 12, 15, 17),
    8: (0, 1, 4, 10, 16, 18, 21, 23),
    9: (0, 1, 4, 10, 16, 22, 24, 27, 29),
    10: (0, 1, 3, 6, 13, 20, 27, 31, 35, 36),
}

# Minimum-hole layouts: every nonzero difference occurs exactly once.
MHA_TABLE: dict[int, tuple[int, ...]] = {
    3: (0, 1, 3),
    4: (0, 1, 4, 6),
    5: (0, 1, 4, 9, 11),
    6: (0, 1, 4, 10, 12, 17),
    7: (0, 1, 4, 10, 18, 23, 25),
    8: (0, 1, 4, 9, 15, 22, 32, 34),
    9: (0, 1, 5, 12, 25, 27, 35, 41, 44),
    10: (0, 1, 6, 10, 23, 26, 34, 41, 53, 55),
}


@dataclass(frozen=True)
class CoarrayIndex:
    """Selection machinery mapping vectorized N x N quantities onto the coarray.

    Attributes:
        diff_vector: all N**2 pairwise differences ``c``, with repetition.
        selection: indices into ``diff_vector`` (the set H), ordered so that
            ``diff_vector[selection]`` is ascending.
        lags: distinct coarray lags, ascending.
    """

    diff_vector: np.ndarray
    selection: np.ndarray
    lags: np.ndarray

    @property
    def dof(self) -> int:
        return int(self.lags.size)

    @property
    def center(self) -> int:
        """0-based position of the zero lag."""
        return (self.dof - 1) // 2

    @property
    def n_sensors(self) -> int:
        return int(round(np.sqrt(self.diff_vector.size)))

    def row_col(self) -> tuple[np.ndarray, np.ndarray]:
        """Sensor pair ``(i, m)`` behind each selected lag, ``lag = n_i - n_m``."""
        n = self.n_sensors
        return self.selection // n, self.selection % n


@dataclass(frozen=True)
class ArrayGeometry:
    positions: tuple[int, ...]
    kind: GeometryKind = GeometryKind.CUSTOM
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        pos = tuple(int(p) for p in self.positions)
        if len(pos) < 2:
            raise ValueError("an array needs at least two sensors")
        if any(p < 0 for p in pos):
            raise ValueError("sensor positions must be non-negative")
        if any(b <= a for a, b in zip(pos, pos[1:])):
            raise ValueError(f"positions must be strictly increasing: {pos}")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "kind", GeometryKind(self.kind))

    @property
    def n_sensors(self) -> int:
        return len(self.positions)

    @property
    def aperture(self) -> int:
        return self.positions[-1] - self.positions[0]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.positions, dtype=np.int64)

    @cached_property
    def index(self) -> CoarrayIndex:
        return coarray_index(self)

    def __str__(self):
        return f"{self.kind.value}(N={self.n_sensors}): {list(self.positions)}"


def nested_positions(n1: int, n2: int) -> list[int]:
    """Two-level nested array: dense ``1..n1`` plus sparse ``m (n1 + 1)``."""
    return list(range(1, n1 + 1)) + [m * (n1 + 1) for m in range(1, n2 + 1)]


def super_nested_positions(n1: int, n2: int) -> list[int]:
    """Second-order super nested array derived from the (n1, n2) nested parent.

    The dense subarray of the parent is split into four interleaved sparse
    pieces and one element moves next to the end of the sparse subarray, which
    keeps the coarray of the parent while lowering the weight of small lags.
    """
    if n1 < 4 or n2 < 3:
        raise UnsupportedGeometryError(
            f"SNAQ2 needs N1 >= 4 and N2 >= 3, got N1={n1}, N2={n2}")
    r, rem = divmod(n1, 4)
    a1, b1, a2, b2 = {
        0: (r, r - 1, r - 1, r - 2),
        1: (r, r - 1, r, r - 2),
        2: (r + 1, r - 1, r, r - 2),
        3: (r, r, r, r - 1),
    }[rem]
    x1 = [1 + 2 * l for l in range(a1 + 1)]
    y1 = [(n1 + 1) - (1 + 2 * l) for l in range(b1 + 1)]
    x2 = [(n1 + 1) + (2 + 2 * l) for l in range(a2 + 1)]
    y2 = [2 * (n1 + 1) - (2 + 2 * l) for l in range(b2 + 1)]
    z1 = [l * (n1 + 1) for l in range(2, n2 + 1)]
    z2 = [n2 * (n1 + 1) - 1]
    return sorted(x1 + y1 + x2 + y2 + z1 + z2)


def split_nested(n_sensors: int) -> tuple[int, int]:
    return (n_sensors + 1) // 2, n_sensors // 2


def build_geometry(kind: GeometryKind | str, n_sensors: int) -> ArrayGeometry:
    """Construct one of the standard layouts with ``n_sensors`` elements.

    Nested and super nested arrays split the sensors as
    ``N1 = ceil(N/2)``, ``N2 = floor(N/2)``.
    """
    try:
        kind = GeometryKind(kind)
    except ValueError:
        raise UnsupportedGeometryError(f"unknown geometry kind {kind!r}") from None
    n = int(n_sensors)
    if n < 2:
        raise UnsupportedGeometryError(f"{kind.value} with N={n}: need N >= 2")

    if kind is GeometryKind.ULA:
        return ArrayGeometry(tuple(range(n)), kind)
    if kind is GeometryKind.NAQ2:
        n1, n2 = split_nested(n)
        return ArrayGeometry(tuple(nested_positions(n1, n2)), kind, {"N1": n1, "N2": n2})
    if kind is GeometryKind.SNAQ2:
        n1, n2 = split_nested(n)
        if n1 < 4 or n2 < 3:
            raise UnsupportedGeometryError(
                f"SNAQ2 with N={n}: needs N1 >= 4 and N2 >= 3 (N >= 7)")
        return ArrayGeometry(tuple(super_nested_positions(n1, n2)), kind,
                             {"N1": n1, "N2": n2})
    if kind in (GeometryKind.MRA, GeometryKind.MHA):
        table = MRA_TABLE if kind is GeometryKind.MRA else MHA_TABLE
        if n not in table:
            raise UnsupportedGeometryError(
                f"{kind.value} with N={n}: no stored layout (available: {sorted(table)})")
        return ArrayGeometry(table[n], kind)
    raise UnsupportedGeometryError(
        f"{kind.value} with N={n}: custom layouts are loaded from positions")


def load_geometry(path: str | Path) -> ArrayGeometry:
    """Read a custom layout: one integer position per line, ascending."""
    positions = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            positions.append(int(line))
    return ArrayGeometry(tuple(positions), GeometryKind.CUSTOM)


def coarray_index(geom: ArrayGeometry) -> CoarrayIndex:
    """Build ``c``, the selection set H, and the sorted lag set."""
    a = geom.as_array()
    ones = np.ones_like(a)
    c = np.kron(a, ones) - np.kron(ones, a)
    # np.unique returns the first occurrence of each value, already sorted.
    lags, first = np.unique(c, return_index=True)
    return CoarrayIndex(diff_vector=c, selection=first, lags=lags)


def coarray_select(full_vector: np.ndarray, index: CoarrayIndex) -> np.ndarray:
    full_vector = np.asarray(full_vector)
    if full_vector.shape != index.diff_vector.shape:
        raise ValueError(
            f"expected a vector of length {index.diff_vector.size}, got shape {full_vector.shape}")
    return full_vector[index.selection]


def contiguous_extent(index: CoarrayIndex) -> int:
    """Largest M such that every lag in ``-M..M`` is present."""
    present = set(index.lags.tolist())
    m = 0
    while m + 1 in present and -(m + 1) in present:
        m += 1
    return m
