import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coarray_doa.geometry import (MHA_TABLE, MRA_TABLE, ArrayGeometry, GeometryKind,
                                  UnsupportedGeometryError, build_geometry, coarray_index,
                                  coarray_select, contiguous_extent, load_geometry,
                                  nested_positions, super_nested_positions)

from .conftest import brute_lags


def hole_free(positions):
    span = positions[-1] - positions[0]
    return brute_lags(positions) == list(range(-span, span + 1))


def max_hole_free_aperture(n):
    """Largest aperture of an n-sensor array with a hole-free coarray (exhaustive)."""
    for aperture in range(n * (n - 1) // 2, n - 2, -1):
        for inner in itertools.combinations(range(1, aperture), n - 2):
            if hole_free((0, *inner, aperture)):
                return aperture


class TestBuildGeometry:
    def test_ula(self):
        assert build_geometry("ULA", 4).positions == (0, 1, 2, 3)

    def test_nested_four(self):
        g = build_geometry("NAQ2", 4)
        assert g.positions == (1, 2, 3, 6)
        assert brute_lags(g.positions) == list(range(-5, 6))

    def test_nested_eight(self):
        g = build_geometry(GeometryKind.NAQ2, 8)
        assert g.positions == (1, 2, 3, 4, 5, 10, 15, 20)

    def test_snaq2_eight(self):
        assert build_geometry("SNAQ2", 8).positions == (1, 3, 4, 7, 10, 15, 19, 20)

    @pytest.mark.parametrize("n1", range(4, 17))
    @pytest.mark.parametrize("n2", range(3, 8))
    def test_super_nested_keeps_parent_coarray(self, n1, n2):
        sna = super_nested_positions(n1, n2)
        assert len(set(sna)) == n1 + n2
        assert brute_lags(sna) == brute_lags(nested_positions(n1, n2))

    @pytest.mark.parametrize("n1", range(4, 12))
    def test_super_nested_unit_lag_weight(self, n1):
        # Second-order super nesting leaves lag 1 with weight 1 (odd N1) or 2 (even N1).
        sna = super_nested_positions(n1, 4)
        w1 = sum(1 for a in sna for b in sna if a - b == 1)
        assert w1 == (2 if n1 % 2 == 0 else 1)

    @pytest.mark.parametrize("n", sorted(MRA_TABLE))
    def test_mra_table_hole_free(self, n):
        g = build_geometry("MRA", n)
        assert g.n_sensors == n
        assert hole_free(g.positions)

    @pytest.mark.parametrize("n", [3, 4, 5, 6, 7])
    def test_mra_maximal_aperture(self, n):
        assert build_geometry("MRA", n).aperture == max_hole_free_aperture(n)

    @pytest.mark.parametrize("n", sorted(MHA_TABLE))
    def test_mha_distinct_differences(self, n):
        g = build_geometry("MHA", n)
        assert g.index.dof == n * (n - 1) + 1

    @pytest.mark.parametrize("kind,n", [("MRA", 11), ("MHA", 2), ("SNAQ2", 6), ("ULA", 1),
                                        ("Custom", 4), ("bogus", 4)])
    def test_unsupported(self, kind, n):
        with pytest.raises(UnsupportedGeometryError, match=str(n) if kind != "bogus" else "bogus"):
            build_geometry(kind, n)

    def test_invalid_positions(self):
        with pytest.raises(ValueError):
            ArrayGeometry((0, 2, 2))
        with pytest.raises(ValueError):
            ArrayGeometry((3,))

    def test_load_custom(self, tmp_path):
        f = tmp_path / "array.txt"
        f.write_text("0\n1\n4\n\n6\n")
        g = load_geometry(f)
        assert g.positions == (0, 1, 4, 6)
        assert g.kind is GeometryKind.CUSTOM


class TestCoarrayIndex:
    def test_two_element_ula(self):
        idx = coarray_index(build_geometry("ULA", 2))
        assert idx.diff_vector.tolist() == [0, -1, 1, 0]
        assert idx.lags.tolist() == [-1, 0, 1]
        assert idx.dof == 3

    def test_ula_four(self):
        idx = build_geometry("ULA", 4).index
        assert idx.dof == 7
        assert idx.lags.tolist() == list(range(-3, 4))

    def test_nested_four_four(self):
        idx = ArrayGeometry((1, 2, 3, 4, 5, 10, 15, 20)).index
        assert idx.dof == 39 == 2 * 4 * (4 + 1) - 1
        assert idx.lags.tolist() == list(range(-19, 20))

    def test_first_occurrence(self):
        idx = build_geometry("ULA", 3).index
        c = idx.diff_vector
        for k, sel in enumerate(idx.selection):
            assert sel == np.flatnonzero(c == idx.lags[k])[0]

    def test_select_reproduces_lags(self, snaq2):
        idx = snaq2.index
        assert np.array_equal(coarray_select(idx.diff_vector, idx), idx.lags)

    def test_select_identity_matrix(self):
        idx = build_geometry("ULA", 2).index
        assert coarray_select(np.eye(2).reshape(-1), idx).tolist() == [0, 1, 0]

    def test_select_scatter_round_trip(self, snaq2, rng):
        idx = snaq2.index
        v = rng.standard_normal(64) + 1j * rng.standard_normal(64)
        back = np.zeros_like(v)
        back[idx.selection] = coarray_select(v, idx)
        assert np.array_equal(back[idx.selection], v[idx.selection])

    def test_select_length_mismatch(self, snaq2):
        with pytest.raises(ValueError):
            coarray_select(np.zeros(10), snaq2.index)

    def test_contiguous_extent(self):
        assert contiguous_extent(build_geometry("ULA", 4).index) == 3
        assert contiguous_extent(build_geometry("NAQ2", 8).index) == 19
        # lags of {0, 1, 5}: 0, +-1, +-4, +-5 -> hole at +-2
        assert contiguous_extent(ArrayGeometry((0, 1, 5)).index) == 1


positions_strategy = st.lists(st.integers(0, 40), min_size=2, max_size=9, unique=True).map(sorted)


@given(positions_strategy)
@settings(max_examples=200, deadline=None)
def test_coarray_properties(positions):
    idx = ArrayGeometry(tuple(positions)).index
    lags = idx.lags.tolist()
    assert lags == brute_lags(positions)
    assert lags == sorted(set(lags))
    assert set(lags) == {-l for l in lags}
    assert idx.dof % 2 == 1
    assert lags[(idx.dof + 1) // 2 - 1] == 0


@given(positions_strategy, st.integers(1, 30))
@settings(max_examples=100, deadline=None)
def test_coarray_translation_invariant(positions, shift):
    a = ArrayGeometry(tuple(positions)).index
    b = ArrayGeometry(tuple(p + shift for p in positions)).index
    assert np.array_equal(a.lags, b.lags)
    assert np.array_equal(a.selection, b.selection)


def test_index_depends_only_on_positions():
    a = ArrayGeometry((1, 2, 3, 6), GeometryKind.NAQ2)
    b = ArrayGeometry((1, 2, 3, 6), GeometryKind.CUSTOM)
    assert np.array_equal(a.index.selection, b.index.selection)


def test_ula_dof():
    for n in range(2, 12):
        assert build_geometry("ULA", n).index.dof == 2 * n - 1


@pytest.mark.parametrize("n", range(4, 13))
def test_nested_hole_free_span(n):
    g = build_geometry("NAQ2", n)
    n1, n2 = g.params["N1"], g.params["N2"]
    span = n2 * (n1 + 1) - 1
    assert brute_lags(g.positions) == list(range(-span, span + 1))
