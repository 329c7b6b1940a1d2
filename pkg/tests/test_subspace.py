import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coarray_doa.coarray import dctm
from coarray_doa.geometry import ArrayGeometry, build_geometry
from coarray_doa.signal_model import SourceScene, analytic_covariance
from coarray_doa.subspace import contiguous_segment, local_maxima, smoothed_covariance, ss_music


def exact_vector(geom, grid, bins, powers=None, noise=0.5):
    powers = powers or [1.0] * len(bins)
    scene = SourceScene(tuple(grid.angles[bins]), tuple(powers), noise)
    return dctm(analytic_covariance(geom, scene), geom.index)


class TestSegment:
    def test_examples(self):
        assert contiguous_segment(build_geometry("ULA", 4).index) == 3
        assert contiguous_segment(build_geometry("NAQ2", 8).index) == 19
        assert contiguous_segment(ArrayGeometry((0, 1, 5)).index) == 1

    def test_smoothed_shape(self, snaq2, rng):
        v = rng.standard_normal(39) + 1j * rng.standard_normal(39)
        assert smoothed_covariance(v, snaq2.index).shape == (20, 20)


@given(st.integers(0, 10_000))
@settings(max_examples=50, deadline=None)
def test_smoothed_matrix_hermitian_psd(seed):
    geom = build_geometry("NAQ2", 6)
    rng = np.random.default_rng(seed)
    m = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    r = smoothed_covariance(dctm(m + m.conj().T, geom.index).values, geom.index)
    assert np.allclose(r, r.conj().T)
    assert np.linalg.eigvalsh(r).min() >= -1e-9 * max(1.0, np.abs(r).max())


class TestSsMusic:
    @pytest.mark.parametrize("b", [3, 200, 512, 1000])
    def test_single_source(self, snaq2, grid1024, b):
        _, doas = ss_music(exact_vector(snaq2, grid1024, [b]), snaq2.index, grid1024, 1)
        assert np.allclose(doas, grid1024.angles[[b]])

    def test_two_sources_exact(self, snaq2, grid1024):
        rng = np.random.default_rng(0)
        for _ in range(50):
            bins = np.sort(rng.choice(np.arange(1, 1024), 2, replace=False))
            y = exact_vector(snaq2, grid1024, bins, powers=[1.0, 2.0])
            _, doas = ss_music(y, snaq2.index, grid1024, 2)
            assert np.allclose(doas, grid1024.angles[bins])

    def test_white_input_is_flat(self, snaq2, grid1024):
        spec, doas = ss_music(dctm(np.eye(8), snaq2.index), snaq2.index, grid1024, 2)
        assert spec.peak_to_median() < 1.5
        assert doas.size <= 2

    def test_spectrum_nonnegative_finite(self, snaq2, grid1024):
        spec, _ = ss_music(exact_vector(snaq2, grid1024, [100, 600]), snaq2.index, grid1024, 2)
        assert np.all(np.isfinite(spec.values)) and np.all(spec.values >= 0)
        assert spec.peak_to_median() > 1e6

    @pytest.mark.parametrize("d", [0, 20])
    def test_invalid_source_count(self, snaq2, grid1024, d):
        with pytest.raises(ValueError):
            ss_music(np.ones(39), snaq2.index, grid1024, d)

    def test_csv(self, snaq2, grid1024, tmp_path):
        spec, _ = ss_music(exact_vector(snaq2, grid1024, [300]), snaq2.index, grid1024, 1)
        path = tmp_path / "spec.csv"
        spec.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "sine,value"
        assert len(lines) == 1025
        assert float(lines[1].split(",")[0]) == -1.0


@given(st.lists(st.floats(0, 100), min_size=3, max_size=60))
@settings(max_examples=200, deadline=None)
def test_local_maxima_are_peaks(values):
    v = np.asarray(values)
    peaks = local_maxima(v)
    for p in peaks:
        assert v[p] >= v[p - 1] and v[p] >= v[(p + 1) % v.size]
    assert np.all(np.diff(v[peaks]) <= 0)
