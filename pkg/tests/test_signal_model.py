import numpy as np
import pytest

from coarray_doa.geometry import ArrayGeometry, build_geometry
from coarray_doa.signal_model import (CouplingModel, SourceScene, analytic_covariance,
                                      circular_gaussian, coupling_matrix, effective_manifold,
                                      noise_power_from_snr, sample_covariance, simulate_snapshots,
                                      steering_matrix)

G1 = 0.3 * np.exp(1j * np.pi / 3)


class TestSteering:
    def test_broadside_is_all_ones(self, snaq2):
        a = steering_matrix(snaq2, [0.0, 0.3])
        assert np.allclose(a[:, 0], 1.0)

    def test_two_element_value(self):
        a = steering_matrix(build_geometry("ULA", 2), [np.arcsin(0.5)])
        assert np.allclose(a[:, 0], [1.0, 1j], atol=1e-15)

    def test_unit_modulus(self, snaq2, rng):
        a = steering_matrix(snaq2, rng.uniform(-1.5, 1.5, 7))
        assert a.shape == (8, 7)
        assert np.allclose(np.abs(a), 1.0)


class TestCoupling:
    def test_coefficients(self):
        m = CouplingModel(enabled=True)
        assert m.coefficient(0) == 1
        assert np.isclose(m.coefficient(1), G1)
        assert np.isclose(m.coefficient(2), -0.15 * np.exp(1j * np.pi / 3))
        assert np.isclose(m.coefficient(3), G1 / 3)

    def test_band_truncates(self):
        m = CouplingModel(enabled=True, band=2)
        assert m.coefficient(3) == 0

    def test_matrix_layout(self):
        geom = ArrayGeometry((0, 1, 3))
        gm = coupling_matrix(geom, CouplingModel(enabled=True, band=2))
        assert np.allclose(np.diag(gm), 1.0)
        assert np.isclose(gm[0, 1], G1)
        assert np.isclose(gm[1, 2], -G1 / 2)
        assert gm[0, 2] == 0
        assert np.allclose(gm, gm.T)

    def test_disabled_is_identity(self, snaq2):
        doas = [0.1, -0.4]
        assert np.array_equal(effective_manifold(snaq2, doas, CouplingModel()),
                              steering_matrix(snaq2, doas))

    def test_invalid(self):
        with pytest.raises(ValueError):
            CouplingModel(enabled=True, g1=1.2)
        with pytest.raises(ValueError):
            CouplingModel(band=0)


class TestScene:
    def test_snr(self):
        assert noise_power_from_snr(10) == pytest.approx(0.1)
        assert noise_power_from_snr(0) == 1.0
        assert SourceScene.from_snr([0.1, 0.2], -10).noise_power == pytest.approx(10.0)

    @pytest.mark.parametrize("kwargs", [
        dict(doas=(), powers=(), noise_power=1.0),
        dict(doas=(0.1,), powers=(1.0, 1.0), noise_power=1.0),
        dict(doas=(0.1,), powers=(0.0,), noise_power=1.0),
        dict(doas=(2.0,), powers=(1.0,), noise_power=1.0),
        dict(doas=(0.1,), powers=(1.0,), noise_power=-1.0),
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            SourceScene(**kwargs)


class TestSimulation:
    def test_same_seed_bitwise(self, snaq2):
        scene = SourceScene.from_snr([0.2, -0.5], 5)
        a = simulate_snapshots(snaq2, scene, None, 40, rng_seed=7)
        b = simulate_snapshots(snaq2, scene, None, 40, rng_seed=7)
        assert np.array_equal(a.samples, b.samples)
        assert np.array_equal(a.sample_covariance, b.sample_covariance)

    def test_different_seed_differs(self, snaq2):
        scene = SourceScene.from_snr([0.2], 5)
        a = simulate_snapshots(snaq2, scene, None, 10, rng_seed=1)
        b = simulate_snapshots(snaq2, scene, None, 10, rng_seed=2)
        assert not np.allclose(a.samples, b.samples)

    def test_sample_covariance_hermitian_psd(self, snaq2):
        snap = simulate_snapshots(snaq2, SourceScene.from_snr([0.3, 0.5], 0), None, 5, rng_seed=3)
        c = snap.sample_covariance
        assert np.allclose(c, c.conj().T)
        assert np.linalg.eigvalsh(c).min() > -1e-12

    def test_noiseless_single_source_converges(self, snaq2):
        scene = SourceScene((0.4,), (2.0,), 0.0)
        snap = simulate_snapshots(snaq2, scene, None, 100_000, rng_seed=11)
        exact = analytic_covariance(snaq2, scene)
        err = np.linalg.norm(snap.sample_covariance - exact) / np.linalg.norm(exact)
        assert err < 0.05

    def test_noisy_two_sources_converge(self, snaq2):
        scene = SourceScene.from_snr([0.1, -0.7], 0)
        snap = simulate_snapshots(snaq2, scene, None, 50_000, rng_seed=5)
        exact = analytic_covariance(snaq2, scene)
        assert np.linalg.norm(snap.sample_covariance - exact) / np.linalg.norm(exact) < 0.05

    def test_model_is_linear_in_waveforms(self, snaq2):
        scene = SourceScene((0.2, 0.6), (1.0, 1.0), 0.0)
        coupling = CouplingModel(enabled=True)
        snap = simulate_snapshots(snaq2, scene, coupling, 20, rng_seed=4)
        x = effective_manifold(snaq2, scene.doas, coupling) @ snap.sources
        assert np.allclose(snap.samples, x)
        assert np.allclose(snap.source_covariance(), sample_covariance(snap.sources))

    def test_zero_snapshots(self, snaq2):
        with pytest.raises(ValueError):
            simulate_snapshots(snaq2, SourceScene.from_snr([0.1], 0), None, 0)


def test_circular_gaussian_moments(rng):
    z = circular_gaussian(rng, 200_000, 3.0)
    assert np.mean(np.abs(z) ** 2) == pytest.approx(3.0, rel=0.02)
    assert np.var(z.real) == pytest.approx(1.5, rel=0.02)
    assert np.var(z.imag) == pytest.approx(1.5, rel=0.02)
    # circularity: E[z^2] = 0
    assert abs(np.mean(z * z)) < 0.05
