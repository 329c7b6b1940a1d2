"""Narrowband snapshot generation for uncorrelated Gaussian sources."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import ArrayGeometry


@dataclass(frozen=True)
class SourceScene:
    """DOAs in radians from broadside, per-source powers and noise power."""

    doas: tuple[float, ...]
    powers: tuple[float, ...]
    noise_power: float

    def __post_init__(self):
        doas = tuple(float(t) for t in np.atleast_1d(self.doas))
        powers = tuple(float(p) for p in np.atleast_1d(self.powers))
        if not doas:
            raise ValueError("a scene needs at least one source")
        if len(powers) != len(doas):
            raise ValueError("one power per source is required")
        if any(p <= 0 for p in powers):
            raise ValueError("source powers must be positive")
        if any(abs(t) >= np.pi / 2 for t in doas):
            raise ValueError("DOAs must lie in (-pi/2, pi/2)")
        if self.noise_power < 0:
            raise ValueError("noise power must be non-negative")
        object.__setattr__(self, "doas", doas)
        object.__setattr__(self, "powers", powers)

    @classmethod
    def from_snr(cls, doas, snr_db: float, powers=None) -> "SourceScene":
        """Unit-power sources (unless given) with noise set by SNR in dB."""
        doas = tuple(np.atleast_1d(doas).tolist())
        if powers is None:
            powers = (1.0,) * len(doas)
        return cls(doas, tuple(powers), noise_power_from_snr(snr_db))

    @property
    def n_sources(self) -> int:
        return len(self.doas)


def noise_power_from_snr(snr_db: float, source_power: float = 1.0) -> float:
    return source_power * 10.0 ** (-snr_db / 10.0)


@dataclass(frozen=True)
class CouplingModel:
    """B-banded mutual coupling with ``g(k) = g1 exp(-j (k-1) pi) / k``."""

    enabled: bool = False
    g1: complex = 0.3 * np.exp(1j * np.pi / 3)
    band: int = 100

    def __post_init__(self):
        if self.enabled and abs(self.g1) >= 1:
            raise ValueError("|g1| must be below 1")
        if self.band < 1:
            raise ValueError("coupling band must be positive")

    def coefficient(self, k: int) -> complex:
        if k == 0:
            return 1.0 + 0j
        if k > self.band:
            return 0j
        return complex(self.g1 * np.exp(-1j * (k - 1) * np.pi) / k)


@dataclass(frozen=True)
class SnapshotSet:
    samples: np.ndarray
    sample_covariance: np.ndarray
    # Realized source waveforms; kept for the finite-sample error oracle.
    sources: np.ndarray | None = None

    @property
    def n_snapshots(self) -> int:
        return self.samples.shape[1]

    def source_covariance(self) -> np.ndarray:
        if self.sources is None:
            raise ValueError("source waveforms were not retained")
        return sample_covariance(self.sources)


def steering_matrix(geom: ArrayGeometry | np.ndarray, doas) -> np.ndarray:
    """N x D manifold with entries ``exp(j pi n_k sin(theta_d))``."""
    pos = geom.as_array() if isinstance(geom, ArrayGeometry) else np.asarray(geom)
    sines = np.sin(np.atleast_1d(np.asarray(doas, dtype=float)))
    return steering_from_sines(pos, sines)


def steering_from_sines(positions: np.ndarray, sines: np.ndarray) -> np.ndarray:
    return np.exp(1j * np.pi * np.outer(positions, sines))


def coupling_matrix(geom: ArrayGeometry, model: CouplingModel) -> np.ndarray:
    pos = geom.as_array()
    sep = np.abs(pos[:, None] - pos[None, :])
    coeff = np.array([model.coefficient(k) for k in range(int(sep.max()) + 1)])
    return coeff[sep]


def effective_manifold(geom: ArrayGeometry, doas, coupling: CouplingModel | None = None) -> np.ndarray:
    a = steering_matrix(geom, doas)
    if coupling is not None and coupling.enabled:
        a = coupling_matrix(geom, coupling) @ a
    return a


def circular_gaussian(rng: np.random.Generator, shape, variance=1.0) -> np.ndarray:
    """Zero-mean circular complex Gaussian; real and imaginary parts N(0, var/2)."""
    z = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return z * np.sqrt(np.asarray(variance) / 2.0)


def sample_covariance(samples: np.ndarray) -> np.ndarray:
    t = samples.shape[1]
    c = samples @ samples.conj().T / t
    return (c + c.conj().T) / 2


def analytic_covariance(geom: ArrayGeometry, scene: SourceScene,
                        coupling: CouplingModel | None = None) -> np.ndarray:
    a = effective_manifold(geom, scene.doas, coupling)
    c = (a * np.asarray(scene.powers)) @ a.conj().T
    return c + scene.noise_power * np.eye(geom.n_sensors)


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def simulate_snapshots(geom: ArrayGeometry, scene: SourceScene, coupling: CouplingModel | None,
                       n_snapshots: int, rng_seed=None) -> SnapshotSet:
    """Draw ``x(t) = G A s(t) + n(t)`` for ``t = 1..T`` and its sample covariance."""
    if n_snapshots < 1:
        raise ValueError("need at least one snapshot")
    rng = make_rng(rng_seed)
    d = scene.n_sources
    s = circular_gaussian(rng, (d, n_snapshots), np.asarray(scene.powers)[:, None])
    noise = circular_gaussian(rng, (geom.n_sensors, n_snapshots), scene.noise_power)
    x = effective_manifold(geom, scene.doas, coupling) @ s + noise
    return SnapshotSet(samples=x, sample_covariance=sample_covariance(x), sources=s)
