"""Monte Carlo harness: OSPA sweeps, error-term statistics, overload demo.

Every trial draws its data from a seed derived from
``(master_seed, cell_index, trial_index, ...)`` so results do not depend on
how trials are spread over worker processes. Per-trial values are reduced in
``(cell, trial)`` order.
"""
from __future__ import annotations

import csv
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.optimize import linear_sum_assignment

from .coarray import dctm, edctm, eta_prime_estimated, eta_prime_exact, eta_prime_moments_oracle
from .dictionary import Dictionary, build_grid, cached_dictionary
from .geometry import ArrayGeometry, build_geometry, load_geometry
from .metrics import DEFAULT_PENALTY, ospa_aggregate, ospa_single_trial
from .recovery import cosamp, iht, lbml_omp, omp, romp
from .signal_model import (CouplingModel, SourceScene, analytic_covariance, circular_gaussian,
                           effective_manifold, noise_power_from_snr, simulate_snapshots)
from .subspace import ss_music

log = logging.getLogger(__name__)

DEFAULT_DOAS_PI = (-0.3426, -0.2947, -0.2889, -0.2820, 0.2947)

ALGORITHM_LABELS = {
    "omp": "OMP",
    "lbml_omp": "LBML-OMP",
    "romp": "ROMP",
    "iht": "IHT",
    "cosamp": "CoSaMP",
    "ss_music": "SS-MUSIC",
}
AXES = ("snr_db", "snapshots")


@dataclass(frozen=True)
class ModelSpec:
    """Coarray model for a series: DCTM, exact EDCTM, or EDCTM with alpha noise."""

    name: str = "DCTM"
    alpha: float | None = None

    @classmethod
    def parse(cls, raw) -> "ModelSpec":
        if isinstance(raw, ModelSpec):
            return raw
        if isinstance(raw, dict):
            spec = cls(str(raw.get("name", "DCTM")).upper(), raw.get("alpha"))
        else:
            spec = cls(str(raw).upper())
        if spec.name not in ("DCTM", "EDCTM"):
            raise ValueError(f"unknown coarray model {raw!r}")
        if spec.name == "DCTM" and spec.alpha is not None:
            raise ValueError("alpha only applies to EDCTM")
        return spec

    @property
    def suffix(self) -> str:
        if self.name == "DCTM":
            return ""
        return "_E" if self.alpha is None else f"_E(a={self.alpha:g})"

    def to_json(self):
        return self.name if self.alpha is None else {"name": self.name, "alpha": self.alpha}


@dataclass
class ExperimentConfig:
    name: str = "experiment"
    geometries: list = field(default_factory=lambda: [{"kind": "SNAQ2", "n_sensors": 8}])
    doas_pi: list | None = field(default_factory=lambda: list(DEFAULT_DOAS_PI))
    doa_sines: list | None = None
    powers: list | None = None
    on_grid: bool = True
    axis: str = "snr_db"
    axis_values: list = field(default_factory=lambda: list(range(-10, 21, 2)))
    snr_db: float = 10.0
    snapshots: int = 50
    trials: int = 200
    algorithms: list = field(default_factory=lambda: ["omp", "lbml_omp"])
    models: list = field(default_factory=lambda: ["DCTM"])
    coupling: dict = field(default_factory=lambda: {"enabled": False})
    grid_size: int = 1024
    candidates: int = 11
    penalty: float = DEFAULT_PENALTY
    seed: int = 0
    fail_policy: str = "penalize"
    max_iterations: int = 300
    step_tolerance: float = 1e-6
    record_timing: bool = True
    exact_covariance: bool = False

    def __post_init__(self):
        if self.axis not in AXES:
            raise ValueError(f"axis must be one of {AXES}, got {self.axis!r}")
        if not self.axis_values:
            raise ValueError("axis_values must not be empty")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.fail_policy not in ("penalize", "skip"):
            raise ValueError("fail_policy must be 'penalize' or 'skip'")
        for alg in self.algorithms:
            if alg not in ALGORITHM_LABELS:
                raise ValueError(f"unknown algorithm {alg!r}")
        if not self.geometries:
            raise ValueError("at least one geometry is required")
        self.models = [ModelSpec.parse(m) for m in self.models]

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known - {"experiment", "description"}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**{k: v for k, v in data.items() if k in known})

    @classmethod
    def load(cls, path_or_preset: str | Path) -> "ExperimentConfig":
        return cls.from_dict(load_config_dict(path_or_preset))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["models"] = [m.to_json() for m in self.models]
        return d

    # Derived objects; cheap to rebuild inside workers.
    def geometry_objects(self) -> list[ArrayGeometry]:
        return [geometry_from_config(g) for g in self.geometries]

    def coupling_model(self) -> CouplingModel:
        c = dict(self.coupling)
        g1 = c.get("g1")
        if g1 is None:
            g1 = c.get("g1_abs", 0.3) * np.exp(1j * np.pi * c.get("g1_phase_pi", 1 / 3))
        elif isinstance(g1, (list, tuple)):
            g1 = complex(g1[0], g1[1])
        return CouplingModel(bool(c.get("enabled", False)), complex(g1), int(c.get("band", 100)))

    def true_doas(self) -> np.ndarray:
        if self.doa_sines is not None:
            doas = np.arcsin(np.asarray(self.doa_sines, dtype=float))
        elif self.doas_pi is not None:
            doas = np.pi * np.asarray(self.doas_pi, dtype=float)
        else:
            raise ValueError("config needs doas_pi or doa_sines")
        if self.on_grid:
            doas = build_grid(self.grid_size).snap(doas)
        return np.sort(doas)

    def source_powers(self, n_sources: int) -> np.ndarray:
        if self.powers is None:
            return np.ones(n_sources)
        p = np.asarray(self.powers, dtype=float)
        if p.size != n_sources:
            raise ValueError("one power per source is required")
        return p

    def series(self) -> list[tuple[int, ModelSpec, str, str]]:
        """``(geometry index, model, algorithm, label)`` for every output curve."""
        geoms = self.geometry_objects()
        out = []
        for gi, geom in enumerate(geoms):
            tag = f"[{geom.kind.value}]" if len(geoms) > 1 else ""
            for model in self.models:
                for alg in self.algorithms:
                    out.append((gi, model, alg, f"{ALGORITHM_LABELS[alg]}{model.suffix}{tag}"))
        return out


def load_config_dict(path_or_preset: str | Path) -> dict:
    path = Path(path_or_preset)
    if path.exists():
        return json.loads(path.read_text())
    name = str(path_or_preset)
    if not name.endswith(".json"):
        name += ".json"
    preset = resources.files("coarray_doa").joinpath("presets", name)
    if preset.is_file():
        return json.loads(preset.read_text())
    raise FileNotFoundError(f"no config file or preset named {path_or_preset!r}")


def geometry_from_config(raw) -> ArrayGeometry:
    if isinstance(raw, ArrayGeometry):
        return raw
    kind = str(raw.get("kind", "SNAQ2"))
    if kind.lower() == "custom":
        if "positions" in raw:
            return ArrayGeometry(tuple(raw["positions"]))
        return load_geometry(raw["path"])
    return build_geometry(kind, int(raw["n_sensors"]))


def trial_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key)))


# Stream tags below the trial key.
_STREAM_SNAPSHOTS = 0
_STREAM_ALPHA = 1


@dataclass
class _TrialContext:
    geom: ArrayGeometry
    dictionary: Dictionary
    cov: np.ndarray
    coarray: dict


def _estimate(alg: str, ctx: _TrialContext, y: np.ndarray, n_sources: int, cfg: ExperimentConfig):
    d = ctx.dictionary
    if alg == "omp":
        return omp(d, y, n_sources).doa_estimates
    if alg == "lbml_omp":
        return lbml_omp(d, y, n_sources, ctx.cov, cfg.candidates).doa_estimates
    if alg == "romp":
        return romp(d, y, n_sources + 1).doa_estimates
    if alg == "iht":
        return iht(d, y, n_sources + 1, cfg.max_iterations, cfg.step_tolerance).doa_estimates
    if alg == "cosamp":
        return cosamp(d, y, n_sources + 1, cfg.max_iterations, cfg.step_tolerance).doa_estimates
    if alg == "ss_music":
        return ss_music(y, ctx.geom.index, d.grid, n_sources)[1]
    raise ValueError(alg)


def _cell_setting(cfg: ExperimentConfig, cell: int) -> tuple[float, int]:
    value = cfg.axis_values[cell]
    if cfg.axis == "snr_db":
        return float(value), int(cfg.snapshots)
    return float(cfg.snr_db), int(value)


def _run_block(cfg_dict: dict, cell: int, trials: list[int]):
    """Per-trial OSPA terms, failure flags and wall time for one block of trials."""
    cfg = ExperimentConfig.from_dict(cfg_dict)
    snr, n_snap = _cell_setting(cfg, cell)
    doas = cfg.true_doas()
    n_src = doas.size
    scene = SourceScene(tuple(doas), tuple(cfg.source_powers(n_src)), noise_power_from_snr(snr))
    coupling = cfg.coupling_model()
    geoms = cfg.geometry_objects()
    dicts = [cached_dictionary(g.positions, cfg.grid_size) for g in geoms]
    series = cfg.series()
    alphas = sorted({m.alpha for m in cfg.models if m.alpha is not None})
    need_eta = any(m.name == "EDCTM" for m in cfg.models)

    terms = np.full((len(series), len(trials)), np.nan)
    failed = np.zeros((len(series), len(trials)), dtype=bool)
    seconds = np.zeros(len(series))
    for t, trial in enumerate(trials):
        contexts = []
        for gi, geom in enumerate(geoms):
            idx = geom.index
            snaps = simulate_snapshots(geom, scene, coupling, n_snap,
                                       trial_rng(cfg.seed, cell, trial, gi, _STREAM_SNAPSHOTS))
            cov = snaps.sample_covariance
            if cfg.exact_covariance:
                cov = analytic_covariance(geom, scene, coupling)
            variants = {ModelSpec("DCTM"): dctm(cov, idx).values}
            if need_eta:
                eta = np.zeros(idx.dof, dtype=complex) if cfg.exact_covariance else \
                    eta_prime_exact(geom, doas, snaps.source_covariance(), idx, coupling)
                variants[ModelSpec("EDCTM")] = edctm(cov, eta, idx).values
                for ai, alpha in enumerate(alphas):
                    noisy = eta_prime_estimated(
                        eta, alpha, trial_rng(cfg.seed, cell, trial, gi, _STREAM_ALPHA, ai))
                    variants[ModelSpec("EDCTM", alpha)] = edctm(cov, noisy, idx, alpha).values
            contexts.append(_TrialContext(geom, dicts[gi], cov, variants))

        for s, (gi, model, alg, _) in enumerate(series):
            ctx = contexts[gi]
            start = time.perf_counter()
            try:
                est = _estimate(alg, ctx, ctx.coarray[model], n_src, cfg)
            except (np.linalg.LinAlgError, ValueError, FloatingPointError) as exc:
                log.debug("trial %d/%d %s failed: %s", cell, trial, alg, exc)
                est = np.zeros(0)
                failed[s, t] = True
            seconds[s] += time.perf_counter() - start
            terms[s, t] = ospa_single_trial(est, doas, cfg.penalty)
    return cell, trials, terms, failed, seconds


@dataclass
class SweepResult:
    name: str
    axis: str
    axis_values: list
    labels: list[str]
    ospa: np.ndarray        # series x cells
    trials: np.ndarray      # series x cells (trials that entered the average)
    failures: np.ndarray    # series x cells
    seconds: np.ndarray     # series x cells
    record_timing: bool = True

    def series(self, label: str) -> np.ndarray:
        return self.ospa[self.labels.index(label)]

    def rows(self):
        for c, value in enumerate(self.axis_values):
            for s, label in enumerate(self.labels):
                yield value, label, self.ospa[s, c], int(self.trials[s, c]), self.seconds[s, c]

    def write_csv(self, path: str | Path):
        path = Path(path)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["axis", "algorithm", "ospa", "trials", "seconds"])
            for value, label, o, n, sec in self.rows():
                w.writerow([f"{value:g}", label, f"{o:.12g}", n,
                            f"{sec:.6f}" if self.record_timing else "0"])
        return path

    def write_gnuplot(self, csv_path: str | Path, path: str | Path | None = None):
        csv_path = Path(csv_path)
        path = Path(path) if path is not None else csv_path.with_suffix(".gp")
        xlabel = "SNR (dB)" if self.axis == "snr_db" else "snapshots"
        lines = [
            "set datafile separator ','",
            f"set xlabel '{xlabel}'",
            "set ylabel 'OSPA (rad)'",
            "set logscale y",
            "set key outside right",
            "set terminal pngcairo size 900,600",
            f"set output '{csv_path.with_suffix('.png').name}'",
        ]
        plots = [f"'{csv_path.name}' using 1:(strcol(2) eq '{label}' ? $3 : 1/0) "
                 f"with linespoints title '{label}'" for label in self.labels]
        lines.append("plot " + ", \\\n     ".join(plots))
        path.write_text("\n".join(lines) + "\n")
        return path


def _blocks(n_cells: int, n_trials: int, block: int):
    for cell in range(n_cells):
        for start in range(0, n_trials, block):
            yield cell, list(range(start, min(start + block, n_trials)))


def _map(fn, args_list, workers: int):
    if workers <= 1:
        return [fn(*a) for a in args_list]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, *a) for a in args_list]
        return [f.result() for f in futures]


def run_sweep(config: ExperimentConfig, workers: int = 1, block_size: int | None = None) -> SweepResult:
    """OSPA of every series at every axis value, averaged over ``config.trials``."""
    cfg_dict = config.to_dict()
    labels = [s[3] for s in config.series()]
    n_cells, n_trials = len(config.axis_values), config.trials
    if block_size is None:
        block_size = max(1, math.ceil(n_trials / max(1, 2 * workers)))
    jobs = [(cfg_dict, cell, trials) for cell, trials in _blocks(n_cells, n_trials, block_size)]
    results = _map(_run_block, jobs, workers)

    terms = np.full((len(labels), n_cells, n_trials), np.nan)
    failed = np.zeros((len(labels), n_cells, n_trials), dtype=bool)
    seconds = np.zeros((len(labels), n_cells))
    for cell, trials, t, f, sec in results:
        terms[:, cell, trials] = t
        failed[:, cell, trials] = f
        seconds[:, cell] += sec

    ospa = np.zeros((len(labels), n_cells))
    used = np.zeros((len(labels), n_cells), dtype=int)
    for s in range(len(labels)):
        for c in range(n_cells):
            keep = ~failed[s, c] if config.fail_policy == "skip" else np.ones(n_trials, dtype=bool)
            used[s, c] = int(keep.sum())
            ospa[s, c] = ospa_aggregate(terms[s, c, keep]) if keep.any() else np.nan
    return SweepResult(config.name, config.axis, list(config.axis_values), labels, ospa, used,
                       failed.sum(axis=2), seconds, config.record_timing)


# --------------------------------------------------------------------------- #
# Error-term statistics


@dataclass
class EtaStatistics:
    snapshots: list[int]
    mean: np.ndarray             # complex, per T
    std_error: np.ndarray        # (T, 2) for real / imaginary parts
    variance: np.ndarray         # empirical E|eta_1 - mean|^2
    oracle_variance: np.ndarray
    histograms: dict             # T -> (edges, re_density, im_density)
    trials: int

    def write_csv(self, out_dir: str | Path, name: str = "eta_stats") -> list[Path]:
        out_dir = Path(out_dir)
        stats = out_dir / f"{name}.csv"
        with open(stats, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["snapshots", "mean_re", "mean_im", "se_re", "se_im",
                        "variance", "oracle_variance", "trials"])
            for i, t in enumerate(self.snapshots):
                w.writerow([t, f"{self.mean[i].real:.10g}", f"{self.mean[i].imag:.10g}",
                            f"{self.std_error[i, 0]:.10g}", f"{self.std_error[i, 1]:.10g}",
                            f"{self.variance[i]:.10g}", f"{self.oracle_variance[i]:.10g}",
                            self.trials])
        hist = out_dir / f"{name}_hist.csv"
        with open(hist, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["snapshots", "bin_left", "bin_right", "density_re", "density_im"])
            for t, (edges, re_d, im_d) in self.histograms.items():
                for k in range(re_d.size):
                    w.writerow([t, f"{edges[k]:.8g}", f"{edges[k + 1]:.8g}",
                                f"{re_d[k]:.8g}", f"{im_d[k]:.8g}"])
        return [stats, hist]


def simulate_eta_entry(geom: ArrayGeometry, doas, powers, n_snapshots: int, n_draws: int,
                       seed: int, entry: int = 0, cell: int = 0, batch: int = 2000,
                       coupling: CouplingModel | None = None) -> np.ndarray:
    """``n_draws`` realizations of one error-term entry under sample source covariances."""
    a = effective_manifold(geom, doas, coupling)
    rows, cols = geom.index.row_col()
    left = a[rows[entry]]
    right = a[cols[entry]].conj()
    p = np.sqrt(np.asarray(powers, dtype=float))[:, None]
    out = np.empty(n_draws, dtype=complex)
    for b, start in enumerate(range(0, n_draws, batch)):
        n = min(batch, n_draws - start)
        rng = trial_rng(seed, cell, b)
        s = circular_gaussian(rng, (n, len(doas), n_snapshots)) * p
        cs = np.einsum("lat,lbt->lab", s, s.conj()) / n_snapshots
        idx = np.arange(len(doas))
        cs[:, idx, idx] = 0
        out[start:start + n] = np.einsum("a,lab,b->l", left, cs, right)
    return out


def run_eta_statistics(config: ExperimentConfig, snapshots=None, entry: int = 0,
                       bins: int = 64) -> EtaStatistics:
    """Empirical moments and histograms of one error-term entry against T."""
    geom = config.geometry_objects()[0]
    doas = config.true_doas()
    powers = config.source_powers(doas.size)
    coupling = config.coupling_model()
    snapshots = [int(t) for t in (snapshots if snapshots is not None else config.axis_values)]
    l = config.trials
    mean = np.zeros(len(snapshots), dtype=complex)
    se = np.zeros((len(snapshots), 2))
    var = np.zeros(len(snapshots))
    oracle = np.zeros(len(snapshots))
    hists = {}
    for i, t in enumerate(snapshots):
        x = simulate_eta_entry(geom, doas, powers, t, l, config.seed, entry, cell=i,
                               coupling=coupling)
        mean[i] = x.mean()
        se[i] = [x.real.std(ddof=1) / np.sqrt(l), x.imag.std(ddof=1) / np.sqrt(l)]
        var[i] = np.sum(np.abs(x - mean[i]) ** 2) / (l - 1)
        oracle[i] = eta_prime_moments_oracle(geom, doas, powers, t, coupling=coupling)[1][entry]
        lim = max(np.abs(x.real).max(), np.abs(x.imag).max(), 1e-12)
        edges = np.linspace(-lim, lim, bins + 1)
        re_d, _ = np.histogram(x.real, edges, density=True)
        im_d, _ = np.histogram(x.imag, edges, density=True)
        hists[t] = (edges, re_d, im_d)
    return EtaStatistics(snapshots, mean, se, var, oracle, hists, l)


# --------------------------------------------------------------------------- #
# More sources than sensors


@dataclass
class OverloadResult:
    true_bins: np.ndarray
    grid_sines: np.ndarray
    supports: list[np.ndarray]       # grid indices per trial
    magnitudes: list[np.ndarray]     # |h| at those indices
    hits: np.ndarray                 # sources found within tolerance, per trial
    tolerance_bins: int

    def write_csv(self, out_dir: str | Path, name: str = "overload") -> list[Path]:
        out_dir = Path(out_dir)
        spikes = out_dir / f"{name}.csv"
        with open(spikes, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["trial", "sine", "magnitude"])
            for t, (sup, mag) in enumerate(zip(self.supports, self.magnitudes)):
                for i, m in zip(sup, mag):
                    w.writerow([t, f"{self.grid_sines[i]:.8g}", f"{m:.10g}"])
        summary = out_dir / f"{name}_hits.csv"
        with open(summary, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["trial", "hits", "sources"])
            for t, h in enumerate(self.hits):
                w.writerow([t, int(h), self.true_bins.size])
        return [spikes, summary]


def count_hits(estimated_bins, true_bins, tolerance: int = 2) -> int:
    """Number of true bins with an estimate within ``tolerance`` bins (one-to-one)."""
    est = np.asarray(estimated_bins, dtype=int)
    tru = np.asarray(true_bins, dtype=int)
    if est.size == 0 or tru.size == 0:
        return 0
    close = np.abs(est[:, None] - tru[None, :]) <= tolerance
    rows, cols = linear_sum_assignment(-close.astype(float))
    return int(close[rows, cols].sum())


def run_overload_demo(config: ExperimentConfig, tolerance_bins: int = 2, workers: int = 1) -> OverloadResult:
    """LBML-OMP with more sources than sensors; one spike pattern per trial."""
    geom = config.geometry_objects()[0]
    d = cached_dictionary(geom.positions, config.grid_size)
    doas = config.true_doas()
    if doas.size + 1 > geom.index.dof:
        raise ValueError("the coarray is too small for this many sources")
    true_bins = d.grid.nearest(np.sin(doas))
    block = max(1, math.ceil(config.trials / max(1, 2 * workers)))
    jobs = [(config.to_dict(), trials) for _, trials in _blocks(1, config.trials, block)]
    results = _map(_overload_block, jobs, workers)
    supports, mags = [], []
    for sup, mag in results:
        supports.extend(sup)
        mags.extend(mag)
    hits = np.array([count_hits(s, true_bins, tolerance_bins) for s in supports])
    return OverloadResult(true_bins, d.grid.sines, supports, mags, hits, tolerance_bins)


def _overload_block(cfg_dict: dict, trials: list[int]):
    cfg = ExperimentConfig.from_dict(cfg_dict)
    geom = cfg.geometry_objects()[0]
    d = cached_dictionary(geom.positions, cfg.grid_size)
    doas = cfg.true_doas()
    snr, n_snap = _cell_setting(cfg, 0)
    scene = SourceScene(tuple(doas), tuple(cfg.source_powers(doas.size)), noise_power_from_snr(snr))
    coupling = cfg.coupling_model()
    supports, mags = [], []
    for trial in trials:
        if cfg.exact_covariance:
            cov = analytic_covariance(geom, scene, coupling)
        else:
            cov = simulate_snapshots(geom, scene, coupling, n_snap,
                                     trial_rng(cfg.seed, 0, trial, 0, _STREAM_SNAPSHOTS)).sample_covariance
        res = lbml_omp(d, dctm(cov, geom.index).values, doas.size, cov, cfg.candidates)
        sup = np.array(sorted(res.grid_support), dtype=int)
        supports.append(sup)
        mags.append(np.abs(res.coefficients[sup]))
    return supports, mags
