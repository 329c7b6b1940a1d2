"""Command line entry point: ``doa run|eta-stats|overload|geometry``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .experiments import (ExperimentConfig, load_config_dict, run_eta_statistics,
                          run_overload_demo, run_sweep)
from .geometry import UnsupportedGeometryError, build_geometry, contiguous_extent


def _load(args) -> ExperimentConfig:
    data = load_config_dict(args.config)
    data.pop("experiment", None)
    data.pop("description", None)
    if args.trials is not None:
        data["trials"] = args.trials
    if args.seed is not None:
        data["seed"] = args.seed
    if getattr(args, "no_timing", False):
        data["record_timing"] = False
    return ExperimentConfig.from_dict(data)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_run(args) -> int:
    cfg = _load(args)
    result = run_sweep(cfg, workers=args.workers)
    out = _out_dir(args)
    csv_path = result.write_csv(out / f"{cfg.name}.csv")
    result.write_gnuplot(csv_path)
    for value, label, ospa, n, sec in result.rows():
        print(f"{cfg.axis}={value:g}\t{label:<24s}\tOSPA={ospa:.5f}\ttrials={n}\t{sec:.2f}s")
    print(f"wrote {csv_path}")
    return 0


def cmd_eta_stats(args) -> int:
    cfg = _load(args)
    stats = run_eta_statistics(cfg)
    paths = stats.write_csv(_out_dir(args), cfg.name)
    for i, t in enumerate(stats.snapshots):
        print(f"T={t}\tmean={stats.mean[i]:.3e}\tvar={stats.variance[i]:.4e}"
              f"\toracle={stats.oracle_variance[i]:.4e}")
    print("wrote " + ", ".join(str(p) for p in paths))
    return 0


def cmd_overload(args) -> int:
    cfg = _load(args)
    res = run_overload_demo(cfg, workers=args.workers)
    paths = res.write_csv(_out_dir(args), cfg.name)
    print(f"sources={res.true_bins.size} trials={res.hits.size} "
          f"median hits={np.median(res.hits):g} (within +-{res.tolerance_bins} bins)")
    print("wrote " + ", ".join(str(p) for p in paths))
    return 0


def cmd_geometry(args) -> int:
    try:
        geom = build_geometry(args.kind, args.n)
    except UnsupportedGeometryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    idx = geom.index
    print(f"kind: {geom.kind.value}")
    print(f"positions: {' '.join(map(str, geom.positions))}")
    print(f"lags: {' '.join(map(str, idx.lags.tolist()))}")
    print(f"dof: {idx.dof}")
    print(f"contiguous: -{contiguous_extent(idx)}..{contiguous_extent(idx)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="doa", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def experiment(name, fn, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", help="JSON config file or preset name (fig1 ... fig6)")
        p.add_argument("--trials", type=int, help="override the number of Monte Carlo trials")
        p.add_argument("--seed", type=int, help="override the master seed")
        p.add_argument("--out", default="results", help="output directory")
        p.add_argument("--workers", type=int, default=1, help="worker processes")
        p.add_argument("--no-timing", action="store_true",
                       help="write 0 in the seconds column (byte-reproducible CSV)")
        p.set_defaults(func=fn)

    experiment("run", cmd_run, "OSPA sweep over SNR or snapshots")
    experiment("eta-stats", cmd_eta_stats, "statistics of the finite-sample error term")
    experiment("overload", cmd_overload, "more sources than sensors with LBML-OMP")

    g = sub.add_parser("geometry", help="print positions, lags and DoF of a layout")
    g.add_argument("kind", help="ULA, NAQ2, SNAQ2, MRA or MHA")
    g.add_argument("n", type=int, help="number of sensors")
    g.set_defaults(func=cmd_geometry)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
