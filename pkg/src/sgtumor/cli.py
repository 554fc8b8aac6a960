"""Command-line front end.

Examples::

    sgtumor run --scenario testIa --method sg --K 4 --T 1.0 --out out/ia
    sgtumor run --config my.cfg --set numerics.m=40 --method sc
    sgtumor study k-convergence --scenario testIa --K 1..5 --T 0.5 --out out/conv
    sgtumor study m-sweep --scenario testII --m 10,40,80,160,320 --T 0.5 --K 4
    sgtumor study timing --scenario testIa --T 0.01,0.03,0.05 --K 4

Exit status: 0 on success, 2 for configuration errors, 3 when a solver fails.
The environment variable ``SGTUMOR_THREADS`` sets the collocation worker count.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (convergence_study, m_differences, m_sweep, sc_moment_pair, sg_moments,
                       slice_at, timing_comparison, write_table)
from .chaos import order_for_size
from .collocation import NodeRunError, default_workers, run_node, sc_run, weighted_moments
from .fieldio import write_csv, write_field
from .kernel import StepError
from .scenarios import NAMES, load_scenario_file, make_scenario
from .sg import StochasticGalerkin
from .species import SpeciesGalerkin, run_species_node

log = logging.getLogger("sgtumor")

METHODS = ("det", "sg", "sc", "species-sg", "species-sc")
STUDIES = ("k-convergence", "m-sweep", "timing")
EXIT_CONFIG = 2
EXIT_SOLVER = 3


class ConfigError(ValueError):
    pass


def parse_int_list(text: str) -> list[int]:
    """``"1..5"`` or ``"1,2,4"``."""
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(v) for v in text.split(",") if v.strip()]


def parse_float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _common(p: argparse.ArgumentParser):
    p.add_argument("--scenario", choices=NAMES, help="catalogue scenario")
    p.add_argument("--config", help="scenario file with 'key = value' lines")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a scenario parameter (repeatable)")
    p.add_argument("--out", default="out", help="output directory (default: out)")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sgtumor", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="single deterministic / SG / SC / species run")
    _common(run)
    run.add_argument("--method", choices=METHODS, default="sg")
    run.add_argument("--K", type=int, help="number of gPC modes")
    run.add_argument("--nz", type=int, help="Gauss nodes per random dimension")
    run.add_argument("--T", type=float, help="final time")
    run.add_argument("--z", type=parse_float_list, help="node for --method det (default 0)")
    run.add_argument("--snapshots", type=parse_float_list, help="comma-separated output times")
    run.add_argument("--slice-x", type=float, default=-0.3, help="x of the exported slice")
    run.add_argument("--csv", action="store_true", help="also write CSV copies of fields")

    study = sub.add_parser("study", help="convergence, m-sweep and timing studies")
    study.add_argument("kind", choices=STUDIES)
    _common(study)
    study.add_argument("--K", default=None, help="mode counts, e.g. 1..5 (timing: single value)")
    study.add_argument("--nz", type=int, help="reference Gauss nodes per dimension")
    study.add_argument("--T", default=None, help="final time (timing: comma-separated list)")
    study.add_argument("--m", default="10,40,80,160,320", help="m values for the sweep")
    study.add_argument("--repeats", type=int, default=3, help="timing repetitions")
    return parser


def load_config(args):
    overrides = {}
    name = args.scenario
    if args.config:
        fname, fover = load_scenario_file(args.config)
        if name and name != fname:
            raise ConfigError(f"--scenario {name} conflicts with {fname} in {args.config}")
        name = fname
        overrides.update(fover)
    if name is None:
        raise ConfigError("give --scenario or --config")
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = value.strip()
    return name, overrides


def _scenario(args, extra: dict):
    name, overrides = load_config(args)
    overrides.update({k: v for k, v in extra.items() if v is not None})
    return make_scenario(name, overrides)


def _stamp(t: float) -> str:
    return f"t{t:.4f}"


class Writer:
    def __init__(self, out: Path, grid, slice_x: float, csv: bool):
        self.out = out
        self.grid = grid
        self.slice_x = slice_x
        self.csv = csv
        self.rows = []
        self.files = []

    def field(self, label: str, t: float, f: np.ndarray):
        path = self.out / "fields" / f"{label}_{_stamp(t)}.sgf"
        write_field(f, path)
        self.files.append(str(path.relative_to(self.out)))
        if self.csv:
            write_csv(f, path.with_suffix(".csv"))

    def moments(self, label: str, t: float, mean, sd):
        self.field(f"{label}_mean", t, mean)
        self.field(f"{label}_sd", t, sd)
        y, mv = slice_at(mean, self.grid, self.slice_x)
        _, sv = slice_at(sd, self.grid, self.slice_x)
        for yy, a, b in zip(y, mv, sv):
            self.rows.append({"field": label, "t": t, "x": self.slice_x, "y": yy, "mean": a, "sd": b})

    def finish(self, summary: dict):
        write_table(self.rows, self.out / "slices.csv")
        summary["files"] = self.files
        (self.out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True))


def cmd_run(args) -> int:
    sc = _scenario(args, {"T": args.T, "nz": args.nz,
                          "snapshots": None if args.snapshots is None else tuple(args.snapshots)})
    if args.K is not None:
        sc = replace(sc, numerics=replace(sc.numerics, order=order_for_size(sc.dim, args.K)))
    if args.method.startswith("species") and sc.species is None:
        raise ConfigError(f"scenario {sc.name} has no species block")
    grid = sc.grid()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    w = Writer(out, grid, args.slice_x, args.csv)
    num = sc.numerics
    times = num.snapshot_times()
    if num.T not in times:
        times = times + [num.T]

    if args.method == "det":
        z = np.zeros(sc.dim) if args.z is None else np.asarray(args.z, dtype=float)
        if z.size != sc.dim:
            raise ConfigError(f"--z needs {sc.dim} value(s)")
        _, snaps = run_node(sc, z, snapshots=times)
        for t, st in snaps:
            w.moments("rho", t, st.rho, np.zeros_like(st.rho))
    elif args.method == "sg":
        _, snaps = StochasticGalerkin(sc, workers=default_workers()).run(snapshots=times)
        for t, st in snaps:
            m = sg_moments(st)
            w.moments("rho", t, m.mean, m.sd)
    elif args.method == "sc":
        _, series = sc_run(sc, snapshots=times)
        for ens in series:
            m = sc_moment_pair(ens)
            w.moments("rho", ens.t, m.mean, m.sd)
    elif args.method == "species-sg":
        _, snaps = SpeciesGalerkin(sc).run(snapshots=times)
        for t, st in snaps:
            for label, f in st.fields().items():
                m = sg_moments(f)
                w.moments(label, t, m.mean, m.sd)
    else:
        _, series = sc_run(sc, snapshots=times, runner=run_species_node)
        for ens in series:
            for label in ("rho", "P", "Q", "D"):
                vals = np.stack([s.fields()[label][0] for s in ens.states])
                mean, sd = weighted_moments(vals, ens.weights)
                w.moments(label, ens.t, mean, sd)
    w.finish({"scenario": sc.name, "method": args.method, "K": args.K, "order": num.order, "nz": num.nz, "m": num.m, "dx": num.dx,
              "dt": num.dt, "T": num.T, "snapshots": times})
    print(f"wrote {len(w.files)} field files to {out}")
    return 0


def cmd_study(args) -> int:
    out = Path(args.out)
    if args.kind == "k-convergence":
        T = float(args.T) if args.T else None
        sc = _scenario(args, {"T": T})
        Ks = parse_int_list(args.K or "1..5")
        reports = convergence_study(sc, Ks, ref_nz=args.nz)
        rows = [r.row() for r in reports]
        write_table(rows, out / "k_convergence.csv")
        for r in rows:
            print(f"K={r['K']:3d}  Error_mean={r['error_mean']:.3e}  Error_SD={r['error_sd']:.3e}")
    elif args.kind == "m-sweep":
        T = float(args.T) if args.T else None
        sc = _scenario(args, {"T": T})
        order = order_for_size(sc.dim, int(args.K)) if args.K else None
        ms = parse_float_list(args.m)
        results = m_sweep(sc, ms, order=order)
        rows = [{"m": m, "l1_diff_to_2m": d} for m, d in m_differences(results, sc.grid())]
        write_table(rows, out / "m_sweep.csv")
        for r in rows:
            print(f"m={r['m']:g}  ||rho_m - rho_2m||_L1={r['l1_diff_to_2m']:.3e}")
    else:
        sc = _scenario(args, {})
        Ts = parse_float_list(args.T or "0.01,0.03,0.05")
        order = order_for_size(sc.dim, int(args.K)) if args.K else None
        rows = timing_comparison(sc, Ts, sg_order=order, sc_nz=args.nz, repeats=args.repeats,
                                 workers=default_workers())
        write_table(rows, out / "timing.csv")
        for r in rows:
            print(f"T={r['T']:g}  SG={r['sg_seconds']:.3f}s  SC={r['sc_seconds']:.3f}s  "
                  f"SC/SG={r['ratio']:.2f}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return cmd_run(args) if args.command == "run" else cmd_study(args)
    except (ConfigError, KeyError, ValueError, FileNotFoundError) as exc:
        print(f"sgtumor: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (StepError, NodeRunError, FloatingPointError) as exc:
        print(f"sgtumor: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
