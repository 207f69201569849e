"""Command line front end.

Subcommands mirror the library surface: rank-table dumps the geometry
of a model file, verdict and diversity evaluate the analytic
predictions on feature-count grids, classify-sweep and
reconstruct-sweep run the Monte Carlo experiments, and region-map
rasterizes verdict predicates over a rectangle of feature counts.

Every run writes its outputs plus a JSON manifest that echoes the
inputs (config digest, seeds, grid) so the run can be replayed. Errors
print one machine-parseable line to stderr: an EUSAGE / ECONFIG /
EMODEL line exits 1, an ERUNTIME line exits 2.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import os
import sys
import time

from . import __version__
from .classify import classification_phase_verdict, diversity_order, exp_decay_verdict
from .experiments import (
    REGION_PREDICATES,
    ProbeSpec,
    SweepConfig,
    diversity_csv_text,
    atomic_write_text,
    log_grid,
    region_map,
    run_sweep,
    verdict_csv_text,
    write_manifest,
    geometry_csv_texts,
)
from .geometry import geometry_summary
from .model import ConfigError, ModelError, load_model
from .reconstruct import THEOREMS, reconstruction_phase_verdict


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse would sys.exit(2); route through our exit-code policy instead
    def error(self, message):
        raise _UsageError(message)


def _parse_range(text):
    """Inclusive integer range "a..b", or a single "n"."""
    s = str(text).strip()
    try:
        if ".." in s:
            a_str, b_str = s.split("..", 1)
            a, b = int(a_str), int(b_str)
        else:
            a = b = int(s)
    except ValueError:
        raise _UsageError(f"expected INT or INT..INT, got {text!r}") from None
    if a < 0 or b < a:
        raise _UsageError(f"range {text!r} must be non-negative and non-decreasing")
    return list(range(a, b + 1))


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(65536), b""):
            h.update(block)
    return h.hexdigest()


def _out_path(args, name):
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, name)


def _manifest(args, command, params, outputs, started):
    return {
        "command": command,
        "config": args.config,
        "config_sha256": _sha256(args.config),
        "package_version": __version__,
        "params": params,
        "outputs": sorted(outputs),
        "wall_time_s": round(time.monotonic() - started, 3),
    }


def _add_common(p):
    p.add_argument("--config", required=True, help="model file (TOML)")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--tol-factor", type=float, default=100.0, help="rank threshold factor")


def _add_sweep_args(p):
    p.add_argument("--m1", type=int, required=True)
    p.add_argument("--m2", type=int, required=True)
    p.add_argument("--mode", choices=("side_info", "distributed"), default="side_info")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sigma2-max", type=float, default=1e-1)
    p.add_argument("--sigma2-min", type=float, default=1e-8)
    p.add_argument("--per-decade", type=int, default=5)
    p.add_argument("--kernel", choices=("gaussian", "identity2"), default="gaussian")
    p.add_argument(
        "--freeze-kernel",
        type=int,
        default=None,
        metavar="SEED",
        help="reuse a single kernel drawn from SEED instead of one per trial",
    )


def _build_parser():
    top = _Parser(prog="gmmsi", description=__doc__.splitlines()[0])
    top.add_argument("--version", action="version", version=f"gmmsi {__version__}")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rank-table", help="rank geometry of a model, two CSVs")
    _add_common(p)

    p = sub.add_parser("verdict", help="analytic verdicts over feature-count ranges")
    _add_common(p)
    p.add_argument("--m1", required=True, help="INT or INT..INT")
    p.add_argument("--m2", required=True, help="INT or INT..INT")
    p.add_argument(
        "--predicate",
        default="classify_si",
        help="comma list from " + ",".join(REGION_PREDICATES),
    )

    p = sub.add_parser("diversity", help="decay exponents over feature-count ranges")
    _add_common(p)
    p.add_argument("--m1", required=True)
    p.add_argument("--m2", required=True)
    p.add_argument("--mode", choices=("side_info", "distributed", "both"), default="side_info")

    p = sub.add_parser("classify-sweep", help="Monte Carlo error-rate sweep")
    _add_common(p)
    _add_sweep_args(p)

    p = sub.add_parser("reconstruct-sweep", help="Monte Carlo squared-error sweep")
    _add_common(p)
    _add_sweep_args(p)

    p = sub.add_parser("region-map", help="verdict predicates over an (m1, m2) rectangle")
    _add_common(p)
    p.add_argument("--m1", required=True)
    p.add_argument("--m2", required=True)
    p.add_argument("--theorem", default="classify_si", help="comma list of predicates")
    p.add_argument("--probe", action="store_true", help="numerical oracle check per cell")
    p.add_argument("--probe-sigma2", type=float, default=1e-10)
    p.add_argument("--probe-kernels", type=int, default=20)
    p.add_argument("--probe-seed", type=int, default=0)
    p.add_argument("--probe-target", choices=("x1", "joint"), default="x1")
    return top


def _cmd_rank_table(args, started):
    model = load_model(args.config)
    table = geometry_summary(model, args.tol_factor)
    comp_text, pair_text = geometry_csv_texts(table)
    atomic_write_text(_out_path(args, "components.csv"), comp_text)
    atomic_write_text(_out_path(args, "pairs.csv"), pair_text)
    outputs = ["components.csv", "pairs.csv", "rank_table.manifest.json"]
    write_manifest(
        _out_path(args, "rank_table.manifest.json"),
        _manifest(args, "rank-table", {"tol_factor": args.tol_factor}, outputs, started),
    )
    print(f"wrote components.csv and pairs.csv to {args.out}")
    return 0


def _verdict_for(geometry, m1, m2, predicate):
    if predicate in ("classify_si", "classify_dc"):
        mode = "side_info" if predicate.endswith("_si") else "distributed"
        if geometry.zero_mean:
            return classification_phase_verdict(geometry, m1, m2, mode)
        return exp_decay_verdict(geometry, m1, m2, mode)
    return reconstruction_phase_verdict(geometry, m1, m2, predicate)


def _cmd_verdict(args, started):
    model = load_model(args.config)
    geometry = geometry_summary(model, args.tol_factor)
    predicates = [s.strip() for s in args.predicate.split(",") if s.strip()]
    for pred in predicates:
        if pred not in REGION_PREDICATES:
            raise _UsageError(f"unknown predicate {pred!r}; choose from {REGION_PREDICATES}")
    rows = []
    for pred in predicates:
        for m1 in _parse_range(args.m1):
            for m2 in _parse_range(args.m2):
                rows.append(_verdict_for(geometry, m1, m2, pred))
    atomic_write_text(_out_path(args, "verdicts.csv"), verdict_csv_text(rows))
    outputs = ["verdicts.csv", "verdict.manifest.json"]
    params = {
        "m1": args.m1,
        "m2": args.m2,
        "predicates": predicates,
        "tol_factor": args.tol_factor,
    }
    write_manifest(
        _out_path(args, "verdict.manifest.json"),
        _manifest(args, "verdict", params, outputs, started),
    )
    print(f"wrote {len(rows)} verdicts to {args.out}/verdicts.csv")
    return 0


def _cmd_diversity(args, started):
    model = load_model(args.config)
    geometry = geometry_summary(model, args.tol_factor)
    modes = ("side_info", "distributed") if args.mode == "both" else (args.mode,)
    reports = [
        diversity_order(geometry, m1, m2, mode)
        for mode in modes
        for m1 in _parse_range(args.m1)
        for m2 in _parse_range(args.m2)
    ]
    atomic_write_text(_out_path(args, "diversity.csv"), diversity_csv_text(reports))
    outputs = ["diversity.csv", "diversity.manifest.json"]
    params = {"m1": args.m1, "m2": args.m2, "mode": args.mode, "tol_factor": args.tol_factor}
    write_manifest(
        _out_path(args, "diversity.manifest.json"),
        _manifest(args, "diversity", params, outputs, started),
    )
    print(f"wrote {len(reports)} diversity rows to {args.out}/diversity.csv")
    return 0


def _sweep_config(args, model, task):
    grid = log_grid(args.sigma2_min, args.sigma2_max, args.per_decade)
    return SweepConfig(
        model=model,
        task=task,
        m1=args.m1,
        m2=args.m2,
        sigma2_grid=grid,
        trials=args.trials,
        seed=args.seed,
        kernel=args.kernel,
        freeze_kernel=args.freeze_kernel,
    )


def _sweep_params(args):
    return {
        "m1": args.m1,
        "m2": args.m2,
        "mode": args.mode,
        "trials": args.trials,
        "seed": args.seed,
        "sigma2_max": args.sigma2_max,
        "sigma2_min": args.sigma2_min,
        "per_decade": args.per_decade,
        "kernel": args.kernel,
        "freeze_kernel": args.freeze_kernel,
    }


def _cmd_classify_sweep(args, started):
    model = load_model(args.config)
    task = "classify_si" if args.mode == "side_info" else "classify_dc"
    curve = run_sweep(_sweep_config(args, model, task))
    atomic_write_text(_out_path(args, "classify_sweep.csv"), curve.csv_text())
    outputs = ["classify_sweep.csv", "classify_sweep.manifest.json"]
    write_manifest(
        _out_path(args, "classify_sweep.manifest.json"),
        _manifest(args, "classify-sweep", _sweep_params(args), outputs, started),
    )
    print(f"wrote classify_sweep.csv ({curve.sigma2.size} points) to {args.out}")
    return 0


def _cmd_reconstruct_sweep(args, started):
    model = load_model(args.config)
    task = "reconstruct_si" if args.mode == "side_info" else "reconstruct_dc"
    curve = run_sweep(_sweep_config(args, model, task))
    atomic_write_text(_out_path(args, "reconstruct_sweep.csv"), curve.csv_text())
    outputs = ["reconstruct_sweep.csv", "reconstruct_sweep.manifest.json"]
    write_manifest(
        _out_path(args, "reconstruct_sweep.manifest.json"),
        _manifest(args, "reconstruct-sweep", _sweep_params(args), outputs, started),
    )
    print(f"wrote reconstruct_sweep.csv ({curve.sigma2.size} points) to {args.out}")
    return 0


def _cmd_region_map(args, started):
    model = load_model(args.config)
    predicates = [s.strip() for s in args.theorem.split(",") if s.strip()]
    probe = None
    if args.probe:
        probe = ProbeSpec(
            sigma2=args.probe_sigma2,
            kernels=args.probe_kernels,
            seed=args.probe_seed,
            target=args.probe_target,
        )
    grid = region_map(
        model,
        _parse_range(args.m1),
        _parse_range(args.m2),
        predicates=predicates,
        tol_factor=args.tol_factor,
        probe=probe,
    )
    atomic_write_text(_out_path(args, "region_map.csv"), grid.csv_text())
    outputs = ["region_map.csv", "region_map.manifest.json"]
    params = {
        "m1": args.m1,
        "m2": args.m2,
        "predicates": predicates,
        "tol_factor": args.tol_factor,
        "probe": dataclasses.asdict(probe) if probe else None,
    }
    write_manifest(
        _out_path(args, "region_map.manifest.json"),
        _manifest(args, "region-map", params, outputs, started),
    )
    cells = len(grid.m1_values) * len(grid.m2_values)
    print(f"wrote region_map.csv ({cells} cells) to {args.out}")
    return 0


_COMMANDS = {
    "rank-table": _cmd_rank_table,
    "verdict": _cmd_verdict,
    "diversity": _cmd_diversity,
    "classify-sweep": _cmd_classify_sweep,
    "reconstruct-sweep": _cmd_reconstruct_sweep,
    "region-map": _cmd_region_map,
}


def run(argv=None):
    """Parse and execute; returns the process exit status."""
    started = time.monotonic()
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args, started)
    except _UsageError as exc:
        print(f"EUSAGE: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"ECONFIG: {exc}", file=sys.stderr)
        return 1
    except (ModelError, ValueError) as exc:
        print(f"EMODEL: {exc}", file=sys.stderr)
        return 1
    except SystemExit:
        raise
    except Exception as exc:  # anything unexpected
        print(f"ERUNTIME: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(run())
