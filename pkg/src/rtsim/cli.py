"""Command-line interface.

Verbs, one per reproduction workflow:
  run        one simulation (real or ideal)
  run-pair   paired real/ideal runs plus the overhead comparison
  sweep      cross product of GPU counts x sizes x L2 sizes x optimizations
  validate   parse + validate a config and echo the resolved form
  plot-data  export tidy per-figure CSVs from a sweep directory

Flags override config-file keys (dotted paths); RTSIM_OUT sets the default
output root. Exit codes: 0 success, 1 validation failure, 2 run failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .config import ConfigError, SimConfig, apply_overrides, load_config, parse_size
from .engine import SimulationError
from .metrics import MetricsError
from .runner import OPTIM_VARIANTS, export_plot_data, run_pair, sweep
from .sim import run_simulation

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUN = 2


def _out_root(value: str | None) -> str:
    return value or os.environ.get("RTSIM_OUT", "results")


def _load(args) -> SimConfig:
    cfg = load_config(args.config) if args.config else SimConfig()
    overrides = list(args.set or [])
    if getattr(args, "gpus_single", None):
        overrides.append(f"num_gpus={args.gpus_single}")
    if getattr(args, "size_single", None):
        overrides.append(f"collective_size={args.size_single}")
    if getattr(args, "request_size", None):
        overrides.append(f"request_size={args.request_size}")
    if getattr(args, "seed", None) is not None:
        overrides.append(f"seed={args.seed}")
    if getattr(args, "mode", None):
        overrides.append(f"mode={args.mode}")
    cfg = apply_overrides(cfg, overrides)
    return cfg.validate()


def _add_common(p, with_mode=True):
    p.add_argument("-c", "--config", help="YAML config file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a config key (dotted path), repeatable")
    p.add_argument("--gpus", dest="gpus_single", help="number of GPUs")
    p.add_argument("--size", dest="size_single",
                   help="collective size (bytes or e.g. 1MB)")
    p.add_argument("--request-size", help="remote-store request size in bytes")
    p.add_argument("--seed", type=int, help="permutation seed")
    p.add_argument("-o", "--out", help="output directory (default $RTSIM_OUT)")
    if with_mode:
        p.add_argument("--mode", choices=["real", "ideal"])


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.replace(",", " ").split() if v]


def _size_list(text: str) -> list[int]:
    return [parse_size(v) for v in text.replace(",", " ").split() if v]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="rtsim",
        description="Destination-side reverse-translation overhead simulator "
                    "for All-to-All collectives on scale-up GPU pods.")
    sub = parser.add_subparsers(dest="verb", required=True)

    p_run = sub.add_parser("run", help="run one simulation")
    _add_common(p_run)

    p_pair = sub.add_parser("run-pair", help="paired real/ideal runs")
    _add_common(p_pair, with_mode=False)

    p_sweep = sub.add_parser("sweep", help="cross-product sweep")
    _add_common(p_sweep, with_mode=False)
    p_sweep.add_argument("--gpus-list", default="16",
                         help="comma-separated GPU counts")
    p_sweep.add_argument("--sizes", default="1MB",
                         help="comma-separated collective sizes")
    p_sweep.add_argument("--l2", default="",
                         help="comma-separated L2 TLB entry counts")
    p_sweep.add_argument("--optim", default="baseline",
                         help=f"comma-separated variants from {OPTIM_VARIANTS}")
    p_sweep.add_argument("--jobs", type=int, default=1,
                         help="parallel worker processes")

    p_val = sub.add_parser("validate", help="validate a config file")
    p_val.add_argument("-c", "--config", required=True)
    p_val.add_argument("--set", action="append", metavar="KEY=VALUE")

    p_plot = sub.add_parser("plot-data",
                            help="export per-figure CSVs from a sweep directory")
    p_plot.add_argument("--sweep-dir", required=True)
    p_plot.add_argument("-o", "--out", help="output directory for figure CSVs")
    p_plot.add_argument("--trace", help="trace.csv for the per-request export")
    p_plot.add_argument("--trace-src-gpu", type=int, default=0)

    args = parser.parse_args(argv)

    try:
        if args.verb == "validate":
            cfg = load_config(args.config)
            cfg = apply_overrides(cfg, list(args.set or [])).validate()
            json.dump(cfg.resolved_dict(), sys.stdout, indent=2)
            print()
            return EXIT_OK

        if args.verb == "plot-data":
            out = _out_root(args.out)
            written = export_plot_data(args.sweep_dir, out, args.trace,
                                       args.trace_src_gpu)
            for path in written:
                print(path)
            return EXIT_OK

        cfg = _load(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out = _out_root(args.out)
    try:
        if args.verb == "run":
            summary = run_simulation(cfg, out)
            print(json.dumps({
                "mode": summary["mode"],
                "completion_ns": summary["completion_ns"],
                "total_requests": summary["total_requests"],
                "rt_mean_ns": summary["rt_latency_ns"]["mean"],
                "out": out,
            }, indent=2))
            return EXIT_OK
        if args.verb == "run-pair":
            real, ideal, comparison = run_pair(cfg, out)
            print(json.dumps(comparison, indent=2))
            return EXIT_OK
        if args.verb == "sweep":
            gpu_list = _int_list(args.gpus_list)
            size_list = _size_list(args.sizes)
            l2_list = _int_list(args.l2) if args.l2 else None
            variants = tuple(v.strip() for v in args.optim.split(",") if v.strip())
            rows, failures = sweep(cfg, gpu_list, size_list, l2_list, variants,
                                   out_dir=out, jobs=args.jobs)
            print(f"{len(rows)} sweep rows -> {os.path.join(out, 'sweep.csv')}")
            if failures:
                for name, err in failures:
                    print(f"cell {name} failed: {err}", file=sys.stderr)
                return EXIT_RUN
            return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SimulationError, MetricsError, OSError) as exc:
        print(f"run error: {exc}", file=sys.stderr)
        return EXIT_RUN
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
