#!/usr/bin/env python3
"""Reproduce the standard characterization sweep end to end.

Runs the GPU-count x collective-size grid plus the L2 TLB sensitivity sweep,
exports the tidy per-figure CSVs, and (if rtsim-figures is installed)
renders all six figures. Expect roughly an hour single-threaded with the
default grid; trim --sizes / --gpus for a quick look.
"""

import argparse
import importlib.util
import os
import sys

from rtsim.config import SimConfig, apply_overrides
from rtsim.runner import export_plot_data, sweep

MiB = 1024 * 1024


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("-o", "--out", default="results/full_sweep")
    parser.add_argument("--gpus", default="8,16,32")
    parser.add_argument("--sizes", default="1,4,16,64,256",
                        help="collective sizes in MiB")
    parser.add_argument("--l2-sizes", default="16,32,64,512,32768")
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--set", action="append", default=[],
                        metavar="KEY=VALUE")
    args = parser.parse_args()

    base = apply_overrides(SimConfig(), ["metrics.emit_trace=false"] + args.set)
    gpus = [int(g) for g in args.gpus.split(",")]
    sizes = [int(s) * MiB for s in args.sizes.split(",")]
    l2_sizes = [int(n) for n in args.l2_sizes.split(",")]

    grid_dir = os.path.join(args.out, "grid")
    rows, failures = sweep(base, gpus, sizes, out_dir=grid_dir, jobs=args.jobs)
    print(f"grid: {len(rows)} cells -> {grid_dir}/sweep.csv")

    tlb_dir = os.path.join(args.out, "tlb")
    rows, tlb_failures = sweep(base, [32], [16 * MiB], l2_sizes,
                               out_dir=tlb_dir, jobs=args.jobs)
    print(f"tlb sensitivity: {len(rows)} cells -> {tlb_dir}/sweep.csv")
    failures += tlb_failures

    # one traced run for the per-request figure
    trace_base = apply_overrides(
        base, ["metrics.emit_trace=true", "metrics.trace_sample_every=16"])
    trace_dir = os.path.join(args.out, "trace_256mb")
    sweep(trace_base, [16], [256 * MiB], out_dir=trace_dir)
    trace_path = os.path.join(trace_dir, f"gpus16_size{256 * MiB}_l2512_baseline",
                              "real", "trace.csv")

    fig_dir = os.path.join(args.out, "figure_data")
    export_plot_data(grid_dir, fig_dir, trace_path=trace_path)
    export_plot_data(tlb_dir, os.path.join(args.out, "figure_data_tlb"))
    print(f"figure CSVs -> {fig_dir}")

    if importlib.util.find_spec("rtfigures") is not None:
        from rtfigures import FigureSpec, render
        out_figs = os.path.join(args.out, "figures")
        specs = [
            ("overhead", [os.path.join(fig_dir, "fig_overhead.csv")]),
            ("avg_rt", [os.path.join(fig_dir, "fig_avg_rt.csv")]),
            ("roundtrip_stack", [os.path.join(fig_dir, "fig_roundtrip_stack.csv")]),
            ("outcome_stack", [os.path.join(fig_dir, "fig_outcome_stack.csv")]),
            ("per_request", [os.path.join(fig_dir, "fig_per_request.csv")]),
            ("tlb_sweep", [os.path.join(args.out, "figure_data_tlb",
                                        "fig_tlb_sweep.csv")]),
        ]
        for kind, inputs in specs:
            out = os.path.join(out_figs, f"{kind}.png")
            render(FigureSpec(kind, inputs, out))
            print(f"figure -> {out}")

    if failures:
        for name, err in failures:
            print(f"FAILED cell {name}: {err}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
