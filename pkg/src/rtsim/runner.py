"""Run orchestration: single runs, paired real/ideal runs, and sweeps.

A sweep is a cross product of GPU counts, collective sizes, L2 sizes, and
optimization variants; each cell executes an independent real/ideal pair in
its own subdirectory and contributes one row to the aggregate CSV. Cells are
independent, so they may run in parallel worker processes; the aggregate is
written by a single collector after all cells finish, in deterministic cell
order.
"""

from __future__ import annotations

import csv
import dataclasses
import os
from multiprocessing import get_context

from .config import ConfigError, SimConfig
from .metrics import overhead_vs_ideal, write_summary
from .sim import run_simulation

SWEEP_COLUMNS = [
    "num_gpus", "collective_size", "request_size", "l2_entries",
    "pretranslate", "prefetch", "seed",
    "completion_real_ns", "completion_ideal_ns", "overhead",
    "rt_mean_ns", "rt_median_ns", "rt_p99_ns", "rt_fraction",
    "frac_forward", "frac_rt", "frac_hbm", "frac_ack",
    "l1_hit", "l1_mshr_hum", "l2_hit", "l2_mshr_hum", "walk_partial", "walk_full",
    "walks_total", "initial_page_walks", "boundary_walks",
    "mshr_stall_ns_total", "peak_working_set", "status",
]

OPTIM_VARIANTS = ("baseline", "pretranslate", "prefetch")


def run_single(cfg: SimConfig, out_dir: str | None = None) -> dict:
    return run_simulation(cfg, out_dir)


def run_pair(cfg: SimConfig, out_dir: str | None = None) -> tuple[dict, dict, dict]:
    """Real + ideal runs with an identical plan and seed, plus the comparison."""
    real_cfg = dataclasses.replace(cfg, mode="real")
    ideal_cfg = dataclasses.replace(cfg, mode="ideal")
    real_dir = os.path.join(out_dir, "real") if out_dir else None
    ideal_dir = os.path.join(out_dir, "ideal") if out_dir else None
    real = run_simulation(real_cfg, real_dir)
    ideal = run_simulation(ideal_cfg, ideal_dir)
    comparison = {
        "overhead": overhead_vs_ideal(real, ideal),
        "completion_real_ns": real["completion_ns"],
        "completion_ideal_ns": ideal["completion_ns"],
        "num_gpus": cfg.num_gpus,
        "collective_size": cfg.collective_size,
        "request_size": cfg.request_size,
        "seed": cfg.seed,
    }
    if out_dir:
        write_summary(comparison, os.path.join(out_dir, "comparison.json"))
    return real, ideal, comparison


def _apply_variant(cfg: SimConfig, variant: str) -> SimConfig:
    if variant == "baseline":
        return cfg
    if variant == "pretranslate":
        optim = dataclasses.replace(cfg.optim, pretranslate_enabled=True)
        return dataclasses.replace(cfg, optim=optim)
    if variant == "prefetch":
        optim = dataclasses.replace(cfg.optim, prefetch_enabled=True)
        return dataclasses.replace(cfg, optim=optim)
    raise ConfigError(f"unknown optimization variant {variant!r} "
                      f"(expected one of {OPTIM_VARIANTS})")


def _cell_name(gpus: int, size: int, l2: int, variant: str) -> str:
    return f"gpus{gpus}_size{size}_l2{l2}_{variant}"


def sweep_cells(base: SimConfig, gpu_list, size_list, l2_list=None,
                optim_variants=("baseline",)):
    """Deterministically ordered list of (name, config) sweep cells."""
    if not gpu_list:
        raise ConfigError("sweep: empty GPU list")
    if not size_list:
        raise ConfigError("sweep: empty size list")
    l2_list = list(l2_list) if l2_list else [base.tlb.l2_entries]
    cells = []
    for gpus in gpu_list:
        for size in size_list:
            for l2 in l2_list:
                for variant in optim_variants:
                    tlb = dataclasses.replace(base.tlb, l2_entries=l2)
                    cfg = dataclasses.replace(base, num_gpus=gpus,
                                              collective_size=size, tlb=tlb)
                    cfg = _apply_variant(cfg, variant)
                    # cell validation happens at run time: an invalid cell is
                    # recorded as failed without aborting the sweep
                    cells.append((_cell_name(gpus, size, l2, variant), cfg))
    return cells


def _run_cell(args):
    name, cfg, out_dir = args
    cell_dir = os.path.join(out_dir, name) if out_dir else None
    try:
        real, ideal, comparison = run_pair(cfg, cell_dir)
        return name, _sweep_row(cfg, real, ideal, comparison), None
    except Exception as exc:  # failed cells are recorded and skipped
        return name, None, f"{type(exc).__name__}: {exc}"


def _sweep_row(cfg: SimConfig, real: dict, ideal: dict, comparison: dict) -> dict:
    outcomes = real["outcome_counts"]
    walk_partial = sum(v for k, v in outcomes.items()
                       if k.startswith("WALK_PARTIAL_"))
    return {
        "num_gpus": cfg.num_gpus,
        "collective_size": cfg.collective_size,
        "request_size": cfg.request_size,
        "l2_entries": cfg.tlb.l2_entries,
        "pretranslate": int(cfg.optim.pretranslate_enabled),
        "prefetch": int(cfg.optim.prefetch_enabled),
        "seed": cfg.seed,
        "completion_real_ns": real["completion_ns"],
        "completion_ideal_ns": ideal["completion_ns"],
        "overhead": comparison["overhead"],
        "rt_mean_ns": real["rt_latency_ns"]["mean"],
        "rt_median_ns": real["rt_latency_ns"]["median"],
        "rt_p99_ns": real["rt_latency_ns"]["p99"],
        "rt_fraction": real["rt_fraction_mean"],
        "frac_forward": real["stage_fractions_mean"]["forward"],
        "frac_rt": real["stage_fractions_mean"]["reverse_translation"],
        "frac_hbm": real["stage_fractions_mean"]["hbm"],
        "frac_ack": real["stage_fractions_mean"]["ack"],
        "l1_hit": outcomes.get("L1_HIT", 0),
        "l1_mshr_hum": outcomes.get("L1_MSHR_HUM", 0),
        "l2_hit": outcomes.get("L2_HIT", 0),
        "l2_mshr_hum": outcomes.get("L2_MSHR_HUM", 0),
        "walk_partial": walk_partial,
        "walk_full": outcomes.get("WALK_FULL", 0),
        "walks_total": real["walks"]["total"],
        "initial_page_walks": real["initial_page_walks"],
        "boundary_walks": real["boundary_walks"],
        "mshr_stall_ns_total": real["mshr"]["stall_ns_total"],
        "peak_working_set": real["working_set"]["peak_pages_max"],
        "status": "ok",
    }


def sweep(base: SimConfig, gpu_list, size_list, l2_list=None,
          optim_variants=("baseline",), out_dir: str | None = None,
          jobs: int = 1):
    """Run the sweep cross product; returns (rows, failures).

    The aggregate CSV lands at <out_dir>/sweep.csv with one row per cell in
    deterministic order regardless of worker scheduling.
    """
    cells = sweep_cells(base, gpu_list, size_list, l2_list, optim_variants)
    work = [(name, cfg, out_dir) for name, cfg in cells]
    results = {}
    if jobs > 1:
        with get_context("spawn").Pool(jobs) as pool:
            for name, row, err in pool.map(_run_cell, work):
                results[name] = (row, err)
    else:
        for item in work:
            name, row, err = _run_cell(item)
            results[name] = (row, err)

    rows, failures = [], []
    for name, _cfg in cells:
        row, err = results[name]
        if err is not None:
            failures.append((name, err))
            rows.append({col: "" for col in SWEEP_COLUMNS}
                        | {"status": f"failed: {err}"})
        else:
            rows.append(row)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        path = os.path.join(out_dir, "sweep.csv")
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS)
            writer.writeheader()
            writer.writerows(rows)
    return rows, failures


# -- tidy per-figure CSV exports -------------------------------------------------

FIGURE_KINDS = ("overhead", "avg_rt", "roundtrip_stack", "outcome_stack",
                "per_request", "tlb_sweep")


def export_plot_data(sweep_dir: str, out_dir: str,
                     trace_path: str | None = None,
                     trace_src_gpu: int = 0) -> list[str]:
    """Export tidy CSVs for each figure kind from a sweep directory.

    The per-request export needs a trace; pass one explicitly or let the
    exporter pick the first cell trace it finds.
    """
    sweep_path = os.path.join(sweep_dir, "sweep.csv")
    if not os.path.exists(sweep_path):
        raise FileNotFoundError(f"no sweep.csv under {sweep_dir}")
    with open(sweep_path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.DictReader(fh) if r["status"] == "ok"]
    os.makedirs(out_dir, exist_ok=True)
    written = []

    def emit(name, columns, data):
        path = os.path.join(out_dir, name)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(columns)
            writer.writerows(data)
        written.append(path)

    emit("fig_overhead.csv", ["num_gpus", "collective_size", "overhead"],
         [(r["num_gpus"], r["collective_size"], r["overhead"]) for r in rows])
    emit("fig_avg_rt.csv", ["num_gpus", "collective_size", "rt_mean_ns"],
         [(r["num_gpus"], r["collective_size"], r["rt_mean_ns"]) for r in rows])
    emit("fig_roundtrip_stack.csv",
         ["num_gpus", "collective_size", "frac_forward", "frac_rt",
          "frac_hbm", "frac_ack"],
         [(r["num_gpus"], r["collective_size"], r["frac_forward"], r["frac_rt"],
           r["frac_hbm"], r["frac_ack"]) for r in rows])
    outcome_rows = []
    for r in rows:
        total = sum(int(r[k]) for k in ("l1_hit", "l1_mshr_hum", "l2_hit",
                                        "l2_mshr_hum", "walk_partial", "walk_full"))
        if not total:
            continue
        for key in ("l1_hit", "l1_mshr_hum", "l2_hit", "l2_mshr_hum",
                    "walk_partial", "walk_full"):
            outcome_rows.append((r["num_gpus"], r["collective_size"],
                                 key.upper(), int(r[key]) / total))
    emit("fig_outcome_stack.csv",
         ["num_gpus", "collective_size", "outcome", "fraction"], outcome_rows)
    emit("fig_tlb_sweep.csv",
         ["l2_entries", "num_gpus", "collective_size", "overhead"],
         [(r["l2_entries"], r["num_gpus"], r["collective_size"], r["overhead"])
          for r in rows])

    if trace_path is None:
        for entry in sorted(os.listdir(sweep_dir)):
            candidate = os.path.join(sweep_dir, entry, "real", "trace.csv")
            if os.path.exists(candidate):
                trace_path = candidate
                break
    if trace_path is not None and os.path.exists(trace_path):
        per_request = []
        with open(trace_path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                if row["rt_outcome"] in ("PREFETCH",):
                    continue
                if int(row["src"]) != trace_src_gpu:
                    continue
                per_request.append((len(per_request),
                                    int(row["rt_end_ns"]) - int(row["rt_start_ns"]),
                                    row["rt_outcome"]))
        emit("fig_per_request.csv", ["request_index", "rt_ns", "outcome"],
             per_request)
    return written
