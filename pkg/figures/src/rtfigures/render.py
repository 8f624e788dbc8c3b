"""Render simulator result CSVs into static figures.

Six figure kinds, one per reproduction workflow:

  overhead        grouped bars: completion overhead vs ideal, by GPU count
                  and collective size (columns: num_gpus, collective_size,
                  overhead)
  avg_rt          mean reverse-translation latency per request (columns:
                  num_gpus, collective_size, rt_mean_ns)
  roundtrip_stack per-request round-trip composition, stacked (columns:
                  collective_size, frac_forward, frac_rt, frac_hbm, frac_ack)
  outcome_stack   translation outcome mix, stacked (columns:
                  collective_size, outcome, fraction)
  per_request     per-request reverse-translation latency scatter (columns:
                  request_index, rt_ns; optional outcome)
  tlb_sweep       overhead vs L2 TLB capacity (columns: l2_entries, overhead)

Rendering is read-only over the inputs and deterministic given them. A
schema mismatch or an empty input is an error; no empty image is emitted.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "rtsim-figures"  # stable SVG element ids

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

KINDS = ("overhead", "avg_rt", "roundtrip_stack", "outcome_stack",
         "per_request", "tlb_sweep")

REQUIRED_COLUMNS = {
    "overhead": ("num_gpus", "collective_size", "overhead"),
    "avg_rt": ("num_gpus", "collective_size", "rt_mean_ns"),
    "roundtrip_stack": ("collective_size", "frac_forward", "frac_rt",
                        "frac_hbm", "frac_ack"),
    "outcome_stack": ("collective_size", "outcome", "fraction"),
    "per_request": ("request_index", "rt_ns"),
    "tlb_sweep": ("l2_entries", "overhead"),
}

STAGE_LABELS = [("frac_forward", "network (forward)"),
                ("frac_rt", "reverse translation"),
                ("frac_hbm", "HBM write"),
                ("frac_ack", "ack (return)")]


class FigureDataError(ValueError):
    pass


@dataclass
class FigureSpec:
    kind: str
    inputs: list[str] = field(default_factory=list)
    output: str = "figure.png"


def _load_rows(path: str, kind: str) -> list[dict]:
    if not os.path.exists(path):
        raise FigureDataError(f"input file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for column in REQUIRED_COLUMNS[kind]:
            if column not in header:
                raise FigureDataError(
                    f"{path}: missing required column '{column}' for "
                    f"figure kind '{kind}'")
        rows = [r for r in reader if r.get("status", "ok").startswith("ok")
                or "status" not in r]
    if not rows:
        raise FigureDataError(f"{path}: no data rows; refusing to emit an "
                              f"empty figure")
    return rows


def _size_label(size_bytes: int) -> str:
    mib = size_bytes / (1024 * 1024)
    if mib >= 1024:
        return f"{mib / 1024:g}GB"
    return f"{mib:g}MB"


def _sizes_sorted(rows, key="collective_size"):
    return sorted({int(r[key]) for r in rows})


def _render_overhead(rows, ax):
    gpus = sorted({int(r["num_gpus"]) for r in rows})
    sizes = _sizes_sorted(rows)
    width = 0.8 / max(len(sizes), 1)
    for i, size in enumerate(sizes):
        xs, ys = [], []
        for j, g in enumerate(gpus):
            match = [float(r["overhead"]) for r in rows
                     if int(r["num_gpus"]) == g
                     and int(r["collective_size"]) == size]
            if match:
                xs.append(j + i * width)
                ys.append(match[0])
        ax.bar(xs, ys, width=width, label=_size_label(size))
    ax.set_xticks([j + 0.4 - width / 2 for j in range(len(gpus))])
    ax.set_xticklabels([str(g) for g in gpus])
    ax.set_xlabel("GPU count")
    ax.set_ylabel("completion overhead vs ideal (x)")
    ax.set_ylim(bottom=min(1.0, min(float(r["overhead"]) for r in rows)))
    ax.axhline(1.0, color="grey", linewidth=0.8)
    ax.legend(title="collective size")
    ax.set_title("Reverse-translation overhead, normalized to zero-cost translation")


def _render_avg_rt(rows, ax):
    gpus = sorted({int(r["num_gpus"]) for r in rows})
    for g in gpus:
        series = sorted(((int(r["collective_size"]), float(r["rt_mean_ns"]))
                         for r in rows if int(r["num_gpus"]) == g))
        ax.plot([s for s, _ in series], [v for _, v in series],
                marker="o", label=f"{g} GPUs")
    ax.set_xscale("log", base=2)
    ax.set_xlabel("collective size (bytes)")
    ax.set_ylabel("mean reverse-translation latency (ns)")
    ax.legend()
    ax.set_title("Average reverse-translation latency per request")


def _render_roundtrip_stack(rows, ax):
    sizes = _sizes_sorted(rows)
    bottoms = [0.0] * len(sizes)
    by_size = {int(r["collective_size"]): r for r in rows}
    for column, label in STAGE_LABELS:
        values = [float(by_size[s][column]) for s in sizes]
        ax.bar(range(len(sizes)), values, bottom=bottoms, label=label)
        bottoms = [b + v for b, v in zip(bottoms, values)]
    ax.set_xticks(range(len(sizes)))
    ax.set_xticklabels([_size_label(s) for s in sizes])
    ax.set_xlabel("collective size")
    ax.set_ylabel("fraction of round-trip latency")
    ax.legend()
    ax.set_title("Round-trip latency composition per request")


def _render_outcome_stack(rows, ax):
    sizes = _sizes_sorted(rows)
    outcomes = sorted({r["outcome"] for r in rows})
    bottoms = [0.0] * len(sizes)
    for outcome in outcomes:
        values = []
        for s in sizes:
            match = [float(r["fraction"]) for r in rows
                     if int(r["collective_size"]) == s
                     and r["outcome"] == outcome]
            values.append(match[0] if match else 0.0)
        ax.bar(range(len(sizes)), values, bottom=bottoms, label=outcome)
        bottoms = [b + v for b, v in zip(bottoms, values)]
    ax.set_xticks(range(len(sizes)))
    ax.set_xticklabels([_size_label(s) for s in sizes])
    ax.set_xlabel("collective size")
    ax.set_ylabel("fraction of requests")
    ax.legend(fontsize="small")
    ax.set_title("Translation outcomes at the destination hierarchy")


def _render_per_request(rows, ax):
    xs = [int(r["request_index"]) for r in rows]
    ys = [int(r["rt_ns"]) for r in rows]
    ax.scatter(xs, ys, s=2, linewidths=0)
    ax.set_xlabel("request index (one source GPU, in issue order)")
    ax.set_ylabel("reverse-translation latency (ns)")
    ax.set_title("Per-request reverse-translation latency")


def _render_tlb_sweep(rows, ax):
    series = sorted(((int(r["l2_entries"]), float(r["overhead"]))
                     for r in rows))
    ax.plot([e for e, _ in series], [o for _, o in series], marker="s")
    ax.set_xscale("log", base=2)
    ax.set_xlabel("L2 link TLB entries")
    ax.set_ylabel("completion overhead vs ideal (x)")
    ax.axhline(1.0, color="grey", linewidth=0.8)
    ax.set_title("Sensitivity to L2 link TLB capacity")


_RENDERERS = {
    "overhead": _render_overhead,
    "avg_rt": _render_avg_rt,
    "roundtrip_stack": _render_roundtrip_stack,
    "outcome_stack": _render_outcome_stack,
    "per_request": _render_per_request,
    "tlb_sweep": _render_tlb_sweep,
}


def render(spec: FigureSpec):
    """Render one figure; returns the matplotlib Figure after writing it."""
    if spec.kind not in KINDS:
        raise FigureDataError(f"unknown figure kind '{spec.kind}' "
                              f"(expected one of {KINDS})")
    if not spec.inputs:
        raise FigureDataError("no input files given")
    rows = []
    for path in spec.inputs:
        rows.extend(_load_rows(path, spec.kind))
    fig, ax = plt.subplots(figsize=(7, 4.2), dpi=120)
    try:
        _RENDERERS[spec.kind](rows, ax)
        fig.tight_layout()
        out_dir = os.path.dirname(os.path.abspath(spec.output))
        os.makedirs(out_dir, exist_ok=True)
        # strip the embedded timestamp: identical inputs, identical bytes
        metadata = {"Date": None} if spec.output.lower().endswith(".svg") else None
        fig.savefig(spec.output, metadata=metadata)
    except Exception:
        plt.close(fig)
        raise
    return fig
