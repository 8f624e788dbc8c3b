"""Per-request trace recording, online aggregation, and derived metrics.

The trace CSV schema and the summary JSON key names are stable external
contracts (the plotting component consumes them). Aggregation happens
online, so summaries stay exact even when the trace is sampled.

Per-request identity, checked for every recorded request:
  ack - issue = (net_arrive - issue) + (rt_end - rt_start)
                + (hbm_done - rt_end) + (ack - hbm_done)
and within reverse translation:
  rt_end - rt_start = probe latencies (by outcome) + mshr_stall_ns
                      + walker_queue_ns + walk memory time.
"""

from __future__ import annotations

import csv
import json
from array import array

from . import translation
from .translation import L1_HIT, L2_HIT, PREFETCH, WALK_FULL

TRACE_COLUMNS = [
    "request_id", "src", "dst", "station", "page_index",
    "issue_ns", "net_arrive_ns", "rt_start_ns", "rt_end_ns", "rt_outcome",
    "mshr_stall_ns", "walker_queue_ns", "hbm_done_ns", "ack_ns",
]

SUMMARY_SCHEMA = "rtsim-summary-v1"


class MetricsError(RuntimeError):
    pass


class WorkingSetTracker:
    """Peak count of distinct active destination pages, one per live stream.

    A stream contributes its current page while it has un-acked requests;
    the streaming bound is therefore num_gpus - 1 active pages per GPU.
    """

    __slots__ = ("pages", "peak")

    def __init__(self, num_gpus: int):
        self.pages = [dict() for _ in range(num_gpus)]
        self.peak = [0] * num_gpus

    def stream_page(self, dst: int, old_page: int, new_page: int) -> None:
        pages = self.pages[dst]
        if old_page >= 0:
            n = pages[old_page] - 1
            if n:
                pages[old_page] = n
            else:
                del pages[old_page]
        pages[new_page] = pages.get(new_page, 0) + 1
        if len(pages) > self.peak[dst]:
            self.peak[dst] = len(pages)

    def stream_idle(self, dst: int, page: int) -> None:
        pages = self.pages[dst]
        n = pages[page] - 1
        if n:
            pages[page] = n
        else:
            del pages[page]


class MetricsCollector:
    """Online per-run aggregation plus (optionally sampled) trace emission."""

    def __init__(self, cfg, mode: str, lead_ns: int = 0, trace_path=None):
        self.cfg = cfg
        self.mode = mode
        self.lead_ns = lead_ns
        self.hbm_latency = cfg.fabric.hbm_latency_ns
        self.memory_latency = cfg.fabric.hbm_latency_ns
        self.levels = cfg.walk.levels
        self.sample_every = cfg.metrics.trace_sample_every

        self.total_requests = 0
        self.self_copies = 0
        self.rt_latencies = array("q")
        self.outcome_counts: dict[str, int] = {}
        self.hum_resolution_counts: dict[str, int] = {}
        self.mshr_stall_ns_total = 0
        self.mshr_stalled_requests = 0
        self.walker_queue_ns_total = 0
        self.walker_queued_requests = 0
        self.boundary_walks = 0
        self.initial_page_walks = 0
        self.walks_at_nonfirst_requests = 0
        self.sum_frac_forward = 0.0
        self.sum_frac_rt = 0.0
        self.sum_frac_hbm = 0.0
        self.sum_frac_ack = 0.0
        self.prefetch_issued = 0
        self.prefetch_suppressed = 0
        self.first_seen_pages: set[tuple[int, int]] = set()
        self.working_set = WorkingSetTracker(cfg.num_gpus)

        self._rt_parts: dict[str, tuple[int, int]] = {}
        self._check_cold_start = (mode == "real"
                                  and not cfg.optim.pretranslate_enabled
                                  and not cfg.optim.prefetch_enabled)
        self._page_key_shift = 48  # (dst << shift) | page fits comfortably

        self._trace_file = None
        self._trace = None
        if trace_path is not None:
            self._trace_file = open(trace_path, "w", newline="", encoding="utf-8")
            self._trace = csv.writer(self._trace_file)
            self._trace.writerow(TRACE_COLUMNS)

    # -- recording -----------------------------------------------------------

    def _outcome_parts(self, outcome: str) -> tuple[int, int]:
        probe = translation.probe_latency_for(outcome, self.cfg.tlb, self.cfg.walk)
        walk_mem = 0
        if outcome == WALK_FULL:
            walk_mem = self.levels * self.memory_latency
        elif outcome.startswith("WALK_PARTIAL_"):
            skipped = int(outcome.rsplit("_", 1)[1])
            walk_mem = (self.levels - skipped) * self.memory_latency
        parts = (probe, walk_mem)
        self._rt_parts[outcome] = parts
        return parts

    def record_request(self, req) -> None:
        """Finalize one acked data request: identity checks + aggregation."""
        issue = req.issue_t
        arrive = req.net_arrive_t
        rt_start = req.rt_start_t
        rt_end = req.rt_end_t
        hbm = req.hbm_done_t
        ack = req.ack_t
        outcome = req.outcome

        if not issue <= arrive <= rt_start <= rt_end <= hbm <= ack:
            raise MetricsError(f"non-monotonic timestamps for request {req.id}")
        if rt_start != arrive or hbm - rt_end != self.hbm_latency:
            raise MetricsError(f"stage identity violated for request {req.id}")
        rt = rt_end - rt_start
        total = ack - issue
        if self.mode == "real":
            parts = self._rt_parts.get(outcome)
            if parts is None:
                parts = self._outcome_parts(outcome)
            if parts[0] + req.mshr_stall + req.walker_queue + parts[1] != rt:
                raise MetricsError(
                    f"rt decomposition violated for request {req.id}: "
                    f"{parts[0]}+{req.mshr_stall}+{req.walker_queue}+{parts[1]} != {rt}")
            key = (req.dst << self._page_key_shift) | req.page
            if key not in self.first_seen_pages:
                self.first_seen_pages.add(key)
                if self._check_cold_start and (outcome == L1_HIT or outcome == L2_HIT):
                    raise MetricsError(
                        f"cold-start violation: first request for page "
                        f"{(req.dst, req.page)} recorded {outcome}")

        self.total_requests += 1
        self.rt_latencies.append(rt)
        counts = self.outcome_counts
        counts[outcome] = counts.get(outcome, 0) + 1
        if req.hum_resolution is not None:
            self.hum_resolution_counts[req.hum_resolution] = \
                self.hum_resolution_counts.get(req.hum_resolution, 0) + 1
        if req.mshr_stall:
            self.mshr_stall_ns_total += req.mshr_stall
            self.mshr_stalled_requests += 1
        if req.walker_queue:
            self.walker_queue_ns_total += req.walker_queue
            self.walker_queued_requests += 1
        if outcome[0] == "W":  # WALK_FULL / WALK_PARTIAL_k
            if not req.first_of_page:
                self.walks_at_nonfirst_requests += 1
            if req.page == req.first_page:
                self.initial_page_walks += 1
            else:
                self.boundary_walks += 1
        if total:
            inv = 1.0 / total
            self.sum_frac_forward += (arrive - issue) * inv
            self.sum_frac_rt += rt * inv
            self.sum_frac_hbm += (hbm - rt_end) * inv
            self.sum_frac_ack += (ack - hbm) * inv

        if self._trace is not None and req.id % self.sample_every == 0:
            shift = self.lead_ns
            self._trace.writerow((
                req.id, req.src, req.dst, req.station, req.page,
                issue - shift, arrive - shift, rt_start - shift, rt_end - shift,
                outcome, req.mshr_stall, req.walker_queue,
                hbm - shift, ack - shift))

    def record_prefetch(self, req, rt_end: int) -> None:
        """Translation-only request (warmup or prefetch): trace-only row."""
        self.prefetch_issued += 1
        if self._trace is not None and req.id % self.sample_every == 0:
            shift = self.lead_ns
            t0 = req.issue_t - shift
            self._trace.writerow((
                req.id, req.src, req.dst, req.station, req.page,
                t0, t0, t0, rt_end - shift, PREFETCH,
                req.mshr_stall, req.walker_queue, rt_end - shift, rt_end - shift))

    def record_prefetch_suppressed(self) -> None:
        self.prefetch_suppressed += 1

    def record_self_copy(self) -> None:
        self.self_copies += 1

    # -- finalization ----------------------------------------------------------

    def _percentile(self, ordered, q: float) -> int:
        if not ordered:
            return 0
        idx = int(q * (len(ordered) - 1))
        return ordered[idx]

    def finalize(self, completion_raw: int, mmus, topology: dict,
                 events_dispatched: int, expected_requests: int) -> dict:
        if self.total_requests != expected_requests:
            raise MetricsError(
                f"request conservation violated: recorded {self.total_requests}, "
                f"expected {expected_requests}")
        if sum(self.outcome_counts.values()) != self.total_requests:
            raise MetricsError("outcome counts do not partition the requests")

        n = self.total_requests
        ordered = sorted(self.rt_latencies)
        mean_rt = (sum(ordered) / n) if n else 0.0
        fr_fwd = self.sum_frac_forward / n if n else 0.0
        fr_rt = self.sum_frac_rt / n if n else 0.0
        fr_hbm = self.sum_frac_hbm / n if n else 0.0
        fr_ack = self.sum_frac_ack / n if n else 0.0
        if n and abs(fr_fwd + fr_rt + fr_hbm + fr_ack - 1.0) > 1e-9:
            raise MetricsError("round-trip stage fractions do not sum to 1")

        walks_per_dest = [m.walks_total for m in mmus]
        summary = {
            "schema": SUMMARY_SCHEMA,
            "mode": self.mode,
            "seed": self.cfg.seed,
            "completion_ns": completion_raw - self.lead_ns,
            "data_phase_start_ns": self.lead_ns,
            "total_requests": n,
            "self_copies": self.self_copies,
            "rt_latency_ns": {
                "mean": mean_rt,
                "median": self._percentile(ordered, 0.5),
                "p99": self._percentile(ordered, 0.99),
                "max": ordered[-1] if ordered else 0,
            },
            "rt_fraction_mean": fr_rt,
            "stage_fractions_mean": {
                "forward": fr_fwd,
                "reverse_translation": fr_rt,
                "hbm": fr_hbm,
                "ack": fr_ack,
            },
            "outcome_counts": {k: self.outcome_counts[k]
                               for k in sorted(self.outcome_counts)},
            "hum_resolution_counts": {k: self.hum_resolution_counts[k]
                                      for k in sorted(self.hum_resolution_counts)},
            "walks": {
                "total": sum(walks_per_dest),
                "full": sum(m.walks_full for m in mmus),
                "partial": sum(m.walks_partial for m in mmus),
                "per_destination": walks_per_dest,
                "peak_walkers_in_flight": max((m.peak_walkers for m in mmus), default=0),
            },
            "initial_page_walks": self.initial_page_walks,
            "boundary_walks": self.boundary_walks,
            "walks_at_nonfirst_requests": self.walks_at_nonfirst_requests,
            "mshr": {
                "stalled_requests": self.mshr_stalled_requests,
                "stall_ns_total": self.mshr_stall_ns_total,
                "full_stall_events": sum(m.mshr_full_stalls for m in mmus),
            },
            "walker_queue": {
                "queued_requests": self.walker_queued_requests,
                "queue_ns_total": self.walker_queue_ns_total,
            },
            "working_set": {
                "peak_pages_per_gpu": self.working_set.peak,
                "peak_pages_max": max(self.working_set.peak, default=0),
                "streaming_bound": max(self.cfg.num_gpus - 1, 0),
            },
            "prefetch": {
                "issued": self.prefetch_issued,
                "suppressed": self.prefetch_suppressed,
            },
            "events_dispatched": events_dispatched,
            "topology": topology,
            "config": self.cfg.resolved_dict(),
        }
        return summary

    def close(self) -> None:
        if self._trace_file is not None:
            self._trace_file.close()
            self._trace_file = None
            self._trace = None


def write_summary(summary: dict, path) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=2)
            fh.write("\n")
    except OSError as exc:
        raise MetricsError(f"cannot write summary to {path}: {exc}") from exc


# -- derived cross-run metrics -------------------------------------------------


def _comparable(config: dict) -> dict:
    # mode is the thing being compared; metrics settings are observability-only.
    return {k: v for k, v in config.items() if k not in ("mode", "metrics")}


def overhead_vs_ideal(real: dict, ideal: dict) -> float:
    """Completion-time ratio of a real run over its paired ideal run."""
    if real["mode"] != "real" and real["mode"] != "ideal":
        raise MetricsError(f"unexpected mode {real['mode']!r}")
    if _comparable(real["config"]) != _comparable(ideal["config"]):
        raise MetricsError(
            "overhead_vs_ideal: runs were configured differently; refusing to compare")
    if real["seed"] != ideal["seed"]:
        raise MetricsError("overhead_vs_ideal: seeds differ")
    denom = ideal["completion_ns"]
    if denom == 0:
        return 1.0
    return real["completion_ns"] / denom


def rt_fraction(summary: dict) -> float:
    """Mean over requests of (rt_end - rt_start) / (ack - issue)."""
    return summary["rt_fraction_mean"]


def outcome_breakdown(summary: dict) -> dict:
    """Per-outcome request fractions plus the HUM sub-classification."""
    total = summary["total_requests"]
    if total == 0:
        return {"fractions": {}, "hum_resolution": {}}
    fractions = {k: v / total for k, v in summary["outcome_counts"].items()}
    return {"fractions": fractions,
            "hum_resolution": dict(summary["hum_resolution_counts"])}
