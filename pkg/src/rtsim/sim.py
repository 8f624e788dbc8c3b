"""Simulation assembly: wires traffic, fabric, translation, and metrics.

Stage pipeline per remote store (all integer nanoseconds):

  issue --local fabric--> station TX serializer (store-and-forward)
        --link--> switch (fixed latency) --output port (cut-through)--
        --link--> destination Link MMU (reverse translation)
        --HBM write--> ack: TX serializer at the destination station
        --link--> switch --port--> --link--> local fabric --> source ack.

Acks share rails, serializers, and switch ports with forward traffic.
Everything runs on one event loop; a run is deterministic given its config.
"""

from __future__ import annotations

import os

from .collective import StreamState, build_plan
from .config import SimConfig
from .engine import Engine
from .fabric import select_station, serialization_delay, topology_echo
from .metrics import MetricsCollector, MetricsError, write_summary
from .optim import PrefetchController, warmup_targets
from .translation import IdealMmu, LinkMmu


class _Request:
    __slots__ = ("id", "stream", "src", "dst", "station", "page", "first_page",
                 "first_of_page", "issue_t", "net_arrive_t", "rt_start_t",
                 "rt_end_t", "hbm_done_t", "ack_t", "outcome", "mshr_stall",
                 "walker_queue", "hum_resolution", "is_prefetch")

    def __init__(self, rid, stream, page, issue_t, first_of_page):
        self.id = rid
        self.stream = stream
        self.src = stream.src
        self.dst = stream.dst
        self.station = stream.station
        self.page = page
        self.first_page = stream.first_page
        self.first_of_page = first_of_page
        self.issue_t = issue_t
        self.net_arrive_t = 0
        self.rt_start_t = 0
        self.rt_end_t = 0
        self.hbm_done_t = 0
        self.ack_t = 0
        self.outcome = ""
        self.mshr_stall = 0
        self.walker_queue = 0
        self.hum_resolution = None
        self.is_prefetch = False


class _PrefetchRequest:
    """Translation-only request (pre-translation warmup or next-page prefetch)."""

    __slots__ = ("id", "src", "dst", "station", "page", "issue_t",
                 "mshr_stall", "walker_queue", "is_prefetch")

    def __init__(self, rid, src, dst, station, page, issue_t):
        self.id = rid
        self.src = src
        self.dst = dst
        self.station = station
        self.page = page
        self.issue_t = issue_t
        self.mshr_stall = 0
        self.walker_queue = 0
        self.is_prefetch = True


class Simulation:
    """One deterministic run of an all-pairs collective."""

    def __init__(self, cfg: SimConfig, trace_path=None):
        cfg.validate()
        self.cfg = cfg
        fab = cfg.fabric
        self.plan = build_plan(cfg.num_gpus, cfg.collective_size,
                               cfg.request_size, cfg.page_size,
                               cfg.collective.window_bytes_per_wg,
                               cfg.collective.chunk_page_aligned)
        self.engine = Engine(max_events=cfg.engine.max_events)
        self.window = self.plan.window_requests
        self.lead = cfg.optim.pretranslate_lead_ns if cfg.optim.pretranslate_enabled else 0

        self.local_ns = fab.local_fabric_latency_ns
        self.link_ns = fab.link_latency_ns
        self.switch_ns = fab.switch_latency_ns
        self.hbm_ns = fab.hbm_latency_ns
        self.ser_fwd = serialization_delay(cfg.request_size, fab.bytes_per_ns,
                                           fab.header_overhead_bytes)
        self.ser_ack = serialization_delay(fab.ack_bytes, fab.bytes_per_ns,
                                           fab.header_overhead_bytes)

        n, s = cfg.num_gpus, fab.stations_per_gpu
        self.num_gpus = n
        self.stations = s
        self.tx_free = [0] * (n * s)
        self.port_free = [0] * (s * n)

        self.metrics = MetricsCollector(cfg, cfg.mode, lead_ns=self.lead,
                                        trace_path=trace_path)

        if cfg.mode == "ideal":
            self.mmus = [IdealMmu(g, self._on_rt_complete) for g in range(n)]
        else:
            self.mmus = [LinkMmu(g, cfg.tlb, cfg.walk, fab.hbm_latency_ns, s,
                                 self.engine, self._on_rt_complete)
                         for g in range(n)]

        self.streams = [StreamState(spec,
                                    select_station(spec.src, spec.dst, s,
                                                   fab.station_policy),
                                    cfg.request_size, cfg.page_size)
                        for spec in self.plan.streams]
        self.prefetch = PrefetchController(cfg.optim, cfg.page_size)
        self._next_id = 0
        self._last_ack = 0
        self._acked = 0

    # -- traffic injection ----------------------------------------------------

    def _inject(self, stream: StreamState) -> None:
        # Inlined StreamState.take_next: this loop is the injection hot path.
        now = self.engine.now
        schedule = self.engine.schedule
        tx_enqueue = self._tx_enqueue
        tx_at = now + self.local_ns
        track = self.metrics.working_set
        prefetch_on = self.prefetch.enabled
        window = self.window
        rsize = stream.request_size
        psize = stream.page_size
        end = stream.end_offset
        rid = self._next_id
        while stream.outstanding < window:
            offset = stream.next_offset
            if offset >= end:
                break
            stream.next_offset = offset + rsize
            page = offset // psize
            was_idle = stream.outstanding == 0
            first_of_page = page != stream.current_page
            if first_of_page:
                old_page = stream.current_page
                stream.current_page = page
                if was_idle:
                    track.stream_page(stream.dst, -1, page)
                else:
                    track.stream_page(stream.dst, old_page, page)
            elif was_idle:
                track.stream_page(stream.dst, -1, page)
            req = _Request(rid, stream, page, now, first_of_page)
            rid += 1
            stream.outstanding += 1
            if prefetch_on:
                nxt_page = self.prefetch.next_page_to_prefetch(stream, offset)
                if nxt_page is not None:
                    self._next_id = rid
                    self._inject_translation_only(stream.src, stream.dst,
                                                  stream.station, nxt_page, now)
                    rid = self._next_id
            schedule(tx_at, tx_enqueue, req)
        self._next_id = rid

    def _inject_translation_only(self, src, dst, station, page, t) -> None:
        mmu = self.mmus[dst]
        if mmu.is_resident_or_pending(page, station):
            self.metrics.record_prefetch_suppressed()
            return
        req = _PrefetchRequest(self._next_id, src, dst, station, page, t)
        self._next_id += 1
        mmu.translate(req, t)

    def _inject_warmup(self, target) -> None:
        dst, station, page = target
        src = -1  # warmup rows are destination-side injections
        req = _PrefetchRequest(self._next_id, src, dst, station, page,
                               self.engine.now)
        self._next_id += 1
        self.mmus[dst].translate(req, self.engine.now)

    # -- forward path -----------------------------------------------------------

    def _tx_enqueue(self, req) -> None:
        idx = req.src * self.stations + req.station
        free = self.tx_free[idx]
        now = self.engine.now
        depart = (now if now > free else free) + self.ser_fwd
        self.tx_free[idx] = depart
        self.engine.schedule(depart + self.link_ns + self.switch_ns,
                             self._port_fwd, req)

    def _port_fwd(self, req) -> None:
        idx = req.station * self.num_gpus + req.dst
        free = self.port_free[idx]
        now = self.engine.now
        depart = now if now > free else free
        self.port_free[idx] = depart + self.ser_fwd
        self.engine.schedule(depart + self.link_ns, self._rt_arrive, req)

    def _rt_arrive(self, req) -> None:
        now = self.engine.now
        req.net_arrive_t = now
        req.rt_start_t = now
        self.mmus[req.dst].translate(req, now)

    # -- reverse translation completion -----------------------------------------

    def _on_rt_complete(self, req, rt_end, outcome, mshr_stall, walker_queue,
                        hum_resolution) -> None:
        if req.is_prefetch:
            req.mshr_stall = mshr_stall
            req.walker_queue = walker_queue
            self.metrics.record_prefetch(req, rt_end)
            return
        req.rt_end_t = rt_end
        req.outcome = outcome
        req.mshr_stall = mshr_stall
        req.walker_queue = walker_queue
        req.hum_resolution = hum_resolution
        hbm_done = rt_end + self.hbm_ns
        req.hbm_done_t = hbm_done
        self.engine.schedule(hbm_done, self._ack_tx, req)

    # -- ack path -----------------------------------------------------------------

    def _ack_tx(self, req) -> None:
        idx = req.dst * self.stations + req.station
        free = self.tx_free[idx]
        now = self.engine.now
        depart = (now if now > free else free) + self.ser_ack
        self.tx_free[idx] = depart
        self.engine.schedule(depart + self.link_ns + self.switch_ns,
                             self._ack_port, req)

    def _ack_port(self, req) -> None:
        idx = req.station * self.num_gpus + req.src
        free = self.port_free[idx]
        now = self.engine.now
        depart = now if now > free else free
        self.port_free[idx] = depart + self.ser_ack
        self.engine.schedule(depart + self.link_ns + self.local_ns,
                             self._ack_arrive, req)

    def _ack_arrive(self, req) -> None:
        now = self.engine.now
        req.ack_t = now
        stream = req.stream
        stream.outstanding -= 1
        if stream.outstanding == 0:
            self.metrics.working_set.stream_idle(stream.dst, stream.current_page)
        self._last_ack = now
        self._acked += 1
        self.metrics.record_request(req)
        if not stream.exhausted:
            self._inject(stream)

    # -- run ------------------------------------------------------------------------

    def run(self) -> dict:
        for _ in range(self.num_gpus):
            self.metrics.record_self_copy()
        if self.cfg.optim.pretranslate_enabled:
            for target in warmup_targets(self.plan,
                                         [st.station for st in self.streams]):
                self.engine.schedule(0, self._inject_warmup, target)
        for stream in self.streams:
            self.engine.schedule(self.lead, self._inject, stream)
        self.engine.run()

        for stream in self.streams:
            if not stream.exhausted or stream.outstanding:
                raise MetricsError(
                    f"collective did not complete: stream {stream.src}->{stream.dst} "
                    f"outstanding={stream.outstanding}")
        if self._acked != self.plan.total_network_requests:
            raise MetricsError(
                f"ack conservation violated: {self._acked} != "
                f"{self.plan.total_network_requests}")

        completion_raw = max(self._last_ack, self.lead)
        summary = self.metrics.finalize(
            completion_raw, self.mmus,
            topology_echo(self.num_gpus, self.cfg.fabric),
            self.engine.events_dispatched,
            self.plan.total_network_requests)
        self.metrics.close()
        return summary


def run_simulation(cfg: SimConfig, out_dir: str | None = None) -> dict:
    """Run one simulation; optionally emit trace.csv and summary.json."""
    trace_path = None
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        if cfg.metrics.emit_trace:
            trace_path = os.path.join(out_dir, "trace.csv")
    sim = Simulation(cfg, trace_path=trace_path)
    summary = sim.run()
    if out_dir is not None:
        write_summary(summary, os.path.join(out_dir, "summary.json"))
    return summary
