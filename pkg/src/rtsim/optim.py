"""Translation-warming optimizations, both toggleable.

Pre-translation: before the data phase starts, a translation-only request
for the first page of every (src, dst) chunk enters the destination's Link
MMU through the normal hierarchy (consuming walkers and MSHRs), so the
latency-hiding is real, not magic entry installation.

Next-page prefetch: when a stream has consumed a configured fraction of its
current page, a translation-only request for the next page is injected at
the destination unless that page is already resident or in flight there.
Neither optimization changes request ordering, payloads, or the data-phase
request count.
"""

from __future__ import annotations

from dataclasses import dataclass

from .collective import CollectivePlan, StreamState


@dataclass
class OptimConfig:
    pretranslate_enabled: bool = False
    pretranslate_lead_ns: int = 2000
    prefetch_enabled: bool = False
    prefetch_trigger_fraction: float = 0.5


def warmup_targets(plan: CollectivePlan, stations: list[int]) -> list[tuple[int, int, int]]:
    """(dst, station, page) for the first page of every network chunk."""
    targets = []
    page_size = plan.layout.page_size
    for spec, station in zip(plan.streams, stations):
        targets.append((spec.dst, station, spec.base_offset // page_size))
    return targets


class PrefetchController:
    """Decides, per injected request, whether to emit a next-page prefetch."""

    def __init__(self, cfg: OptimConfig, page_size: int):
        self.enabled = cfg.prefetch_enabled
        self.page_size = page_size
        # Integer trigger offset keeps the event timeline float-free.
        self.trigger_bytes = int(cfg.prefetch_trigger_fraction * page_size)

    def next_page_to_prefetch(self, stream: StreamState, offset: int):
        """Return the page to prefetch after `offset` was injected, or None.

        Fires once per (stream, page), only past the trigger fraction, and
        never for the last page of the chunk.
        """
        if not self.enabled:
            return None
        page = offset // self.page_size
        if stream.prefetch_done_page >= page:
            return None
        within = offset - page * self.page_size + stream.request_size
        if within < self.trigger_bytes:
            return None
        next_page_base = (page + 1) * self.page_size
        if next_page_base >= stream.end_offset:
            return None
        stream.prefetch_done_page = page
        return page + 1
