"""All-pairs All-to-All traffic generation.

Per source GPU, one workgroup streams a chunk of remote stores to each
destination, striding sequentially through the destination's pages: offsets
advance monotonically by request_size with no revisits, so temporal reuse is
nil and each stream keeps exactly one page "active" at a time. Self-chunks
(src == dst) are local copies that bypass the fabric and reverse translation.

Backpressure is a per-WG outstanding-byte window; a stream injects greedily
until the window fills and re-arms on every ack.
"""

from __future__ import annotations

from dataclasses import dataclass

from .address import BufferLayout


@dataclass(frozen=True)
class StreamSpec:
    src: int
    dst: int
    base_offset: int
    end_offset: int


@dataclass(frozen=True)
class CollectivePlan:
    num_gpus: int
    collective_size: int
    chunk_size: int
    request_size: int
    window_requests: int
    layout: BufferLayout
    streams: tuple[StreamSpec, ...]

    @property
    def requests_per_stream(self) -> int:
        return self.chunk_size // self.request_size

    @property
    def total_network_requests(self) -> int:
        return len(self.streams) * self.requests_per_stream


def build_plan(num_gpus: int, collective_size: int, request_size: int,
               page_size: int, window_bytes: int,
               chunk_page_aligned: bool = True) -> CollectivePlan:
    """Validate geometry and lay out the N*(N-1) network streams.

    Stream (s, d) covers the destination's slot for source s; with a 1-GPU
    degenerate collective there are no network streams at all.
    """
    if num_gpus < 1:
        raise ValueError(f"num_gpus must be >= 1, got {num_gpus}")
    if collective_size % num_gpus:
        raise ValueError(
            f"collective_size {collective_size} not divisible by num_gpus {num_gpus}")
    chunk = collective_size // num_gpus
    if chunk % request_size:
        raise ValueError(
            f"chunk_size {chunk} not divisible by request_size {request_size}")
    layout = BufferLayout.build(num_gpus, collective_size, page_size,
                                chunk_page_aligned)
    streams = []
    for src in range(num_gpus):
        for dst in range(num_gpus):
            if src == dst:
                continue
            base = layout.slot_base(src)
            streams.append(StreamSpec(src, dst, base, base + chunk))
    window_requests = max(1, window_bytes // request_size)
    return CollectivePlan(num_gpus=num_gpus, collective_size=collective_size,
                          chunk_size=chunk, request_size=request_size,
                          window_requests=window_requests, layout=layout,
                          streams=tuple(streams))


class StreamState:
    """Mutable injection state for one (src, dst) workgroup stream."""

    __slots__ = ("src", "dst", "station", "next_offset", "end_offset",
                 "request_size", "page_size", "outstanding", "first_page",
                 "current_page", "prefetch_done_page")

    def __init__(self, spec: StreamSpec, station: int, request_size: int,
                 page_size: int):
        self.src = spec.src
        self.dst = spec.dst
        self.station = station
        self.next_offset = spec.base_offset
        self.end_offset = spec.end_offset
        self.request_size = request_size
        self.page_size = page_size
        self.outstanding = 0
        self.first_page = spec.base_offset // page_size
        self.current_page = -1
        self.prefetch_done_page = -1

    @property
    def exhausted(self) -> bool:
        return self.next_offset >= self.end_offset

    def take_next(self):
        """Advance the stream; returns (offset, page, first_of_page) or None."""
        if self.next_offset >= self.end_offset:
            return None
        offset = self.next_offset
        self.next_offset = offset + self.request_size
        page = offset // self.page_size
        first = page != self.current_page
        if first:
            self.current_page = page
        return offset, page, first
