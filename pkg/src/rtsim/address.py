"""Network/system physical address model, page geometry, and buffer layouts.

An NPA is (target GPU, byte offset into the target's exposed buffer); the
destination resolves it to a system-physical frame. Frames carry no
performance semantics in this model (HBM latency is flat), so the page-to-
frame mapping defaults to identity with an optional seeded permutation.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

DEFAULT_PAGE_SIZE = 2 * 1024 * 1024


@dataclass(frozen=True)
class Npa:
    target: int
    offset: int


@dataclass(frozen=True)
class PageId:
    target: int
    index: int


def npa_to_page(npa: Npa, page_size: int = DEFAULT_PAGE_SIZE) -> PageId:
    """Translation granularity is the page: index = floor(offset / page_size)."""
    return PageId(npa.target, npa.offset // page_size)


@dataclass(frozen=True)
class BufferLayout:
    """Per-GPU receive-buffer geometry for an all-pairs collective.

    Each source's chunk lands in its own slot. With chunk_page_aligned the
    slot stride is the chunk rounded up to a page multiple, so every remote
    source writes a disjoint set of pages (one active page per source at any
    instant for streaming traffic). With it off, slots are packed back to
    back at chunk granularity.
    """

    page_size: int
    chunk_bytes: int
    slot_stride: int
    num_slots: int

    @classmethod
    def build(cls, num_gpus: int, collective_size: int, page_size: int,
              chunk_page_aligned: bool = True) -> "BufferLayout":
        chunk = collective_size // num_gpus
        if chunk_page_aligned:
            stride = -(-chunk // page_size) * page_size
        else:
            stride = chunk
        return cls(page_size=page_size, chunk_bytes=chunk,
                   slot_stride=stride, num_slots=num_gpus)

    @property
    def total_bytes(self) -> int:
        return self.slot_stride * self.num_slots

    @property
    def pages_per_gpu(self) -> int:
        return -(-self.total_bytes // self.page_size)

    def slot_base(self, slot: int) -> int:
        return slot * self.slot_stride


class SpaMapper:
    """Deterministic page->frame bijection per GPU, stable across a run.

    seed 0 selects the identity mapping; any other seed selects a seeded
    permutation of [0, pages_per_gpu).
    """

    def __init__(self, seed: int, pages_per_gpu: int):
        self.seed = seed
        self.pages_per_gpu = pages_per_gpu
        self._perms: dict[int, list[int]] = {}

    def resolve(self, page: PageId) -> int:
        if self.seed == 0:
            return page.index
        perm = self._perms.get(page.target)
        if perm is None:
            perm = list(range(self.pages_per_gpu))
            random.Random((self.seed << 20) ^ page.target).shuffle(perm)
            self._perms[page.target] = perm
        return perm[page.index]
