"""Destination-side reverse translation: the Link MMU hierarchy.

Each UALink station owns a private fully-associative L1 link TLB with an
MSHR table; misses forward to a GPU-shared 2-way L2 link TLB with its own
MSHR; L2 misses probe the page-walk caches (one probe covers all levels)
and dispatch a radix walk on the shared walker pool.

Timing model:
  * L1 and L2 probes are latency-pipelined (no port occupancy).
  * The page-walk-cache front end is single-ported: one probe at a time,
    occupied for its access latency, shared per GPU. Concurrent cold misses
    therefore stagger their walks.
  * A walk performs one flat memory access per uncached level.

Fill policy is mostly-inclusive: a completed walk populates the shared L2
and the L1 of every station with a pending MSHR entry for the page;
evictions are silent (no cross-level invalidation). At most one walk is in
flight per page per GPU: later requests merge into the MSHR chain and
complete at fill time (hit-under-miss).

Per-request latency identity (checked by the metrics module):
  rt_end - rt_start = probe latencies (by outcome) + mshr_stall_ns
                      + walker_queue_ns + walk memory time.
mshr_stall_ns covers hit-under-miss chain waits and MSHR-full stalls;
walker_queue_ns covers waiting for the walk front end and the walker pool.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

# Outcome strings are part of the trace CSV contract.
L1_HIT = "L1_HIT"
L1_MSHR_HUM = "L1_MSHR_HUM"
L2_HIT = "L2_HIT"
L2_MSHR_HUM = "L2_MSHR_HUM"
WALK_FULL = "WALK_FULL"
IDEAL = "IDEAL"
PREFETCH = "PREFETCH"

_WALK_PARTIAL = tuple(f"WALK_PARTIAL_{k}" for k in range(5))


def walk_partial(levels_skipped: int) -> str:
    return _WALK_PARTIAL[levels_skipped]


def is_walk_outcome(outcome: str) -> bool:
    return outcome == WALK_FULL or outcome.startswith("WALK_PARTIAL_")


@dataclass
class TlbConfig:
    l1_entries: int = 32              # fully associative, private per station
    l1_hit_latency_ns: int = 50
    l1_mshr_entries: int = 256        # in-flight pages per station
    l2_entries: int = 512
    l2_associativity: int = 2
    l2_hit_latency_ns: int = 100
    l2_mshr_entries: int = 256        # in-flight pages per GPU


@dataclass
class WalkConfig:
    levels: int = 5
    pwc_entries: tuple = (16, 32, 64, 128)   # levels 1 (root) .. levels-1
    pwc_associativity: int = 2
    pwc_latency_ns: int = 50
    walkers: int = 100
    fanout_bits: int = 9              # radix-512 page table nodes


def probe_latency_for(outcome: str, tlb: TlbConfig, walk: WalkConfig) -> int:
    """Serial probe time implied by an outcome (the identity's first addend)."""
    if outcome in (L1_HIT, L1_MSHR_HUM):
        return tlb.l1_hit_latency_ns
    if outcome in (L2_HIT, L2_MSHR_HUM):
        return tlb.l1_hit_latency_ns + tlb.l2_hit_latency_ns
    if is_walk_outcome(outcome):
        return tlb.l1_hit_latency_ns + tlb.l2_hit_latency_ns + walk.pwc_latency_ns
    return 0  # IDEAL / PREFETCH


class SetAssocCache:
    """Set-associative cache of keys with exact per-set LRU replacement."""

    __slots__ = ("num_sets", "ways", "sets")

    def __init__(self, entries: int, ways: int):
        if entries % ways:
            raise ValueError(f"associativity {ways} must divide entries {entries}")
        self.num_sets = entries // ways
        self.ways = ways
        self.sets = [{} for _ in range(self.num_sets)]

    def probe(self, key) -> bool:
        """Lookup; refreshes LRU order on hit."""
        s = self.sets[hash(key) % self.num_sets]
        if key in s:
            del s[key]          # dict preserves insertion order: re-insert = MRU
            s[key] = True
            return True
        return False

    def peek(self, key) -> bool:
        return key in self.sets[hash(key) % self.num_sets]

    def insert(self, key):
        """Insert (or refresh); returns the evicted key, if any."""
        s = self.sets[hash(key) % self.num_sets]
        if key in s:
            del s[key]
            s[key] = True
            return None
        victim = None
        if len(s) >= self.ways:
            victim = next(iter(s))
            del s[victim]
        s[key] = True
        return victim

    def __len__(self):
        return sum(len(s) for s in self.sets)


class _L1Chain:
    """Pending L1 miss for one page at one station: head request + merged waiters."""

    __slots__ = ("station", "head", "head_probe_done", "waiters", "l2_probe_done")

    def __init__(self, station, head, head_probe_done):
        self.station = station
        self.head = head
        self.head_probe_done = head_probe_done
        self.waiters = []           # (request, probe_done)
        self.l2_probe_done = 0


class _WalkRec:
    """One in-flight walk (per page per GPU)."""

    __slots__ = ("page", "alloc_chain", "merged_chains", "ready", "pwc_wait",
                 "pwc_done_t", "skipped", "head_mshr_stall")

    def __init__(self, page, alloc_chain, ready, head_mshr_stall=0):
        self.page = page
        self.alloc_chain = alloc_chain
        self.merged_chains = []     # chains from other stations (L2 hit-under-miss)
        self.ready = ready
        self.pwc_wait = 0
        self.pwc_done_t = 0
        self.skipped = 0
        self.head_mshr_stall = head_mshr_stall


class LinkMmu:
    """Reverse-translation hierarchy for one GPU.

    The completion callback receives
      (request, rt_end, outcome, mshr_stall_ns, walker_queue_ns, hum_resolution)
    where hum_resolution names how an L1 hit-under-miss was ultimately
    resolved (L2_HIT / WALK_PARTIAL_k / WALK_FULL), else None.
    """

    def __init__(self, gpu: int, tlb: TlbConfig, walk: WalkConfig,
                 memory_latency_ns: int, stations: int, engine, on_complete):
        self.gpu = gpu
        self.tlb = tlb
        self.walk = walk
        self.memory_latency_ns = memory_latency_ns
        self.engine = engine
        self.on_complete = on_complete

        self.l1 = [SetAssocCache(tlb.l1_entries, tlb.l1_entries)
                   for _ in range(stations)]
        self.l1_mshr: list[dict] = [{} for _ in range(stations)]
        self.l1_stall: list[deque] = [deque() for _ in range(stations)]
        self.l2 = SetAssocCache(tlb.l2_entries, tlb.l2_associativity)
        self.l2_mshr: dict = {}
        self.l2_stall: deque = deque()
        # pwc[i] caches page-table level i+1 (root .. leaf-1)
        self.pwc = [SetAssocCache(n, walk.pwc_associativity)
                    for n in walk.pwc_entries]
        self.pwc_free_at = 0
        self.walkers_busy = 0
        self.walker_queue: deque = deque()

        self.walks_total = 0
        self.walks_full = 0
        self.walks_partial = 0
        self.peak_walkers = 0
        self.mshr_full_stalls = 0

    # -- node keys ---------------------------------------------------------

    def _node_key(self, level: int, page: int) -> int:
        # level 1 = root ... levels-1 = leaf-1; the leaf PTE is never cached.
        return page >> (self.walk.fanout_bits * (self.walk.levels - level))

    def _pwc_deepest(self, page: int) -> int:
        for level in range(self.walk.levels - 1, 0, -1):
            if self.pwc[level - 1].probe(self._node_key(level, page)):
                return level
        return 0

    # -- request entry points ----------------------------------------------

    def translate(self, req, t: int) -> None:
        """Request arrived at this GPU's Link MMU at time t (= rt_start)."""
        station = req.station
        probe_done = t + self.tlb.l1_hit_latency_ns
        if self.l1[station].probe(req.page):
            self.on_complete(req, probe_done, L1_HIT, 0, 0, None)
            return
        self._l1_miss(req, station, probe_done, 0)

    def is_resident_or_pending(self, page: int, station: int) -> bool:
        """Duplicate-suppression check for translation prefetches."""
        return (self.l1[station].peek(page) or self.l2.peek(page)
                or page in self.l1_mshr[station] or page in self.l2_mshr)

    # -- L1 miss path --------------------------------------------------------

    def _l1_miss(self, req, station: int, probe_done: int, stalled_ns: int) -> None:
        mshr = self.l1_mshr[station]
        chain = mshr.get(req.page)
        if chain is not None:
            chain.waiters.append((req, probe_done, stalled_ns))
            return
        if len(mshr) >= self.tlb.l1_mshr_entries:
            self.mshr_full_stalls += 1
            self.l1_stall[station].append((req, probe_done))
            return
        chain = _L1Chain(station, req, probe_done)
        mshr[req.page] = chain
        self._l2_lookup(chain, req.page, probe_done, stalled_ns)

    def _l2_lookup(self, chain: _L1Chain, page: int, t: int, stalled_ns: int) -> None:
        done = t + self.tlb.l2_hit_latency_ns
        if self.l2.probe(page):
            self._fill_l1_and_complete(chain, page, done, L2_HIT, stalled_ns)
            return
        chain.l2_probe_done = done
        rec = self.l2_mshr.get(page)
        if rec is not None:
            rec.merged_chains.append((chain, stalled_ns))
            return
        if len(self.l2_mshr) >= self.tlb.l2_mshr_entries:
            self.mshr_full_stalls += 1
            self.l2_stall.append((chain, done))
            return
        rec = _WalkRec(page, chain, done, head_mshr_stall=stalled_ns)
        self.l2_mshr[page] = rec
        pwc_start = max(done, self.pwc_free_at)
        self.pwc_free_at = pwc_start + self.walk.pwc_latency_ns
        rec.pwc_wait = pwc_start - done
        self.engine.schedule(pwc_start + self.walk.pwc_latency_ns,
                             self._pwc_done, rec)

    # -- walk subsystem ------------------------------------------------------

    def _pwc_done(self, rec: _WalkRec) -> None:
        rec.skipped = self._pwc_deepest(rec.page)
        rec.pwc_done_t = self.engine.now
        if self.walkers_busy < self.walk.walkers:
            self.walkers_busy += 1
            if self.walkers_busy > self.peak_walkers:
                self.peak_walkers = self.walkers_busy
            self._start_walk(rec, self.engine.now)
        else:
            self.walker_queue.append(rec)

    def _start_walk(self, rec: _WalkRec, grant: int) -> None:
        duration = (self.walk.levels - rec.skipped) * self.memory_latency_ns
        self.engine.schedule(grant + duration, self._walk_done, (rec, grant))

    def _walk_done(self, arg) -> None:
        rec, grant = arg
        fill_t = self.engine.now
        page = rec.page
        self.walks_total += 1
        if rec.skipped == 0:
            self.walks_full += 1
            outcome = WALK_FULL
        else:
            self.walks_partial += 1
            outcome = walk_partial(rec.skipped)

        for level in range(rec.skipped + 1, self.walk.levels):
            self.pwc[level - 1].insert(self._node_key(level, page))
        self.l2.insert(page)

        walker_q = rec.pwc_wait + (grant - rec.pwc_done_t)
        self._complete_chain(rec.alloc_chain, page, fill_t, outcome,
                             head_outcome=outcome,
                             head_mshr_stall=rec.head_mshr_stall,
                             head_walker_queue=walker_q)
        for chain, stalled_ns in rec.merged_chains:
            self._complete_chain(chain, page, fill_t, outcome,
                                 head_outcome=L2_MSHR_HUM,
                                 head_mshr_stall=stalled_ns + (fill_t - chain.l2_probe_done),
                                 head_walker_queue=0)
        del self.l2_mshr[page]
        self._release_l2_stall(fill_t)

        self.walkers_busy -= 1
        if self.walker_queue:
            nxt = self.walker_queue.popleft()
            self.walkers_busy += 1
            self._start_walk(nxt, fill_t)

    # -- fills and completions ----------------------------------------------

    def _complete_chain(self, chain: _L1Chain, page: int, fill_t: int,
                        resolution: str, head_outcome: str,
                        head_mshr_stall: int, head_walker_queue: int) -> None:
        self.l1[chain.station].insert(page)
        self.on_complete(chain.head, fill_t, head_outcome,
                         head_mshr_stall, head_walker_queue, None)
        for wreq, probe_done, stalled_ns in chain.waiters:
            self.on_complete(wreq, fill_t, L1_MSHR_HUM,
                             stalled_ns + (fill_t - probe_done), 0, resolution)
        del self.l1_mshr[chain.station][page]
        self._release_l1_stall(chain.station, fill_t)

    def _fill_l1_and_complete(self, chain: _L1Chain, page: int, done: int,
                              head_outcome: str, head_mshr_stall: int) -> None:
        """Resolve a chain from an L2 hit: fill the station L1, drain waiters."""
        self.l1[chain.station].insert(page)
        self.on_complete(chain.head, done, head_outcome, head_mshr_stall, 0, None)
        for wreq, probe_done, stalled_ns in chain.waiters:
            self.on_complete(wreq, done, L1_MSHR_HUM,
                             stalled_ns + (done - probe_done), 0, L2_HIT)
        del self.l1_mshr[chain.station][page]
        self._release_l1_stall(chain.station, done)

    # -- MSHR-full stall FIFOs ------------------------------------------------

    def _release_l1_stall(self, station: int, t: int) -> None:
        queue = self.l1_stall[station]
        while queue and len(self.l1_mshr[station]) < self.tlb.l1_mshr_entries:
            req, probe_done = queue.popleft()
            stalled = t - probe_done
            # Re-enter past the probe: page may have been filled meanwhile.
            if self.l1[station].probe(req.page):
                self.on_complete(req, t, L1_HIT, stalled, 0, None)
                continue
            self._l1_miss(req, station, t, stalled)

    def _release_l2_stall(self, t: int) -> None:
        while self.l2_stall and len(self.l2_mshr) < self.tlb.l2_mshr_entries:
            chain, probe_done = self.l2_stall.popleft()
            stalled = t - probe_done
            if self.l2.probe(chain.head.page):
                self._fill_l1_and_complete(chain, chain.head.page, t,
                                           L2_HIT, stalled)
                continue
            self._l2_relookup(chain, chain.head.page, t, stalled)

    def _l2_relookup(self, chain: _L1Chain, page: int, t: int, stalled_ns: int) -> None:
        """Post-stall re-entry at the L2 MSHR decision point (probe already paid)."""
        chain.l2_probe_done = t
        rec = self.l2_mshr.get(page)
        if rec is not None:
            rec.merged_chains.append((chain, stalled_ns))
            return
        rec = _WalkRec(page, chain, t, head_mshr_stall=stalled_ns)
        self.l2_mshr[page] = rec
        pwc_start = max(t, self.pwc_free_at)
        self.pwc_free_at = pwc_start + self.walk.pwc_latency_ns
        rec.pwc_wait = pwc_start - t
        self.engine.schedule(pwc_start + self.walk.pwc_latency_ns,
                             self._pwc_done, rec)


class IdealMmu:
    """Zero-latency translation: no TLB, MSHR, or walker state is touched."""

    def __init__(self, gpu: int, on_complete):
        self.gpu = gpu
        self.on_complete = on_complete
        self.walks_total = 0
        self.walks_full = 0
        self.walks_partial = 0
        self.peak_walkers = 0
        self.mshr_full_stalls = 0

    def translate(self, req, t: int) -> None:
        self.on_complete(req, t, IDEAL, 0, 0, None)

    def is_resident_or_pending(self, page: int, station: int) -> bool:
        return True
