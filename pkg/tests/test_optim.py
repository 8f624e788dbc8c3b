from rtsim.collective import StreamState, build_plan
from rtsim.config import CollectiveConfig, MetricsConfig, SimConfig
from rtsim.optim import OptimConfig, PrefetchController, warmup_targets
from rtsim.sim import Simulation
from rtsim.translation import L1_HIT, WALK_FULL

MiB = 1024 * 1024


def test_warmup_targets_cover_every_chunk_first_page():
    plan = build_plan(4, 8 * MiB, 256, 2 * MiB, 65536)
    stations = list(range(len(plan.streams)))
    targets = warmup_targets(plan, stations)
    assert len(targets) == 12
    pages = {(dst, page) for dst, _, page in targets}
    assert all(page == spec.base_offset // (2 * MiB)
               for spec, (dst, st, page) in zip(plan.streams, targets))


class TestPrefetchTrigger:
    def _stream(self, chunk_pages=2, page=2 * MiB, request=256):
        plan = build_plan(2, 2 * chunk_pages * page, request, page, 65536)
        return StreamState(plan.streams[0], 1, request, page)

    def test_fires_at_half_page(self):
        stream = self._stream()
        ctrl = PrefetchController(OptimConfig(prefetch_enabled=True), 2 * MiB)
        fired_at = None
        offset = stream.next_offset
        while offset < stream.end_offset:
            page = ctrl.next_page_to_prefetch(stream, offset)
            if page is not None and fired_at is None:
                fired_at = offset
                assert page == offset // (2 * MiB) + 1
            offset += 256
        # trigger crosses at the request whose end reaches 1 MiB into the page
        assert fired_at == MiB - 256

    def test_fires_once_per_page(self):
        stream = self._stream()
        ctrl = PrefetchController(OptimConfig(prefetch_enabled=True), 2 * MiB)
        fires = []
        offset = stream.next_offset
        while offset < stream.end_offset:
            page = ctrl.next_page_to_prefetch(stream, offset)
            if page is not None:
                fires.append(page)
            offset += 256
        # two-page chunk: prefetch for page 1 only; the last page never fires
        assert fires == [1]

    def test_disabled_never_fires(self):
        stream = self._stream()
        ctrl = PrefetchController(OptimConfig(prefetch_enabled=False), 2 * MiB)
        assert ctrl.next_page_to_prefetch(stream, MiB) is None


def _run(num_gpus=4, size=4 * 65536, request=256, page=65536, window=65536,
         **optim):
    cfg = SimConfig(num_gpus=num_gpus, collective_size=size,
                    request_size=request, page_size=page,
                    collective=CollectiveConfig(window_bytes_per_wg=window),
                    optim=OptimConfig(**optim),
                    metrics=MetricsConfig(emit_trace=False))
    return Simulation(cfg).run()


def test_pretranslation_warms_first_pages():
    base = _run()
    warmed = _run(pretranslate_enabled=True, pretranslate_lead_ns=5000)
    assert base["outcome_counts"].get(WALK_FULL, 0) > 0
    # all data requests hit pre-warmed entries; warmup rows are excluded
    assert warmed["outcome_counts"] == {L1_HIT: warmed["total_requests"]}
    assert warmed["prefetch"]["issued"] == 12
    assert warmed["total_requests"] == base["total_requests"]
    assert warmed["completion_ns"] < base["completion_ns"]


def test_pretranslation_lead_zero_races_data():
    warmed = _run(pretranslate_enabled=True, pretranslate_lead_ns=0)
    # warmup and data race: data merges into warmup walks as hit-under-miss
    assert WALK_FULL not in warmed["outcome_counts"]
    assert warmed["outcome_counts"].get("L1_MSHR_HUM", 0) > 0


def test_prefetch_eliminates_boundary_walks():
    base = _run(num_gpus=2, size=2 * 8 * 65536, page=65536)
    assert base["boundary_walks"] == 2 * 7  # 8 pages per chunk, both streams
    pf = _run(num_gpus=2, size=2 * 8 * 65536, page=65536,
              prefetch_enabled=True)
    assert pf["boundary_walks"] == 0
    assert pf["prefetch"]["issued"] == 2 * 7
    assert pf["total_requests"] == base["total_requests"]
    # issued translations bound the extra walks
    assert pf["walks"]["total"] <= base["walks"]["total"] + pf["prefetch"]["issued"]


def test_prefetch_duplicate_suppression():
    # page size == chunk: next page is the other stream's page, already pending
    summary = _run(num_gpus=2, size=2 * 65536, page=32768,
                   prefetch_enabled=True)
    assert summary["prefetch"]["issued"] + summary["prefetch"]["suppressed"] == 2
