"""UALink-style fabric model: stations, links, and a railed single-level Clos.

Rail r connects station r of every GPU through switch r, so any GPU pair is
one switch hop apart on every rail. Contention points are the per-station
TX serializer (store-and-forward: its serialization delay is on the packet's
latency) and the switch output port toward each GPU (cut-through: bandwidth
is conserved but an uncontended port adds no latency). Sub-nanosecond
serialization rounds up to the next nanosecond.
"""

from __future__ import annotations

from dataclasses import dataclass

STATION_POLICIES = ("src_dst_mod", "dst_mod")


@dataclass
class FabricConfig:
    stations_per_gpu: int = 16
    lanes_per_station: int = 4
    station_bandwidth_gbps: int = 800
    link_latency_ns: int = 300
    switch_latency_ns: int = 300
    local_fabric_latency_ns: int = 120
    hbm_latency_ns: int = 150
    header_overhead_bytes: int = 0
    ack_bytes: int = 64
    station_policy: str = "src_dst_mod"

    @property
    def bytes_per_ns(self) -> int:
        # 800 Gbps == 100 bytes/ns; config validation enforces divisibility.
        return self.station_bandwidth_gbps // 8


def serialization_delay(nbytes: int, bytes_per_ns: int, header_bytes: int = 0) -> int:
    """ceil((payload + header) / bandwidth), in whole nanoseconds.

    Zero bytes (weightless control packets in degenerate configs) cost zero.
    """
    if nbytes < 0:
        raise ValueError(f"serialization_delay needs non-negative bytes, got {nbytes}")
    total = nbytes + header_bytes
    return -(-total // bytes_per_ns)


def select_station(src: int, dst: int, stations_per_gpu: int,
                   policy: str = "src_dst_mod") -> int:
    """Deterministic station (= rail) for a (src, dst) stream, stable per stream."""
    if policy == "src_dst_mod":
        return (src + dst) % stations_per_gpu
    if policy == "dst_mod":
        return dst % stations_per_gpu
    raise ValueError(f"unknown station policy: {policy!r}")


def serializer_admit(free_at: int, arrive: int, ser_ns: int) -> tuple[int, int]:
    """Store-and-forward FIFO admit: returns (depart, new_free_at)."""
    depart = (arrive if arrive > free_at else free_at) + ser_ns
    return depart, depart


def port_admit(free_at: int, ready: int, ser_ns: int) -> tuple[int, int]:
    """Cut-through output-port admit: returns (depart, new_free_at).

    The packet's own serialization is not re-added to its latency, but the
    port stays busy for it (bandwidth conservation).
    """
    depart = ready if ready > free_at else free_at
    return depart, depart + ser_ns


class TxSerializer:
    """Per-station transmit serializer (requests and acks share it FIFO)."""

    __slots__ = ("free_at", "busy_ns")

    def __init__(self):
        self.free_at = 0
        self.busy_ns = 0

    def admit(self, arrive: int, ser_ns: int) -> int:
        depart, self.free_at = serializer_admit(self.free_at, arrive, ser_ns)
        self.busy_ns += ser_ns
        return depart


class SwitchPort:
    """Switch output port toward one GPU on one rail."""

    __slots__ = ("free_at", "busy_ns")

    def __init__(self):
        self.free_at = 0
        self.busy_ns = 0

    def admit(self, ready: int, ser_ns: int) -> int:
        depart, self.free_at = port_admit(self.free_at, ready, ser_ns)
        self.busy_ns += ser_ns
        return depart


def topology_echo(num_gpus: int, cfg: FabricConfig) -> dict:
    """Topology summary embedded in the run output for auditability."""
    return {
        "rails": cfg.stations_per_gpu,
        "stations_per_gpu": cfg.stations_per_gpu,
        "lanes_per_station": cfg.lanes_per_station,
        "station_bandwidth_gbps": cfg.station_bandwidth_gbps,
        "station_bandwidth_bytes_per_ns": cfg.bytes_per_ns,
        "switch_ports_per_rail": num_gpus,
        "link_latency_ns": cfg.link_latency_ns,
        "switch_latency_ns": cfg.switch_latency_ns,
        "station_policy": cfg.station_policy,
    }
