"""Experiments on a simulated network: RTT per policy index, traffic runs, faults."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from ..addr import AsId, HostAddr
from ..control_plane.paths import EndToEndPath, candidate_indices
from ..data_plane.endpoint import (
    Accept,
    PathInvalid,
    PathValid,
    build_packet,
    dest_process,
    source_validate,
)
from ..data_plane.packet import Packet
from ..data_plane.router import RouterFaults
from .engine import NS_PER_MS
from .network import Network, SimulationError, UnknownAs


@dataclass(frozen=True)
class RttSample:
    seq: int
    index: int
    rtt_ms: float


@dataclass
class RttScenario:
    """Ping ``count`` times from ``src`` to ``dst``.

    ``index`` is requested at ``policy_as`` (every on-path AS announcing it
    when None); ``path`` pins the AS sequence, otherwise the shortest path
    found by beaconing is used. ``indices`` overrides the per-AS vector
    (one entry per on-path AS, the source's first).
    """

    src: AsId
    dst: AsId
    index: int = 0
    policy_as: AsId | None = None
    count: int = 60
    interval_ms: float = 1000.0
    path: tuple[AsId, ...] | None = None
    src_host: HostAddr | None = None
    dst_host: HostAddr | None = None
    indices: tuple[int, ...] | None = None


def choose_path(net: Network, src: AsId, dst: AsId, ases: Sequence[AsId] | None = None,
                src_host: HostAddr | None = None, dst_host: HostAddr | None = None) -> EndToEndPath:
    cands = net.paths(src, dst, src_host, dst_host)
    if ases is not None:
        cands = [p for p in cands if tuple(p.ases) == tuple(ases)]
    if not cands:
        raise SimulationError(f"no path from {src} to {dst}" + (f" over {list(map(str, ases))}" if ases else ""))
    return cands[0]


def index_vector(path: EndToEndPath, index: int, policy_as: AsId | None) -> list[int]:
    """``index`` at ``policy_as``, or at every AS announcing it for its hop when None."""
    out = [0]
    for pos in range(1, len(path.hops)):
        if policy_as is None:
            out.append(index if index in candidate_indices(path, pos) else 0)
        else:
            out.append(index if path.hops[pos].as_id == policy_as else 0)
    return out


def _hosts(net: Network, as_id: AsId, host: HostAddr | None) -> HostAddr:
    if host is not None:
        return host
    hosts = net.node(as_id).cfg.hosts
    if not hosts:
        raise SimulationError(f"{as_id} has no hosts")
    return hosts[0]


@dataclass
class _Probe:
    seq: int
    sent_at: int
    indices: list[int]
    validation: PathValid | PathInvalid | None = None


def run_rtt_experiment(net: Network, sc: RttScenario) -> list[RttSample]:
    """Echo probes over one path; each RTT is the sum of link, route and jitter delays.

    The destination validates each probe, then echoes it back over the
    reversed AS path with the same per-AS indices. Any drop aborts the run.
    """
    s_host = _hosts(net, sc.src, sc.src_host)
    d_host = _hosts(net, sc.dst, sc.dst_host)
    path = choose_path(net, sc.src, sc.dst, sc.path, s_host, d_host)
    fwd_hops = net.hop_fields(path)
    rev_hops = net.hop_fields(path, reverse=True)
    indices = list(sc.indices) if sc.indices is not None else index_vector(path, sc.index, sc.policy_as)
    src_ctx = net.source_context(sc.src, s_host)
    dst_ctx = net.dest_context(sc.dst, d_host)
    echo_src = net.source_context(sc.dst, d_host)
    echo_dst = net.dest_context(sc.src, s_host)
    samples: list[RttSample] = []
    failures: list[str] = []

    def dropped(where: AsId, outcome) -> None:
        failures.append(f"packet dropped at {where}: {outcome}")

    def returned(probe: _Probe, pkt: Packet) -> None:
        res = dest_process(echo_dst, pkt)
        if not isinstance(res, Accept):
            failures.append(f"echo rejected at source: {res}")
            return
        samples.append(RttSample(probe.seq, sc.index, (net.loop.now - probe.sent_at) / NS_PER_MS))

    def arrived(probe: _Probe, pkt: Packet) -> None:
        res = dest_process(dst_ctx, pkt)
        if not isinstance(res, Accept):
            failures.append(f"probe rejected at destination: {res}")
            return
        probe.validation = source_validate(src_ctx, res.confirmation, sc.dst, d_host, net.loop.now)
        echo = build_packet(echo_src, rev_hops, sc.src, s_host, probe.indices[::-1], pkt.payload, net.loop.now)
        net.transmit(echo, lambda p: returned(probe, p), dropped)

    def send(seq: int) -> None:
        probe = _Probe(seq, net.loop.now, indices)
        payload = seq.to_bytes(8, "big")
        pkt = build_packet(src_ctx, fwd_hops, sc.dst, d_host, indices, payload, net.loop.now)
        net.transmit(pkt, lambda p: arrived(probe, p), dropped)

    start = net.loop.now
    for seq in range(sc.count):
        net.loop.at(start + int(seq * sc.interval_ms * NS_PER_MS), send, seq)
    net.loop.run()
    if failures:
        raise SimulationError(failures[0])
    return sorted(samples, key=lambda s: s.seq)


def samples_csv(samples: Iterable[RttSample]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["seq", "index", "rtt_ms"])
    for s in samples:
        w.writerow([s.seq, s.index, f"{s.rtt_ms:.3f}"])
    return buf.getvalue()


@dataclass(frozen=True)
class Fault:
    """``skip_hvf_update``, ``tamper_index`` (flips the encrypted index ``offset``
    hops downstream of the faulty AS) or ``wrong_route``."""

    kind: str
    as_id: AsId
    offset: int = 1


FAULT_KINDS = ("skip_hvf_update", "tamper_index", "wrong_route")


def inject_fault(net: Network, fault: Fault) -> Network:
    if fault.as_id not in net.nodes:
        raise UnknownAs(f"{fault.as_id} is not in the topology")
    f = net.nodes[fault.as_id].router.faults
    if fault.kind == "skip_hvf_update":
        f.skip_hvf_update = True
    elif fault.kind == "tamper_index":
        f.tamper_offset = fault.offset
    elif fault.kind == "wrong_route":
        f.wrong_route = True
    else:
        raise ValueError(f"unknown fault kind {fault.kind!r}; expected one of {FAULT_KINDS}")
    return net


def clear_faults(net: Network) -> None:
    for n in net.nodes.values():
        n.router.faults = RouterFaults()


@dataclass
class SendResult:
    seq: int
    delivered: bool
    validation: PathValid | PathInvalid | None = None
    drop: str | None = None
    where: AsId | None = None


@dataclass
class SendReport:
    path: EndToEndPath
    indices: list[int]
    results: list[SendResult] = field(default_factory=list)

    @property
    def delivered(self) -> int:
        return sum(r.delivered for r in self.results)


def run_send(
    net: Network,
    src: AsId,
    dst: AsId,
    indices: Sequence[int] | None = None,
    count: int = 1,
    interval_ms: float = 1000.0,
    path: EndToEndPath | None = None,
    payload: bytes = b"",
) -> SendReport:
    """One-way traffic with destination confirmations checked at the source."""
    s_host = _hosts(net, src, None)
    d_host = _hosts(net, dst, None)
    path = path or choose_path(net, src, dst, None, s_host, d_host)
    hops = net.hop_fields(path)
    idx = list(indices) if indices is not None else [0] * len(hops)
    src_ctx = net.source_context(src, s_host)
    dst_ctx = net.dest_context(dst, d_host)
    report = SendReport(path, idx)

    def send(seq: int) -> None:
        res = SendResult(seq, False)
        report.results.append(res)

        def arrived(pkt: Packet) -> None:
            out = dest_process(dst_ctx, pkt)
            if isinstance(out, Accept):
                res.delivered = True
                res.validation = source_validate(src_ctx, out.confirmation, dst, d_host, net.loop.now)
            else:
                res.drop = out.reason.value
                res.where = dst

        def dropped(where: AsId, outcome) -> None:
            res.where = where
            res.drop = getattr(getattr(outcome, "reason", None), "value", None) or "ControlReply"

        pkt = build_packet(src_ctx, hops, dst, d_host, idx, payload + seq.to_bytes(4, "big"), net.loop.now)
        net.transmit(pkt, arrived, dropped)

    start = net.loop.now
    for seq in range(count):
        net.loop.at(start + int(seq * interval_ms * NS_PER_MS), send, seq)
    net.loop.run()
    return report
