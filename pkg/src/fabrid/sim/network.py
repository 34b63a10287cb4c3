"""Simulated multi-AS network: per-AS services and routers, beaconing, and packet transport."""
from __future__ import annotations

import logging
import random
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Callable

from ..addr import AsId, HostAddr
from ..control_plane.maps import IfIpPair, PolicyMaps
from ..control_plane.paths import EndToEndPath, PathSegment, SegmentKind, enumerate_paths
from ..control_plane.pcb import (
    PCB,
    AsContext,
    IndexConflict,
    PcbError,
    UnsupportedAnnouncement,
    extend_pcb,
    originate_pcb,
)
from ..control_plane.service import ControlService, IntraRoutePolicy
from ..crypto import SymKey, prf
from ..data_plane.endpoint import DestContext, SourceContext
from ..data_plane.packet import HopField, Packet
from ..data_plane.router import (
    ControlReply,
    Drop,
    DropReason,
    Forward,
    ForwardingTable,
    RouterContext,
    router_process,
)
from ..drkey import AsKeyCache
from ..registry import PolicyId, PolicyRegistry, PolicyResolver
from ..trust import GLOBAL_AUTHORITY, TrustStore
from .engine import NS_PER_MS, NS_PER_S, EventLoop
from .topology import AsConfig, LinkConfig, Topology

log = logging.getLogger(__name__)

BEACON_INTERVAL_NS = 5 * NS_PER_S


class SimulationError(RuntimeError):
    pass


class UnknownAs(KeyError):
    def __str__(self) -> str:
        return str(self.args[0]) if self.args else ""


@dataclass
class Diagnostic:
    as_id: AsId
    kind: str
    detail: str

    def __str__(self) -> str:
        return f"{self.as_id}: {self.kind}: {self.detail}"


def build_maps(cfg: AsConfig, interfaces: list[int]) -> PolicyMaps | None:
    if not cfg.policies:
        return None
    maps = PolicyMaps(cfg.id)
    for ann in cfg.policies:
        maps.dmap[ann.index] = ann.pid
        if ann.pairs == "all":
            ends: list = list(interfaces)
            keys = [IfIpPair(i, j) for i in ends for j in ends if i != j]
            if cfg.host_range is not None:
                keys += [IfIpPair(i, cfg.host_range) for i in ends]
                keys += [IfIpPair(cfg.host_range, i) for i in ends]
            else:
                keys += [IfIpPair(0, i) for i in ends] + [IfIpPair(i, 0) for i in ends]
        else:
            keys = [IfIpPair(a, b) for a, b in ann.pairs]
        for k in keys:
            maps.imap[k] = maps.imap.get(k, frozenset()) | {ann.index}
    return maps


@dataclass
class Node:
    cfg: AsConfig
    service: ControlService
    router: RouterContext
    ctx: AsContext
    registry: PolicyRegistry
    links: dict[int, tuple[LinkConfig, AsId, int]]

    @property
    def as_id(self) -> AsId:
        return self.cfg.id


@dataclass
class TrafficStats:
    sent: int = 0
    delivered: int = 0
    dropped: Counter = field(default_factory=Counter)
    replies: int = 0

    @property
    def balanced(self) -> bool:
        return self.sent == self.delivered + sum(self.dropped.values()) + self.replies


class Network:
    def __init__(self, topo: Topology, rng_seed: int | None = None):
        self.topo = topo
        self.loop = EventLoop()
        self.rng = random.Random(topo.seed if rng_seed is None else rng_seed)
        self.trust = TrustStore()
        assert topo.authority is not None
        self.trust.add_pair(topo.authority)
        self.global_registry = PolicyRegistry(topo.authority, None)
        for pid, desc in sorted(topo.global_policies.items()):
            self.global_registry.register(GLOBAL_AUTHORITY, PolicyId(pid), desc)
        self.nodes: dict[AsId, Node] = {}
        for cfg in topo.ases.values():
            assert cfg.keypair is not None and cfg.secret is not None
            self.trust.add_pair(cfg.keypair)
        for cfg in topo.ases.values():
            self.nodes[cfg.id] = self._make_node(cfg)
        self.diagnostics: list[Diagnostic] = []
        self.stats = TrafficStats()
        self._segment_ids = 0
        self._sources: dict[tuple[AsId, HostAddr], SourceContext] = {}
        self._dests: dict[tuple[AsId, HostAddr], DestContext] = {}
        self._sigma: dict[tuple[AsId, int, int], bytes] = {}

    def _make_node(self, cfg: AsConfig) -> Node:
        registry = PolicyRegistry(cfg.keypair, cfg.id)
        for ann in cfg.policies:
            if ann.pid.owner is not None and ann.description is not None:
                registry.register(cfg.id, ann.pid, ann.description)
        links = self.topo.interfaces(cfg.id)
        maps = build_maps(cfg, sorted(links))
        me = cfg.id
        service = ControlService(
            me,
            cfg.secret,
            set(cfg.hosts),
            [IntraRoutePolicy(r.src, r.dst, r.pids) for r in cfg.intra],
            PolicyResolver(self.trust, self._registry_of),
            key_cache=AsKeyCache(lambda issuer: self.nodes[issuer].service.issue_as_key(me)),
        )
        table: dict[int, list[str]] = {}
        for r in cfg.routes:
            for i in r.indices:
                table.setdefault(i, []).append(r.id)
        router = RouterContext(me, cfg.secret, ForwardingTable({k: tuple(v) for k, v in table.items()}, cfg.default_route.id))
        supported = frozenset(table)
        ctx = AsContext(me, cfg.keypair, maps, supported)
        return Node(cfg, service, router, ctx, registry, links)

    def _registry_of(self, pid) -> PolicyRegistry:
        if pid.owner is None:
            return self.global_registry
        node = self.nodes.get(pid.owner)
        if node is None:
            raise UnknownAs(pid.owner)
        return node.registry

    def node(self, as_id: AsId) -> Node:
        n = self.nodes.get(as_id)
        if n is None:
            raise UnknownAs(f"{as_id} is not in the topology")
        return n

    # -- beaconing -------------------------------------------------------------

    def now_s(self) -> int:
        return self.topo.start_time + self.loop.now // NS_PER_S

    def _extend(self, node: Node, pcb: PCB, ingress: int, egress: int) -> PCB | None:
        try:
            return extend_pcb(pcb, node.ctx, ingress, egress, self.now_s(), self.trust)
        except (UnsupportedAnnouncement, IndexConflict) as e:
            self.diagnostics.append(Diagnostic(node.as_id, type(e).__name__, str(e)))
            bare = replace(node.ctx, maps=None)
            return extend_pcb(pcb, bare, ingress, egress, self.now_s(), self.trust)
        except PcbError as e:
            self.diagnostics.append(Diagnostic(node.as_id, type(e).__name__, str(e)))
            return None

    def _originate(self, node: Node, egress: int) -> PCB:
        self._segment_ids = (self._segment_ids + 1) & 0xFFFF
        try:
            return originate_pcb(node.ctx, egress, self.now_s(), self._segment_ids)
        except (UnsupportedAnnouncement, IndexConflict) as e:
            self.diagnostics.append(Diagnostic(node.as_id, type(e).__name__, str(e)))
            return originate_pcb(replace(node.ctx, maps=None), egress, self.now_s(), self._segment_ids)

    def _send_pcb(self, pcb: PCB, link: LinkConfig, to: AsId, to_if: int) -> None:
        self.loop.after(int(link.latency_ms * NS_PER_MS), self._receive_pcb, pcb, to, to_if, link.kind)

    def _receive_pcb(self, pcb: PCB, at: AsId, ingress: int, kind: str) -> None:
        node = self.nodes[at]
        if at in pcb.ases:
            return
        term = self._extend(node, pcb, ingress, 0)
        if term is None:
            return
        if kind == "core":
            node.service.beacons.insert(PathSegment(SegmentKind.CORE, term))
        else:
            node.service.beacons.insert(PathSegment(SegmentKind.UP, term))
            self.nodes[pcb.entries[0].as_id].service.beacons.insert(PathSegment(SegmentKind.DOWN, term))
        if len(pcb) + 1 >= self.topo.max_segment_len:
            return
        for ifid in sorted(node.links):
            link, nb, nb_if = node.links[ifid]
            if link.kind != kind or nb in pcb.ases:
                continue
            if kind == "parent" and link.a != at:
                continue
            ext = self._extend(node, pcb, ingress, ifid)
            if ext is not None:
                self._send_pcb(ext, link, nb, nb_if)

    def beacon_round(self) -> None:
        for as_id in sorted(self.nodes):
            node = self.nodes[as_id]
            if not node.cfg.core:
                continue
            for ifid in sorted(node.links):
                link, nb, nb_if = node.links[ifid]
                if link.kind == "core" or link.a == as_id:
                    self._send_pcb(self._originate(node, ifid), link, nb, nb_if)

    # -- paths ---------------------------------------------------------------

    def segments(self, kind: SegmentKind, at: AsId | None = None) -> list[PathSegment]:
        if at is not None:
            return self.node(at).service.beacons.segments(kind)
        out = []
        for a in sorted(self.nodes):
            if self.nodes[a].cfg.core:
                out += self.nodes[a].service.beacons.segments(kind)
        return out

    def paths(
        self, src: AsId, dst: AsId, src_host: HostAddr | None = None, dst_host: HostAddr | None = None
    ) -> list[EndToEndPath]:
        self.node(src)
        self.node(dst)
        if src_host is None and self.nodes[src].cfg.hosts:
            src_host = self.nodes[src].cfg.hosts[0]
        if dst_host is None and self.nodes[dst].cfg.hosts:
            dst_host = self.nodes[dst].cfg.hosts[0]
        if src == dst:
            return []
        found = enumerate_paths(
            src,
            dst,
            self.segments(SegmentKind.UP, src),
            self.segments(SegmentKind.CORE),
            self.segments(SegmentKind.DOWN),
            src_host,
            dst_host,
        )
        return sorted(found, key=lambda p: (len(p), p.ases))

    # -- data plane ------------------------------------------------------------

    def sigma(self, as_id: AsId, ingress: int, egress: int) -> bytes:
        key = (as_id, ingress, egress)
        s = self._sigma.get(key)
        if s is None:
            secret = self.nodes[as_id].cfg.secret
            s = prf(secret.key, as_id.encode() + ingress.to_bytes(2, "big") + egress.to_bytes(2, "big"))
            self._sigma[key] = s
        return s

    def hop_fields(self, path: EndToEndPath, reverse: bool = False) -> list[HopField]:
        hops = list(path.hops)
        if reverse:
            hops = [replace(h, ingress=h.egress, egress=h.ingress) for h in reversed(hops)]
        return [HopField(h.as_id, h.ingress, h.egress, self.sigma(h.as_id, h.ingress, h.egress)) for h in hops]

    def source_context(self, as_id: AsId, host: HostAddr) -> SourceContext:
        key = (as_id, host)
        ctx = self._sources.get(key)
        if ctx is None:
            svc = self.node(as_id).service
            hop_cache: dict[AsId, SymKey] = {}
            pair_cache: dict[tuple[AsId, HostAddr], SymKey] = {}

            def hop_keys(remote: AsId) -> SymKey:
                k = hop_cache.get(remote)
                if k is None:
                    k = hop_cache[remote] = svc.host_key(remote, host).key
                return k

            def dest_key(remote: AsId, remote_host: HostAddr) -> SymKey:
                k = pair_cache.get((remote, remote_host))
                if k is None:
                    k = pair_cache[(remote, remote_host)] = svc.host_host_key(remote, remote_host, host).key
                return k

            ctx = self._sources[key] = SourceContext(as_id, host, hop_keys, dest_key)
        return ctx

    def dest_context(self, as_id: AsId, host: HostAddr) -> DestContext:
        key = (as_id, host)
        ctx = self._dests.get(key)
        if ctx is None:
            svc = self.node(as_id).service
            cache: dict[tuple[AsId, HostAddr], SymKey] = {}

            def pair_key(remote: AsId, remote_host: HostAddr) -> SymKey:
                k = cache.get((remote, remote_host))
                if k is None:
                    k = cache[(remote, remote_host)] = svc.local_host_host_key(remote, host, remote_host).key
                return k

            ctx = self._dests[key] = DestContext(as_id, host, pair_key)
        return ctx

    def route_delay_ns(self, as_id: AsId, route_id: str) -> int:
        r = self.nodes[as_id].cfg.all_routes()[route_id]
        return int(round((r.latency_ms + r.jitter.draw(self.rng)) * NS_PER_MS))

    def link_delay_ns(self, link: LinkConfig) -> int:
        return int(round((link.latency_ms + link.jitter.draw(self.rng)) * NS_PER_MS))

    def transmit(
        self,
        pkt: Packet,
        on_deliver: Callable[[Packet], None],
        on_drop: Callable[[AsId, Drop | ControlReply], None] | None = None,
    ) -> None:
        """Inject ``pkt`` at its first AS now; callbacks fire as events complete."""
        self.stats.sent += 1
        self.loop.after(0, self._hop, pkt, on_deliver, on_drop)

    def _hop(self, pkt: Packet, on_deliver, on_drop) -> None:
        node = self.nodes[pkt.hops[pkt.cur].as_id]
        out = router_process(node.router, pkt, self.loop.now)
        if not isinstance(out, Forward):
            if isinstance(out, Drop):
                self.stats.dropped[out.reason.value] += 1
            else:
                self.stats.replies += 1
            if on_drop is not None:
                on_drop(node.as_id, out)
            return
        delay = self.route_delay_ns(node.as_id, out.route)
        nxt = out.packet
        if nxt.cur >= nxt.n:
            self.loop.after(delay, self._deliver, nxt, on_deliver)
            return
        egress = nxt.hops[nxt.cur - 1].egress
        link = node.links.get(egress)
        if link is None or link[1] != nxt.hops[nxt.cur].as_id:
            self.stats.dropped[DropReason.NO_LINK.value] += 1
            if on_drop is not None:
                on_drop(node.as_id, Drop(DropReason.NO_LINK))
            return
        self.loop.after(delay + self.link_delay_ns(link[0]), self._hop, nxt, on_deliver, on_drop)

    def _deliver(self, pkt: Packet, on_deliver) -> None:
        self.stats.delivered += 1
        on_deliver(pkt)


def run_beaconing(net: Network, rounds: int = 1, interval_ns: int = BEACON_INTERVAL_NS) -> dict[AsId, object]:
    """Run ``rounds`` beaconing rounds to quiescence; returns each AS's beacon store."""
    for r in range(rounds):
        start = max(net.loop.now, r * interval_ns)
        net.loop.at(start, net.beacon_round)
        net.loop.run()
    return {a: n.service.beacons for a, n in sorted(net.nodes.items())}
