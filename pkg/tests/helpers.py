"""Keyed AS chains driven straight through the data-plane functions, and signed beacons."""
from __future__ import annotations

import random
from dataclasses import dataclass, field

from fabrid.addr import AsId, HostAddr
from fabrid.control_plane import AsContext, IfIpPair, PcbError, PolicyMaps, extend_pcb, originate_pcb, verify_pcb
from fabrid.crypto import SigKeyPair, SymKey
from fabrid.data_plane import (
    Accept,
    DestContext,
    DuplicateFilter,
    ForwardingTable,
    Forward,
    HopField,
    Packet,
    RouterContext,
    SourceContext,
    build_packet,
    dest_process,
    router_process,
)
from fabrid.drkey import AsSecret, derive_as_level, derive_host_host, router_rederive
from fabrid.registry import PolicyId
from fabrid.trust import TrustStore

NS_PER_S = 1_000_000_000
SUPPORTED = (1, 2, 7)


@dataclass
class Chain:
    secrets: list[AsSecret]
    hops: list[HopField]
    src: SourceContext
    dst: DestContext
    routers: list[RouterContext]
    src_host: HostAddr
    dst_host: HostAddr
    log: list = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.hops)

    @property
    def dst_as(self) -> AsId:
        return self.hops[-1].as_id

    def build(self, indices, payload: bytes = b"payload", now: int = 0, ts: int | None = None) -> Packet:
        return build_packet(self.src, self.hops, self.dst_as, self.dst_host, indices, payload, now, ts)


def make_chain(n: int, rng: random.Random, src_host: str = "10.0.0.1", dst_host: str = "10.9.0.2") -> Chain:
    secrets = [AsSecret(SymKey(rng.randbytes(16)), AsId(1 + i % 3, 0x100 + i)) for i in range(n)]
    hops = [
        HopField(s.owner, 0 if i == 0 else 2 * i, 0 if i == n - 1 else 2 * i + 1, rng.randbytes(16))
        for i, s in enumerate(secrets)
    ]
    sh, dh = HostAddr.parse(src_host), HostAddr.parse(dst_host)
    src_as = secrets[0].owner
    by_as = {s.owner: s for s in secrets}
    dest_secret = secrets[-1]

    def hop_keys(a: AsId) -> SymKey:
        return router_rederive(by_as[a], src_as, sh).key

    def dest_key(a: AsId, h: HostAddr) -> SymKey:
        return derive_host_host(derive_as_level(by_as[a], src_as), h, sh).key

    def pair_key(a: AsId, h: HostAddr) -> SymKey:
        return derive_host_host(derive_as_level(dest_secret, a), dh, h).key

    table = ForwardingTable({i: (f"route-{i}",) for i in SUPPORTED})
    routers = [RouterContext(s.owner, s, table, DuplicateFilter()) for s in secrets]
    return Chain(
        secrets,
        hops,
        SourceContext(src_as, sh, hop_keys, dest_key),
        DestContext(dest_secret.owner, dh, pair_key),
        routers,
        sh,
        dh,
    )


def traverse(chain: Chain, pkt: Packet, now: int, tamper=None):
    """Run ``pkt`` through every router; ``tamper(pos, pkt)`` may rewrite it before hop ``pos``.

    Returns (outcome, position) where outcome is the destination's result
    or the first non-Forward router outcome.
    """
    for pos in range(pkt.cur, chain.n):
        if tamper is not None:
            pkt = tamper(pos, pkt)
        out = router_process(chain.routers[pos], pkt, now)
        chain.log.append((pos, out))
        if not isinstance(out, Forward):
            return out, pos
        pkt = out.packet
    return dest_process(chain.dst, pkt), chain.n


def deliver(chain: Chain, indices, payload: bytes = b"payload", now: int = 0):
    pkt = chain.build(indices, payload, now)
    out, _ = traverse(chain, pkt, now)
    assert isinstance(out, Accept), out
    return pkt, out


# -- beacons ----------------------------------------------------------------------

PCB_NOW = 1_700_000_000


def as_context(i: int, with_maps: bool = True) -> AsContext:
    as_id = AsId(1, 0x200 + i)
    maps = None
    if with_maps:
        maps = PolicyMaps(
            as_id,
            {IfIpPair(1, 2): frozenset({1, 2}), IfIpPair(2, 1): frozenset({1})},
            {1: PolicyId(7), 2: PolicyId(100 + i, as_id)},
        )
    kp = SigKeyPair.generate(as_id, bytes([i + 1]) * 32)
    return AsContext(as_id, kp, maps, frozenset({1, 2}) if with_maps else frozenset())


def beacon(n: int = 3, with_maps: bool = True):
    """An ``n``-entry PCB and a trust store holding every signer's key."""
    ctxs = [as_context(i, with_maps) for i in range(n)]
    trust = TrustStore()
    for c in ctxs:
        trust.add_pair(c.keypair)
    pcb = originate_pcb(ctxs[0], 2, PCB_NOW, segment_id=9)
    for i, c in enumerate(ctxs[1:], 1):
        pcb = extend_pcb(pcb, c, 1, 2 if i < n - 1 else 0, PCB_NOW, trust)
    return pcb, trust, ctxs


def pcb_rejects(data: bytes, trust: TrustStore, now: int = PCB_NOW) -> bool:
    """True iff the encoded beacon fails decoding or verification."""
    try:
        verify_pcb(data, trust, now)
    except PcbError:
        return True
    return False


def byte_mutations(data: bytes, deltas=(0x01, 0x80, 0xFF)):
    """Every single-byte change of ``data`` by XOR with each of ``deltas``."""
    for pos in range(len(data)):
        for d in deltas:
            out = bytearray(data)
            out[pos] ^= d
            yield pos, bytes(out)
