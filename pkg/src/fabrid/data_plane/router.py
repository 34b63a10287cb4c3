"""Border-router processing of policy-carrying packets."""
from __future__ import annotations

import enum
import struct
import zlib
from collections import Counter
from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import Mapping

from ..addr import AsId, HostAddr
from ..crypto import ct_equal, keystream, prf
from ..drkey import AsSecret, router_rederive
from .dupsup import NS_PER_MS, DupVerdict, DuplicateFilter
from .packet import HVF_LEN, Packet, hvf_input

DEFAULT_SKEW_NS = 500 * NS_PER_MS
DEFAULT_LIFETIME_NS = 1_000 * NS_PER_MS
CTRL_UNSUPPORTED_INDEX = 1


class DropReason(enum.Enum):
    STALE = "Stale"
    REPLAY = "Replay"
    BAD_HVF = "BadHvf"
    WRONG_HOP = "WrongHop"
    BAD_DVF = "BadDvf"
    NO_LINK = "NoLink"


class ForwardingTable:
    """Immutable index -> intra-AS routes map; index 0 always resolves to the default route."""

    def __init__(self, routes: Mapping[int, tuple[str, ...]], default: str = "default"):
        table = {int(k): tuple(v) for k, v in routes.items() if v}
        table.setdefault(0, (default,))
        self._table: Mapping[int, tuple[str, ...]] = MappingProxyType(table)
        self.default = default

    def lookup(self, index: int) -> tuple[str, ...] | None:
        return self._table.get(index)

    def indices(self) -> frozenset[int]:
        return frozenset(self._table)

    def __len__(self) -> int:
        return len(self._table)


@dataclass(frozen=True)
class ControlMessage:
    kind: int
    ts: int
    index: int
    as_id: AsId
    mac: bytes = b""

    def mac_input(self) -> bytes:
        return struct.pack(">BQH", self.kind, self.ts, self.index) + self.as_id.encode()

    def encode(self) -> bytes:
        return self.mac_input() + self.mac


@dataclass(frozen=True)
class Forward:
    route: str
    packet: Packet
    index: int


@dataclass(frozen=True)
class Drop:
    reason: DropReason


@dataclass(frozen=True)
class ControlReply:
    message: ControlMessage


Outcome = Forward | Drop | ControlReply


@dataclass
class RouterFaults:
    """Deliberate misbehaviour for fault-injection experiments."""

    skip_hvf_update: bool = False
    tamper_offset: int | None = None
    wrong_route: bool = False


def flow_route(routes: tuple[str, ...], src_as: AsId, src_host: HostAddr, dst_as: AsId, dst_host: HostAddr) -> str:
    """Stable per-flow choice so packets of one flow are never reordered across routes."""
    if len(routes) == 1:
        return routes[0]
    h = zlib.crc32(src_as.encode() + src_host.encode() + dst_as.encode() + dst_host.encode())
    return routes[h % len(routes)]


@dataclass
class RouterContext:
    as_id: AsId
    secret: AsSecret
    table: ForwardingTable
    dup: DuplicateFilter = field(default_factory=DuplicateFilter)
    skew_ns: int = DEFAULT_SKEW_NS
    lifetime_ns: int = DEFAULT_LIFETIME_NS
    faults: RouterFaults = field(default_factory=RouterFaults)
    drops: Counter = field(default_factory=Counter)
    forwarded: int = 0
    replies: int = 0

    def install(self, table: ForwardingTable) -> None:
        self.table = table

    def fresh(self, ts: int, now: int) -> bool:
        return ts - self.skew_ns <= now <= ts + self.lifetime_ns + self.skew_ns


def _drop(ctx: RouterContext, reason: DropReason) -> Drop:
    ctx.drops[reason] += 1
    return Drop(reason)


def router_process(ctx: RouterContext, pkt: Packet, now: int) -> Outcome:
    i = pkt.cur
    if i >= pkt.n or pkt.hops[i].as_id != ctx.as_id:
        return _drop(ctx, DropReason.WRONG_HOP)
    if not ctx.fresh(pkt.ts, now):
        return _drop(ctx, DropReason.STALE)
    if ctx.dup.check(pkt.src_as, pkt.src_host, pkt.ts, now) is DupVerdict.REPLAY:
        return _drop(ctx, DropReason.REPLAY)
    key = router_rederive(ctx.secret, pkt.src_as, pkt.src_host).key
    enc = pkt.enc_indices[i]
    full = prf(key, hvf_input(pkt.ts, pkt.src_as, pkt.src_host, pkt.hops[i].sigma, enc))
    if not ct_equal(full[:HVF_LEN], pkt.hvfs[i]):
        return _drop(ctx, DropReason.BAD_HVF)
    ks = keystream(key, pkt.ts)
    index = ((enc[0] ^ ks[0]) << 8) | (enc[1] ^ ks[1])
    routes = ctx.table.lookup(index)
    if routes is None:
        msg = ControlMessage(CTRL_UNSUPPORTED_INDEX, pkt.ts, index, ctx.as_id)
        msg = replace(msg, mac=prf(key, msg.mac_input())[:4])
        ctx.replies += 1
        return ControlReply(msg)
    f = ctx.faults
    if f.wrong_route:
        wrong = [r for i2 in sorted(ctx.table.indices()) if i2 != index for r in ctx.table.lookup(i2) or ()]
        if wrong:
            routes = (wrong[0],)
    route = flow_route(routes, pkt.src_as, pkt.src_host, pkt.dst_as, pkt.dst_host)
    hvfs = list(pkt.hvfs)
    if not f.skip_hvf_update:
        hvfs[i] = full[HVF_LEN:2 * HVF_LEN]
    enc_indices = pkt.enc_indices
    if f.tamper_offset is not None and 0 <= i + f.tamper_offset < pkt.n:
        j = i + f.tamper_offset
        lst = list(enc_indices)
        lst[j] = bytes([lst[j][0] ^ 0x01, lst[j][1]])
        enc_indices = tuple(lst)
    ctx.forwarded += 1
    return Forward(route, replace(pkt, hvfs=tuple(hvfs), enc_indices=enc_indices, cur=i + 1), index)
