"""Source and destination host logic: packet construction, destination
validation, path-validation confirmations and control-message checks."""
from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Callable, Sequence

from ..addr import AsId, HostAddr
from ..crypto import SymKey, ct_equal, digest16, keystream, prf, xor
from .dupsup import NS_PER_MS
from .packet import DVF_LEN, HVF_LEN, HopField, Packet, hvf_input
from .router import ControlMessage, Drop, DropReason

DEFAULT_RETENTION_NS = 10_000 * NS_PER_MS
CONFIRM_TAG = b"\x01"

HopKeys = Callable[[AsId], SymKey]
PairKey = Callable[[AsId, HostAddr], SymKey]


class EndpointError(Exception):
    pass


class MissingKey(EndpointError):
    def __init__(self, hop: int, as_id: AsId):
        self.hop = hop
        super().__init__(f"no key for hop {hop} ({as_id})")


class IndexCountMismatch(EndpointError):
    pass


class UnknownTimestamp(EndpointError):
    pass


class InvalidConfirmation(EndpointError):
    pass


class InvalidControlMessage(EndpointError):
    pass


def encrypt_index(index: int, key: SymKey | bytes, ts: int) -> bytes:
    return xor(index.to_bytes(2, "big"), keystream(key, ts)[:2])


def decrypt_index(enc: bytes, key: SymKey | bytes, ts: int) -> int:
    return int.from_bytes(xor(enc, keystream(key, ts)[:2]), "big")


def dvf_for(key: SymKey | bytes, ts: int, payload: bytes) -> bytes:
    return prf(key, ts.to_bytes(8, "big") + digest16(payload))[:DVF_LEN]


@dataclass
class _Sent:
    sent_at: int
    ases: tuple[AsId, ...]
    expected: tuple[bytes, ...]


@dataclass
class SourceContext:
    """``hop_keys(A_i)`` yields K_{A_i -> src_as:host}; ``dest_key(A_l, H_D)`` the host-to-host key."""

    as_id: AsId
    host: HostAddr
    hop_keys: HopKeys
    dest_key: PairKey
    retention_ns: int = DEFAULT_RETENTION_NS
    retained: OrderedDict = field(default_factory=OrderedDict)
    last_ts: int = -1

    def next_ts(self, now: int) -> int:
        ts = max(now, self.last_ts + 1)
        self.last_ts = ts
        return ts

    def expire(self, now: int) -> None:
        while self.retained:
            ts, sent = next(iter(self.retained.items()))
            if sent.sent_at + self.retention_ns >= now:
                break
            del self.retained[ts]

    def lookup(self, ts: int, now: int) -> _Sent:
        self.expire(now)
        sent = self.retained.get(ts)
        if sent is None:
            raise UnknownTimestamp(f"no retained state for ts {ts}")
        return sent


def build_packet(
    ctx: SourceContext,
    hops: Sequence[HopField],
    dst_as: AsId,
    dst_host: HostAddr,
    indices: Sequence[int],
    payload: bytes,
    now: int,
    ts: int | None = None,
) -> Packet:
    """Encrypt one index per hop, MAC it into the HVF, and add the DVF.

    ``indices`` has one entry per on-path AS; the first (source AS) entry is
    normally 0.
    """
    if len(indices) != len(hops):
        raise IndexCountMismatch(f"{len(indices)} indices for {len(hops)} hops")
    ts = ctx.next_ts(now) if ts is None else ts
    enc, hvfs, expected = [], [], []
    for pos, (hf, idx) in enumerate(zip(hops, indices)):
        try:
            key = ctx.hop_keys(hf.as_id)
        except KeyError:
            key = None
        if key is None:
            raise MissingKey(pos, hf.as_id)
        e = encrypt_index(idx, key, ts)
        full = prf(key, hvf_input(ts, ctx.as_id, ctx.host, hf.sigma, e))
        enc.append(e)
        hvfs.append(full[:HVF_LEN])
        expected.append(full[HVF_LEN:2 * HVF_LEN])
    dvf = dvf_for(ctx.dest_key(dst_as, dst_host), ts, payload)
    ctx.expire(now)
    ctx.retained[ts] = _Sent(now, tuple(h.as_id for h in hops), tuple(expected))
    return Packet(
        ts, ctx.as_id, ctx.host, dst_as, dst_host, tuple(hops), tuple(enc), tuple(hvfs), dvf, payload
    )


@dataclass(frozen=True)
class Confirmation:
    ts: int
    hvfs: tuple[bytes, ...]
    mac: bytes = b""

    def mac_input(self) -> bytes:
        return CONFIRM_TAG + self.ts.to_bytes(8, "big") + b"".join(self.hvfs)


@dataclass(frozen=True)
class Accept:
    confirmation: Confirmation
    payload: bytes


@dataclass
class DestContext:
    """``pair_key(A_0, H_S)`` yields K_{dst_as:host -> A_0:H_S}."""

    as_id: AsId
    host: HostAddr
    pair_key: PairKey
    dropped: int = 0


def dest_process(ctx: DestContext, pkt: Packet) -> Accept | Drop:
    key = ctx.pair_key(pkt.src_as, pkt.src_host)
    if not ct_equal(dvf_for(key, pkt.ts, pkt.payload), pkt.dvf):
        ctx.dropped += 1
        return Drop(DropReason.BAD_DVF)
    conf = Confirmation(pkt.ts, pkt.hvfs)
    conf = Confirmation(conf.ts, conf.hvfs, prf(key, conf.mac_input())[:4])
    return Accept(conf, pkt.payload)


@dataclass(frozen=True)
class PathValid:
    ts: int


@dataclass(frozen=True)
class PathInvalid:
    ts: int
    hops: tuple[int, ...]


def source_validate(ctx: SourceContext, conf: Confirmation, dst_as: AsId, dst_host: HostAddr, now: int) -> PathValid | PathInvalid:
    """Compare confirmed HVFs with the values retained at send time.

    Mismatching hops are reported 1-based, hop 1 being the source AS.
    """
    sent = ctx.lookup(conf.ts, now)
    key = ctx.dest_key(dst_as, dst_host)
    if not ct_equal(prf(key, conf.mac_input())[:4], conf.mac):
        raise InvalidConfirmation("confirmation MAC does not verify")
    if len(conf.hvfs) != len(sent.expected):
        return PathInvalid(conf.ts, tuple(range(1, len(sent.expected) + 1)))
    bad = tuple(
        pos + 1 for pos, (got, want) in enumerate(zip(conf.hvfs, sent.expected)) if not ct_equal(got, want)
    )
    return PathInvalid(conf.ts, bad) if bad else PathValid(conf.ts)


def verify_control_message(ctx: SourceContext, msg: ControlMessage, now: int) -> bool:
    try:
        sent = ctx.lookup(msg.ts, now)
    except UnknownTimestamp:
        raise InvalidControlMessage(f"no packet with ts {msg.ts} in retention") from None
    if msg.as_id not in sent.ases:
        raise InvalidControlMessage(f"{msg.as_id} is not on the path of packet {msg.ts}")
    key = ctx.hop_keys(msg.as_id)
    if not ct_equal(prf(key, msg.mac_input())[:4], msg.mac):
        raise InvalidControlMessage("control message MAC does not verify")
    return True
