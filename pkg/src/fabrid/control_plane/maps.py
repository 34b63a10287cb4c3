"""Per-AS policy maps carried in PCB extensions and their wire encoding.

``imap`` maps an ordered interface/IP-range pair to the set of policy indices
supported on it; ``dmap`` maps each index to a global or AS-local policy id.

Encoding (all integers big-endian)::

    header   u16 #IF-IF | u16 #IF-IP | u16 #IP-IF | u16 #D          (8 bytes)
    IF-IF    u16 ingress | u16 egress | u8 n | n x u16 index         (5 + 2n)
    IF-IP    u16 if | 8-byte address | u8 prefix | u8 n | n x u16     (12 + 2n)
    IP-IF    same layout as IF-IP, the range is the left element
    D        u16 index | u8 scope (0 global, 1 local) | u32 pid | u8 0  (8)

Entries are sorted, so the encoding is a function of the map contents.
"""
from __future__ import annotations

import ipaddress
import struct
from dataclasses import dataclass, field
from typing import Iterable, Union

from ..addr import AsId, HostAddr
from ..registry import PolicyId

MAX_INDEX = 0xFFFF
MAX_INDICES_PER_PAIR = 255
HEADER_LEN = 8
IFIF_FIXED = 5
IFIP_FIXED = 12
D_ENTRY_LEN = 8


class MapError(ValueError):
    pass


class TooManyIndices(MapError):
    pass


class MapDecodeError(MapError):
    pass


@dataclass(frozen=True, order=True)
class IpRange:
    addr: int
    prefix: int

    def __post_init__(self) -> None:
        if not 0 <= self.addr < (1 << 32):
            raise MapError("IPv4 range address out of range")
        if not 0 <= self.prefix <= 32:
            raise MapError("prefix length must be within 0..32")

    @classmethod
    def parse(cls, text: str) -> IpRange:
        net = ipaddress.IPv4Network(text, strict=False)
        return cls(int(net.network_address), net.prefixlen)

    def contains(self, host: HostAddr) -> bool:
        mask = ((1 << 32) - 1) ^ ((1 << (32 - self.prefix)) - 1)
        return (host.value & mask) == (self.addr & mask)

    def __str__(self) -> str:
        return f"{ipaddress.IPv4Address(self.addr)}/{self.prefix}"


Endpoint = Union[int, IpRange]


def _sort_key(e: Endpoint) -> tuple:
    return (0, e, 0) if isinstance(e, int) else (1, e.addr, e.prefix)


@dataclass(frozen=True)
class IfIpPair:
    """Ordered (left, right) pair of interface ids and/or IP ranges; never two ranges."""

    left: Endpoint
    right: Endpoint

    def __post_init__(self) -> None:
        if isinstance(self.left, IpRange) and isinstance(self.right, IpRange):
            raise MapError("an IP-range x IP-range pair is not a valid key")
        for e in (self.left, self.right):
            if isinstance(e, int) and not 0 <= e <= 0xFFFF:
                raise MapError(f"interface id out of range: {e}")

    @property
    def kind(self) -> str:
        if isinstance(self.left, IpRange):
            return "IP-IF"
        if isinstance(self.right, IpRange):
            return "IF-IP"
        return "IF-IF"

    def sort_key(self) -> tuple:
        return (_sort_key(self.left), _sort_key(self.right))

    def __str__(self) -> str:
        return f"({self.left}, {self.right})"


@dataclass
class PolicyMaps:
    owner: AsId
    imap: dict[IfIpPair, frozenset[int]] = field(default_factory=dict)
    dmap: dict[int, PolicyId] = field(default_factory=dict)

    def validate(self) -> None:
        for idx, pid in self.dmap.items():
            if not 0 < idx <= MAX_INDEX:
                raise MapError(f"announced policy index must be non-zero 16-bit, got {idx}")
            if pid.owner is not None and pid.owner != self.owner:
                raise MapError(f"{pid} is local to another AS and cannot be announced by {self.owner}")
        for pair, idxs in self.imap.items():
            if len(idxs) > MAX_INDICES_PER_PAIR:
                raise TooManyIndices(f"{len(idxs)} indices on {pair}; at most {MAX_INDICES_PER_PAIR}")
            missing = [i for i in idxs if i not in self.dmap]
            if missing:
                raise MapError(f"indices {sorted(missing)} on {pair} have no policy id")

    def indices(self) -> set[int]:
        out: set[int] = set()
        for v in self.imap.values():
            out |= v
        return out

    def indices_for(self, ingress: int, egress: int) -> frozenset[int]:
        return self.imap.get(IfIpPair(ingress, egress), frozenset())

    def indices_for_host(self, ingress: int | None, egress: int | None, host: HostAddr) -> frozenset[int]:
        """Indices announced between an interface and an IP range containing ``host``."""
        out: set[int] = set()
        for pair, idxs in self.imap.items():
            if egress is not None and isinstance(pair.left, IpRange):
                if pair.right == egress and pair.left.contains(host):
                    out |= idxs
            if ingress is not None and isinstance(pair.right, IpRange):
                if pair.left == ingress and pair.right.contains(host):
                    out |= idxs
        return frozenset(out)

    def index_of(self, pid: PolicyId) -> list[int]:
        return sorted(i for i, p in self.dmap.items() if p == pid)


def _encode_idxs(idxs: Iterable[int]) -> bytes:
    s = sorted(idxs)
    if len(s) > MAX_INDICES_PER_PAIR:
        raise TooManyIndices(f"{len(s)} indices on one pair; at most {MAX_INDICES_PER_PAIR}")
    return struct.pack(f">B{len(s)}H", len(s), *s)


def _encode_range(r: IpRange) -> bytes:
    return r.addr.to_bytes(8, "big") + bytes([r.prefix])


@dataclass(frozen=True)
class MapSizes:
    header: int
    ifif: int
    ifip: int
    dmap: int

    @property
    def imap(self) -> int:
        return self.ifif + self.ifip

    @property
    def total(self) -> int:
        return self.header + self.ifif + self.ifip + self.dmap


def _sections(maps: PolicyMaps) -> tuple[list[bytes], list[bytes], list[bytes], list[bytes]]:
    maps.validate()
    ifif, ifip, ipif, d = [], [], [], []
    for pair in sorted(maps.imap, key=IfIpPair.sort_key):
        idxs = _encode_idxs(maps.imap[pair])
        if pair.kind == "IF-IF":
            ifif.append(struct.pack(">HH", pair.left, pair.right) + idxs)
        elif pair.kind == "IF-IP":
            ifip.append(struct.pack(">H", pair.left) + _encode_range(pair.right) + idxs)
        else:
            ipif.append(struct.pack(">H", pair.right) + _encode_range(pair.left) + idxs)
    for idx in sorted(maps.dmap):
        pid = maps.dmap[idx]
        d.append(struct.pack(">HBIB", idx, 0 if pid.owner is None else 1, pid.pid, 0))
    return ifif, ifip, ipif, d


def encode_maps(maps: PolicyMaps) -> bytes:
    ifif, ifip, ipif, d = _sections(maps)
    counts = (len(ifif), len(ifip), len(ipif), len(d))
    if max(counts) > 0xFFFF:
        raise MapError("too many map entries for one extension")
    return struct.pack(">HHHH", *counts) + b"".join(ifif + ifip + ipif + d)


def map_sizes(maps: PolicyMaps) -> MapSizes:
    ifif, ifip, ipif, d = _sections(maps)
    return MapSizes(
        HEADER_LEN,
        sum(map(len, ifif)),
        sum(map(len, ifip)) + sum(map(len, ipif)),
        sum(map(len, d)),
    )


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise MapDecodeError("truncated policy map encoding")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def u8(self) -> int:
        return self.take(1)[0]

    def u16(self) -> int:
        return struct.unpack(">H", self.take(2))[0]

    def idxs(self) -> frozenset[int]:
        n = self.u8()
        vals = struct.unpack(f">{n}H", self.take(2 * n))
        if list(vals) != sorted(set(vals)):
            raise MapDecodeError("index list is not strictly increasing")
        return frozenset(vals)

    def rng(self) -> IpRange:
        raw = self.take(8)
        if raw[:4] != bytes(4):
            raise MapDecodeError("IPv4 range address uses the high address bytes")
        try:
            return IpRange(int.from_bytes(raw, "big"), self.u8())
        except MapError as e:
            raise MapDecodeError(str(e)) from None


def decode_maps(data: bytes, owner: AsId) -> PolicyMaps:
    """Exact inverse of ``encode_maps``; rejects any non-canonical input."""
    rd = _Reader(data)
    n_ifif, n_ifip, n_ipif, n_d = (rd.u16() for _ in range(4))
    maps = PolicyMaps(owner)
    try:
        for _ in range(n_ifif):
            ig, eg = rd.u16(), rd.u16()
            maps.imap[IfIpPair(ig, eg)] = rd.idxs()
        for _ in range(n_ifip):
            i = rd.u16()
            r = rd.rng()
            maps.imap[IfIpPair(i, r)] = rd.idxs()
        for _ in range(n_ipif):
            i = rd.u16()
            r = rd.rng()
            maps.imap[IfIpPair(r, i)] = rd.idxs()
        for _ in range(n_d):
            idx, scope, pid, reserved = struct.unpack(">HBIB", rd.take(D_ENTRY_LEN))
            if scope not in (0, 1) or reserved != 0:
                raise MapDecodeError("bad scope or reserved byte in D entry")
            if idx in maps.dmap:
                raise MapDecodeError(f"duplicate D entry for index {idx}")
            maps.dmap[idx] = PolicyId(pid, None if scope == 0 else owner)
    except MapError as e:
        if isinstance(e, MapDecodeError):
            raise
        raise MapDecodeError(str(e)) from None
    if rd.pos != len(data):
        raise MapDecodeError("trailing bytes after policy maps")
    try:
        if encode_maps(maps) != data:
            raise MapDecodeError("non-canonical policy map encoding")
    except MapError as e:
        if isinstance(e, MapDecodeError):
            raise
        raise MapDecodeError(str(e)) from None
    return maps


def synthetic_maps(owner: AsId, ifif: int = 0, ifip: int = 0, per_pair: int = 5, dmap: int = 0) -> PolicyMaps:
    """Maps with the requested entry counts, for size reporting.

    Every pair carries indices ``1..per_pair``; the D map holds at least those
    (more when ``dmap`` asks for it). IF-IP entries pair interface ``j`` with
    a /24 range.
    """
    maps = PolicyMaps(owner)
    idxs = frozenset(range(1, per_pair + 1)) if ifif or ifip else frozenset()
    for j in range(ifif):
        maps.imap[IfIpPair(1 + j // 1000, 1 + j % 1000)] = idxs
    for j in range(ifip):
        maps.imap[IfIpPair(1 + j, IpRange(0x0A000000 + (j << 8), 24))] = idxs
    for i in range(1, max(dmap, max(idxs, default=0)) + 1):
        maps.dmap[i] = PolicyId(i)
    return maps


def section_sizes(ifif: int = 0, ifip: int = 0, per_pair: int = 5, dmap: int = 0) -> MapSizes:
    """Encoded bytes of each section for the given entry counts, measured separately."""
    owner = AsId(1, 1)
    return MapSizes(
        HEADER_LEN,
        map_sizes(synthetic_maps(owner, ifif=ifif, per_pair=per_pair)).ifif,
        map_sizes(synthetic_maps(owner, ifip=ifip, per_pair=per_pair)).ifip,
        map_sizes(synthetic_maps(owner, dmap=dmap)).dmap,
    )
