"""Packet header codec.

All integers are big-endian. The validation header has a fixed part
followed by one (encrypted index, HVF) pair per on-path AS and the DVF::

    offset  size  field
    0       8     ts            nanosecond packet timestamp
    8       8     src_as
    16      4     src_host
    20      8     dst_as
    28      4     dst_host
    32      1     n             number of on-path ASes (source AS included)
    33      1     cur           0-based position of the AS about to process it
    34      2     payload_len
    36      6n    n x (enc_index u16 | hvf 4 bytes)
    36+6n   4     dvf

The forwarding path (hop fields) follows the validation header as its own
section of n x 28 bytes (as_id 8 | ingress u16 | egress u16 | sigma 16),
then the payload. Header length depends on n only.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field

from ..addr import AsId, HostAddr

FIXED_LEN = 36
PER_HOP_LEN = 6
DVF_LEN = 4
HVF_LEN = 4
INDEX_LEN = 2
SIGMA_LEN = 16
HOPFIELD_LEN = 28
MAX_HOPS = 255

_FIXED = struct.Struct(">Q8s4s8s4sBBH")
_HOPFIELD = struct.Struct(">8sHH16s")


class PacketDecodeError(ValueError):
    pass


def header_len(n: int) -> int:
    return FIXED_LEN + n * PER_HOP_LEN + DVF_LEN


@dataclass(frozen=True)
class HopField:
    as_id: AsId
    ingress: int
    egress: int
    sigma: bytes = field(repr=False)

    def __post_init__(self) -> None:
        if len(self.sigma) != SIGMA_LEN:
            raise ValueError("sigma is 16 bytes")

    def encode(self) -> bytes:
        return _HOPFIELD.pack(self.as_id.encode(), self.ingress, self.egress, self.sigma)

    @classmethod
    def decode(cls, raw: bytes) -> HopField:
        a, i, e, s = _HOPFIELD.unpack(raw)
        return cls(AsId.decode(a), i, e, s)


@dataclass(frozen=True)
class Packet:
    ts: int
    src_as: AsId
    src_host: HostAddr
    dst_as: AsId
    dst_host: HostAddr
    hops: tuple[HopField, ...]
    enc_indices: tuple[bytes, ...]
    hvfs: tuple[bytes, ...]
    dvf: bytes
    payload: bytes = b""
    cur: int = 0

    @property
    def n(self) -> int:
        return len(self.hops)

    def encode_header(self) -> bytes:
        n = len(self.hops)
        if not 1 <= n <= MAX_HOPS:
            raise ValueError(f"hop count {n} outside 1..{MAX_HOPS}")
        if len(self.enc_indices) != n or len(self.hvfs) != n:
            raise ValueError("one encrypted index and one HVF per hop")
        parts = [
            _FIXED.pack(
                self.ts,
                self.src_as.encode(),
                self.src_host.encode(),
                self.dst_as.encode(),
                self.dst_host.encode(),
                n,
                self.cur,
                len(self.payload),
            )
        ]
        for ei, hv in zip(self.enc_indices, self.hvfs):
            if len(ei) != INDEX_LEN or len(hv) != HVF_LEN:
                raise ValueError("bad per-hop field width")
            parts.append(ei + hv)
        if len(self.dvf) != DVF_LEN:
            raise ValueError("bad DVF width")
        parts.append(self.dvf)
        return b"".join(parts)

    def encode(self) -> bytes:
        return self.encode_header() + b"".join(h.encode() for h in self.hops) + self.payload


def decode_packet(data: bytes) -> Packet:
    if len(data) < FIXED_LEN:
        raise PacketDecodeError("shorter than the fixed header")
    ts, sa, sh, da, dh, n, cur, plen = _FIXED.unpack_from(data)
    if n < 1:
        raise PacketDecodeError("packet without hops")
    if cur > n:
        raise PacketDecodeError("current hop beyond path end")
    hlen = header_len(n)
    total = hlen + n * HOPFIELD_LEN + plen
    if len(data) != total:
        raise PacketDecodeError(f"length {len(data)} does not match declared {total}")
    enc, hv = [], []
    off = FIXED_LEN
    for _ in range(n):
        enc.append(data[off:off + 2])
        hv.append(data[off + 2:off + 6])
        off += PER_HOP_LEN
    dvf = data[off:off + DVF_LEN]
    off += DVF_LEN
    hops = []
    for _ in range(n):
        hops.append(HopField.decode(data[off:off + HOPFIELD_LEN]))
        off += HOPFIELD_LEN
    return Packet(
        ts,
        AsId.decode(sa),
        HostAddr.decode(sh),
        AsId.decode(da),
        HostAddr.decode(dh),
        tuple(hops),
        tuple(enc),
        tuple(hv),
        dvf,
        data[off:],
        cur,
    )


def hvf_input(ts: int, src_as: AsId, src_host: HostAddr, sigma: bytes, enc_index: bytes) -> bytes:
    """MAC input for the hop validation field: fixed-width fields, concatenated."""
    return ts.to_bytes(8, "big") + src_as.encode() + src_host.encode() + sigma + enc_index
