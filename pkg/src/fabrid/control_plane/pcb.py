"""Path-segment construction beacons with a detachable policy extension.

Wire layout (big-endian)::

    PCB      u8 version=1 | u16 segment id | u64 origin time | u8 #entries | entries
    entry    u16 signed length | signed body | [extension] | 64-byte signature
    body     AsId (8) | u16 ingress | u16 egress | u64 not_before | u64 not_after
             | u8 ext kind (0 none, 1 policy maps) | [16-byte digest of the maps]
    ext      u16 flags (0x8000 = maps attached, other bits zero)
             | [u32 length | encoded maps]   when attached

The signature of entry i covers the PCB header, every earlier signed body
and signature, and body i. Extension data sits outside the signatures and is
bound by the signed digest, so it can be detached and fetched separately.
A detached policy extension costs 18 bytes per AS: the digest and the flags.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field, replace

from ..addr import AsId
from ..crypto import SIGNATURE_LEN, SigKeyPair, digest16, sign
from ..trust import TrustStore
from .maps import MapError, PolicyMaps, decode_maps, encode_maps

PCB_VERSION = 1
EXT_NONE = 0
EXT_POLICY = 1
FLAG_ATTACHED = 0x8000
DIGEST_LEN = 16
BODY_LEN = 29
DETACHED_MARKER_LEN = DIGEST_LEN + 2


class PcbError(Exception):
    def __init__(self, message: str, hop: int | None = None):
        self.hop = hop
        super().__init__(message if hop is None else f"hop {hop}: {message}")


class PcbDecodeError(PcbError):
    pass


class SignatureInvalid(PcbError):
    pass


class Expired(PcbError):
    pass


class DigestMismatch(PcbError):
    pass


class UpstreamSignatureInvalid(PcbError):
    pass


class UnsupportedAnnouncement(PcbError):
    pass


class IndexConflict(PcbError):
    pass


@dataclass(frozen=True)
class AsEntry:
    as_id: AsId
    ingress: int
    egress: int
    not_before: int
    not_after: int
    digest: bytes | None
    ext: bytes | None
    signature: bytes = b""

    @property
    def has_policy_ext(self) -> bool:
        return self.digest is not None

    @property
    def attached(self) -> bool:
        return self.ext is not None

    def signed_body(self) -> bytes:
        body = self.as_id.encode() + struct.pack(
            ">HHQQB",
            self.ingress,
            self.egress,
            self.not_before,
            self.not_after,
            EXT_NONE if self.digest is None else EXT_POLICY,
        )
        if self.digest is not None:
            body += self.digest
        return body

    def encode(self) -> bytes:
        body = self.signed_body()
        out = struct.pack(">H", len(body)) + body
        if self.digest is not None:
            if self.ext is None:
                out += struct.pack(">H", 0)
            else:
                out += struct.pack(">HI", FLAG_ATTACHED, len(self.ext)) + self.ext
        return out + self.signature

    def maps(self) -> PolicyMaps | None:
        if self.ext is None:
            return None
        return decode_maps(self.ext, self.as_id)


@dataclass(frozen=True)
class PCB:
    segment_id: int
    origin_time: int
    entries: tuple[AsEntry, ...]

    def header(self) -> bytes:
        return struct.pack(">BHQB", PCB_VERSION, self.segment_id, self.origin_time, len(self.entries))

    def encode(self) -> bytes:
        return self.header() + b"".join(e.encode() for e in self.entries)

    @property
    def ases(self) -> list[AsId]:
        return [e.as_id for e in self.entries]

    @property
    def not_after(self) -> int:
        return min(e.not_after for e in self.entries)

    def __len__(self) -> int:
        return len(self.entries)


def _sig_input_with_count(pcb: PCB, i: int, count: int) -> bytes:
    # the header commits to the entry count at signing time
    hdr = struct.pack(">BHQB", PCB_VERSION, pcb.segment_id, pcb.origin_time, count)
    parts = [hdr]
    for e in pcb.entries[:i]:
        parts.append(e.signed_body())
        parts.append(e.signature)
    parts.append(pcb.entries[i].signed_body())
    return b"".join(parts)


def decode_pcb(data: bytes) -> PCB:
    pos = 0

    def take(n: int) -> bytes:
        nonlocal pos
        if pos + n > len(data):
            raise PcbDecodeError("truncated PCB")
        out = data[pos:pos + n]
        pos += n
        return out

    version, seg_id, origin, count = struct.unpack(">BHQB", take(12))
    if version != PCB_VERSION:
        raise PcbDecodeError(f"unsupported PCB version {version}")
    entries = []
    for hop in range(count):
        (blen,) = struct.unpack(">H", take(2))
        body = take(blen)
        if blen not in (BODY_LEN, BODY_LEN + DIGEST_LEN):
            raise PcbDecodeError("bad signed body length", hop)
        as_id = AsId.decode(body[:8])
        ingress, egress, nb, na, kind = struct.unpack(">HHQQB", body[8:BODY_LEN])
        digest = None
        ext = None
        if kind == EXT_POLICY:
            if blen != BODY_LEN + DIGEST_LEN:
                raise PcbDecodeError("policy extension without digest", hop)
            digest = body[BODY_LEN:]
            (flags,) = struct.unpack(">H", take(2))
            if flags & ~FLAG_ATTACHED:
                raise PcbDecodeError("reserved extension flag bits set", hop)
            if flags & FLAG_ATTACHED:
                (elen,) = struct.unpack(">I", take(4))
                ext = take(elen)
        elif kind == EXT_NONE:
            if blen != BODY_LEN:
                raise PcbDecodeError("digest present without policy extension", hop)
        else:
            raise PcbDecodeError(f"unknown extension kind {kind}", hop)
        sig = take(SIGNATURE_LEN)
        entries.append(AsEntry(as_id, ingress, egress, nb, na, digest, ext, sig))
    if pos != len(data):
        raise PcbDecodeError("trailing bytes after PCB")
    return PCB(seg_id, origin, tuple(entries))


def verify_pcb(pcb: PCB | bytes, trust: TrustStore, now: int, upto: int | None = None) -> PCB:
    """Check signatures, validity windows and extension digests; returns the decoded PCB.

    Raises SignatureInvalid, Expired or DigestMismatch naming the first bad
    hop, or PcbDecodeError for malformed bytes.
    """
    if isinstance(pcb, (bytes, bytearray)):
        pcb = decode_pcb(bytes(pcb))
    n = len(pcb.entries) if upto is None else upto
    for i, e in enumerate(pcb.entries[:n]):
        if not trust.verify(e.as_id, _sig_input_with_count(pcb, i, i + 1), e.signature):
            raise SignatureInvalid("signature does not verify", i)
    for i, e in enumerate(pcb.entries[:n]):
        if not e.not_before <= now <= e.not_after:
            raise Expired(f"outside validity window [{e.not_before}, {e.not_after}] at {now}", i)
    for i, e in enumerate(pcb.entries[:n]):
        if e.ext is not None:
            if digest16(e.ext) != e.digest:
                raise DigestMismatch("extension data does not match the signed digest", i)
            try:
                decode_maps(e.ext, e.as_id)
            except MapError as err:
                raise DigestMismatch(f"extension data does not decode: {err}", i) from None
    return pcb


@dataclass
class IndexGuard:
    """Remembers emitted index->pid mappings so overlapping PCBs stay consistent."""

    emitted: list[tuple[int, int, dict]] = field(default_factory=list)

    def check_and_record(self, maps: PolicyMaps, not_before: int, not_after: int) -> None:
        for nb, na, dmap in self.emitted:
            if nb <= not_after and not_before <= na:
                for idx, pid in maps.dmap.items():
                    if idx in dmap and dmap[idx] != pid:
                        raise IndexConflict(
                            f"index {idx} maps to {dmap[idx]} in an overlapping PCB, not {pid}"
                        )
        self.emitted.append((not_before, not_after, dict(maps.dmap)))


@dataclass
class AsContext:
    """What an AS needs to originate or extend beacons."""

    as_id: AsId
    keypair: SigKeyPair
    maps: PolicyMaps | None = None
    supported_indices: frozenset[int] = frozenset()
    lifetime: int = 6 * 3600
    guard: IndexGuard = field(default_factory=IndexGuard)


def _new_entry(ctx: AsContext, ingress: int, egress: int, now: int) -> AsEntry:
    digest = ext = None
    nb, na = now, now + ctx.lifetime
    if ctx.maps is not None:
        unsupported = sorted((ctx.maps.indices() | set(ctx.maps.dmap)) - set(ctx.supported_indices))
        if unsupported:
            raise UnsupportedAnnouncement(
                f"{ctx.as_id} announces indices {unsupported} without a configured intra-AS route"
            )
        ext = encode_maps(ctx.maps)
        digest = digest16(ext)
        assert ctx.guard is not None
        ctx.guard.check_and_record(ctx.maps, nb, na)
    return AsEntry(ctx.as_id, ingress, egress, nb, na, digest, ext)


def _signed(pcb: PCB, entry: AsEntry, kp: SigKeyPair) -> PCB:
    new = PCB(pcb.segment_id, pcb.origin_time, pcb.entries + (entry,))
    sig = sign(kp, _sig_input_with_count(new, len(new.entries) - 1, len(new.entries)))
    signed = replace(entry, signature=sig)
    return PCB(pcb.segment_id, pcb.origin_time, pcb.entries + (signed,))


def originate_pcb(ctx: AsContext, egress: int, now: int, segment_id: int = 0) -> PCB:
    empty = PCB(segment_id, now, ())
    return _signed(empty, _new_entry(ctx, 0, egress, now), ctx.keypair)


def extend_pcb(
    pcb: PCB, ctx: AsContext, ingress: int, egress: int, now: int, trust: TrustStore
) -> PCB:
    try:
        verify_pcb(pcb, trust, now)
    except (SignatureInvalid, DigestMismatch, Expired) as e:
        raise UpstreamSignatureInvalid(f"upstream PCB rejected: {e}", e.hop) from None
    return _signed(pcb, _new_entry(ctx, ingress, egress, now), ctx.keypair)


def detach_extension(pcb: PCB, hop: int) -> tuple[PCB, bytes]:
    e = pcb.entries[hop]
    if e.ext is None:
        raise PcbError("no attached extension to detach", hop)
    entries = list(pcb.entries)
    entries[hop] = replace(e, ext=None)
    return PCB(pcb.segment_id, pcb.origin_time, tuple(entries)), e.ext


def detach_all(pcb: PCB) -> tuple[PCB, dict[int, bytes]]:
    blobs = {}
    for i, e in enumerate(pcb.entries):
        if e.ext is not None:
            pcb, blobs[i] = detach_extension(pcb, i)
    return pcb, blobs


def reattach_extension(pcb: PCB, hop: int, blob: bytes) -> PCB:
    e = pcb.entries[hop]
    if e.digest is None:
        raise PcbError("entry has no policy extension", hop)
    if digest16(blob) != e.digest:
        raise DigestMismatch("blob does not match the signed digest", hop)
    entries = list(pcb.entries)
    entries[hop] = replace(e, ext=blob)
    return PCB(pcb.segment_id, pcb.origin_time, tuple(entries))
