"""Cryptographic primitives shared by the control and data plane.

A single AES-128 CBC-MAC serves as both PRF and MAC. The keystream for
policy-index encryption is one raw AES block over the encoded timestamp.
Signatures use Ed25519 and stand in for the control-plane PKI.
"""
from __future__ import annotations

import hashlib
import hmac
import threading
from dataclasses import dataclass, field

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

BLOCK = 16
MAX_PRF_INPUT = 1 << 16
SIGNATURE_LEN = 64

_ZERO_IV = bytes(BLOCK)


class CryptoError(Exception):
    pass


class InputTooLong(CryptoError):
    pass


@dataclass(frozen=True)
class SymKey:
    """A 16-byte symmetric key. The repr never shows key material."""

    bytes_: bytes = field(repr=False)

    def __post_init__(self) -> None:
        if not isinstance(self.bytes_, (bytes, bytearray)) or len(self.bytes_) != BLOCK:
            raise ValueError("SymKey must be exactly 16 bytes")
        object.__setattr__(self, "bytes_", bytes(self.bytes_))

    def __repr__(self) -> str:
        return "SymKey(<redacted>)"

    __str__ = __repr__


def _as_key_bytes(key: SymKey | bytes) -> bytes:
    if isinstance(key, SymKey):
        return key.bytes_
    if len(key) != BLOCK:
        raise ValueError("key must be exactly 16 bytes")
    return bytes(key)


def pad(data: bytes) -> bytes:
    """0x80 then zero bytes up to the next 16-byte boundary (always at least one byte)."""
    n = BLOCK - (len(data) % BLOCK)
    return data + b"\x80" + bytes(n - 1)


_local = threading.local()
_ECB_CACHE_MAX = 8192


def _ecb(key: bytes):
    # ECB contexts are stateless across block-aligned updates, so one per key
    # is reused; the cache is per thread because contexts are not shareable
    cache = getattr(_local, "ecb", None)
    if cache is None:
        cache = _local.ecb = {}
    enc = cache.get(key)
    if enc is None:
        if len(cache) >= _ECB_CACHE_MAX:
            cache.clear()
        enc = cache[key] = Cipher(algorithms.AES(key), modes.ECB()).encryptor()
    return enc


def prf(key: SymKey | bytes, data: bytes) -> bytes:
    """AES-CBC-MAC over ``pad(data)`` with a zero IV; returns the final 16-byte block."""
    if len(data) > MAX_PRF_INPUT:
        raise InputTooLong(f"prf input is {len(data)} bytes, limit {MAX_PRF_INPUT}")
    data = pad(data)
    if len(data) > 4 * BLOCK:
        enc = Cipher(algorithms.AES(_as_key_bytes(key)), modes.CBC(_ZERO_IV)).encryptor()
        return enc.update(data)[-BLOCK:]
    ecb = _ecb(_as_key_bytes(key))
    state = 0
    for off in range(0, len(data), BLOCK):
        block = (state ^ int.from_bytes(data[off:off + BLOCK], "big")).to_bytes(BLOCK, "big")
        state = int.from_bytes(ecb.update(block), "big")
    return state.to_bytes(BLOCK, "big")


mac = prf


def encode_ts(ts: int) -> bytes:
    """Canonical keystream input block: 8-byte big-endian ts then 8 zero bytes."""
    return ts.to_bytes(8, "big") + bytes(8)


def keystream(key: SymKey | bytes, ts: int) -> bytes:
    return _ecb(_as_key_bytes(key)).update(encode_ts(ts))


def xor(a: bytes, b: bytes) -> bytes:
    if len(a) != len(b):
        raise ValueError("xor of unequal lengths")
    return bytes(x ^ y for x, y in zip(a, b))


def digest16(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()[:16]


def ct_equal(a: bytes, b: bytes) -> bool:
    return hmac.compare_digest(a, b)


@dataclass(frozen=True)
class PubKey:
    owner: object
    raw: bytes

    def _key(self) -> Ed25519PublicKey:
        return Ed25519PublicKey.from_public_bytes(self.raw)


@dataclass(frozen=True)
class SigKeyPair:
    owner: object
    seed: bytes = field(repr=False)

    @classmethod
    def generate(cls, owner: object, seed: bytes) -> SigKeyPair:
        if len(seed) != 32:
            raise ValueError("signing seed must be 32 bytes")
        return cls(owner, bytes(seed))

    def _key(self) -> Ed25519PrivateKey:
        return Ed25519PrivateKey.from_private_bytes(self.seed)

    @property
    def public(self) -> PubKey:
        raw = self._key().public_key().public_bytes_raw()
        return PubKey(self.owner, raw)


def sign(kp: SigKeyPair, msg: bytes) -> bytes:
    return kp._key().sign(msg)


def verify(pk: PubKey, msg: bytes, sig: bytes) -> bool:
    """True iff ``sig`` is a valid signature over ``msg``; malformed input gives False."""
    if not isinstance(sig, (bytes, bytearray)) or len(sig) != SIGNATURE_LEN:
        return False
    try:
        pk._key().verify(bytes(sig), msg)
    except (InvalidSignature, ValueError):
        return False
    return True
