"""Straight-line reference implementations used to freeze and cross-check values.

Nothing here imports the package: AES-128 is a textbook pure-Python
implementation, and MACs, key derivation and packet layout are spelled out
byte by byte so a bug in the package cannot hide in a shared helper.
"""
from __future__ import annotations

import hashlib
import struct


def _rotl8(x: int, s: int) -> int:
    return ((x << s) | (x >> (8 - s))) & 0xFF


def _make_sbox() -> list[int]:
    sbox = [0] * 256
    p = q = 1
    while True:
        p = p ^ ((p << 1) & 0xFF) ^ (0x1B if p & 0x80 else 0)
        q ^= q << 1
        q ^= q << 2
        q ^= q << 4
        q &= 0xFF
        if q & 0x80:
            q ^= 0x09
        sbox[p] = q ^ _rotl8(q, 1) ^ _rotl8(q, 2) ^ _rotl8(q, 3) ^ _rotl8(q, 4) ^ 0x63
        if p == 1:
            break
    sbox[0] = 0x63
    return sbox


SBOX = _make_sbox()


def _xtime(a: int) -> int:
    return ((a << 1) ^ 0x1B) & 0xFF if a & 0x80 else a << 1


def _expand(key: bytes) -> list[list[int]]:
    w = [list(key[i:i + 4]) for i in range(0, 16, 4)]
    rcon = 1
    for i in range(4, 44):
        t = list(w[i - 1])
        if i % 4 == 0:
            t = [SBOX[b] for b in t[1:] + t[:1]]
            t[0] ^= rcon
            rcon = _xtime(rcon)
        w.append([a ^ b for a, b in zip(w[i - 4], t)])
    return [sum(w[4 * r:4 * r + 4], []) for r in range(11)]


def aes128_encrypt(key: bytes, block: bytes) -> bytes:
    assert len(key) == 16 and len(block) == 16
    rk = _expand(key)
    s = [b ^ k for b, k in zip(block, rk[0])]
    for rnd in range(1, 11):
        s = [SBOX[b] for b in s]
        # column-major state: byte (row r, col c) sits at index 4c + r
        s = [s[(4 * (c + r) + r) % 16] for c in range(4) for r in range(4)]
        if rnd != 10:
            out = []
            for c in range(4):
                a = s[4 * c:4 * c + 4]
                t = a[0] ^ a[1] ^ a[2] ^ a[3]
                out += [a[r] ^ t ^ _xtime(a[r] ^ a[(r + 1) % 4]) for r in range(4)]
            s = out
        s = [b ^ k for b, k in zip(s, rk[rnd])]
    return bytes(s)


def cbc_mac(key: bytes, data: bytes) -> bytes:
    padded = data + b"\x80" + bytes((15 - len(data)) % 16)
    state = bytes(16)
    for i in range(0, len(padded), 16):
        state = aes128_encrypt(key, bytes(a ^ b for a, b in zip(state, padded[i:i + 16])))
    return state


def keystream(key: bytes, ts: int) -> bytes:
    return aes128_encrypt(key, struct.pack(">Q", ts) + bytes(8))


def digest16(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()[:16]


def as_bytes(isd: int, as_num: int) -> bytes:
    return struct.pack(">H", isd) + as_num.to_bytes(6, "big")


def host_bytes(a: int, b: int, c: int, d: int) -> bytes:
    return bytes([a, b, c, d])


# key hierarchy: K_{A->B} = PRF(K_A, B); host level appends host addresses
def k_as(secret: bytes, peer_as: bytes) -> bytes:
    return cbc_mac(secret, peer_as)


def k_host_as(secret: bytes, peer_as: bytes, peer_host: bytes) -> bytes:
    return cbc_mac(k_as(secret, peer_as), peer_host)


def k_host_host(secret: bytes, peer_as: bytes, own_host: bytes, peer_host: bytes) -> bytes:
    return cbc_mac(k_as(secret, peer_as), own_host + peer_host)


def reference_packet(
    ts: int,
    src_as: bytes,
    src_host: bytes,
    dst_as: bytes,
    dst_host: bytes,
    hops: list[tuple[bytes, int, int, bytes, bytes]],
    indices: list[int],
    dest_secret: bytes,
    payload: bytes,
) -> tuple[bytes, list[bytes]]:
    """Full packet bytes and, per hop, the 8-byte MAC prefix a router will compute.

    ``hops`` holds (as_bytes, ingress, egress, sigma16, as_secret16).
    """
    ts8 = struct.pack(">Q", ts)
    per_hop = b""
    macs = []
    for (as_b, _ig, _eg, sigma, secret), idx in zip(hops, indices):
        k = k_host_as(secret, src_as, src_host)
        ks = keystream(k, ts)
        enc = bytes([(idx >> 8) ^ ks[0], (idx & 0xFF) ^ ks[1]])
        m = cbc_mac(k, ts8 + src_as + src_host + sigma + enc)
        macs.append(m[:8])
        per_hop += enc + m[:4]
    k_dst = k_host_host(dest_secret, src_as, dst_host, src_host)
    dvf = cbc_mac(k_dst, ts8 + digest16(payload))[:4]
    fixed = ts8 + src_as + src_host + dst_as + dst_host + bytes([len(hops), 0]) + struct.pack(">H", len(payload))
    hopfields = b"".join(a + struct.pack(">HH", ig, eg) + s for a, ig, eg, s, _ in hops)
    return fixed + per_hop + dvf + hopfields + payload, macs
