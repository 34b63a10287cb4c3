"""Regenerate tests/fixtures/*.txt from the straight-line oracle in tests/oracle.py.

Run once; the outputs are committed and the test-suite compares the package
against them. Rerunning must produce identical files.
"""
from __future__ import annotations

import random
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "tests"))

import oracle  # noqa: E402

FIXTURES = ROOT / "tests" / "fixtures"

GOLDEN_TS = 1_700_000_000_123_456_789
GOLDEN_SRC = (oracle.as_bytes(1, 0xFF00_0000_0110), oracle.host_bytes(10, 0, 0, 1))
GOLDEN_DST = (oracle.as_bytes(1, 0xFF00_0000_0114), oracle.host_bytes(10, 0, 9, 7))
GOLDEN_PAYLOAD = b"golden payload"
GOLDEN_INDICES = [0, 7, 0x1234, 1]


def golden_hops() -> list[tuple[bytes, int, int, bytes, bytes]]:
    out = []
    for i, as_num in enumerate((0xFF00_0000_0110, 0xFF00_0000_0111, 0xFF00_0000_0112, 0xFF00_0000_0114)):
        secret = bytes((17 * i + j) & 0xFF for j in range(16))
        sigma = bytes((0xA0 + 3 * i + j) & 0xFF for j in range(16))
        ingress = 0 if i == 0 else 2 * i
        egress = 0 if i == 3 else 2 * i + 1
        out.append((oracle.as_bytes(1, as_num), ingress, egress, sigma, secret))
    return out


def prf_lines(rng: random.Random) -> list[str]:
    lines = [f"{bytes(16).hex()} - {oracle.cbc_mac(bytes(16), b'').hex()}"]
    for n in (1, 15, 16, 17, 31, 32, 33, 47, 48, 64, 65, 100, 257):
        key = rng.randbytes(16)
        data = rng.randbytes(n)
        lines.append(f"{key.hex()} {data.hex()} {oracle.cbc_mac(key, data).hex()}")
    return lines


def keystream_lines(rng: random.Random) -> list[str]:
    lines = []
    for ts in (0, 1, 2**63, 2**64 - 1, rng.getrandbits(64), rng.getrandbits(64)):
        key = rng.randbytes(16)
        lines.append(f"{key.hex()} {ts:016x} {oracle.keystream(key, ts).hex()}")
    return lines


def golden_packet_lines() -> list[str]:
    hops = golden_hops()
    pkt, macs = oracle.reference_packet(
        GOLDEN_TS, *GOLDEN_SRC, *GOLDEN_DST, hops, GOLDEN_INDICES, hops[-1][4], GOLDEN_PAYLOAD
    )
    return [f"packet {pkt.hex()}"] + [f"mac{i} {m.hex()}" for i, m in enumerate(macs)]


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    rng = random.Random(20240607)
    header = "# key input output (hex; '-' is empty input)\n"
    (FIXTURES / "prf_vectors.txt").write_text(header + "\n".join(prf_lines(rng)) + "\n")
    (FIXTURES / "keystream_vectors.txt").write_text(
        "# key ts output (hex)\n" + "\n".join(keystream_lines(rng)) + "\n"
    )
    (FIXTURES / "golden_packet.txt").write_text(
        "# packet bytes and per-hop 8-byte MAC prefixes; inputs in scripts/freeze_vectors.py\n"
        + "\n".join(golden_packet_lines()) + "\n"
    )
    print(f"wrote fixtures to {FIXTURES}")


if __name__ == "__main__":
    main()
