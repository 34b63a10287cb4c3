from __future__ import annotations

import importlib.util
import random
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import ROOT, read_vectors
from helpers import NS_PER_S, SUPPORTED, deliver, make_chain, traverse

from fabrid.addr import AsId, HostAddr
from fabrid.crypto import SymKey, keystream
from fabrid.data_plane import (
    Accept,
    ControlReply,
    Drop,
    DropReason,
    DupVerdict,
    DuplicateFilter,
    ForwardingTable,
    Forward,
    HopField,
    IndexCountMismatch,
    InvalidConfirmation,
    InvalidControlMessage,
    MissingKey,
    PacketDecodeError,
    PathInvalid,
    PathValid,
    RouterContext,
    RouterFaults,
    SourceContext,
    UnknownTimestamp,
    build_packet,
    decode_packet,
    decrypt_index,
    dest_process,
    encrypt_index,
    header_len,
    router_process,
    source_validate,
    verify_control_message,
)
from fabrid.drkey import AsSecret, derive_as_level, derive_host_host, router_rederive


def _load_freeze():
    loader_spec = importlib.util.spec_from_file_location("freeze_vectors", ROOT / "scripts" / "freeze_vectors.py")
    mod = importlib.util.module_from_spec(loader_spec)
    loader_spec.loader.exec_module(mod)
    return mod


FV = _load_freeze()


def _golden():
    raw = FV.golden_hops()
    secrets = [AsSecret(SymKey(sec), AsId.decode(a)) for a, _ig, _eg, _s, sec in raw]
    hops = [HopField(AsId.decode(a), ig, eg, s) for a, ig, eg, s, _ in raw]
    src_as, src_host = AsId.decode(FV.GOLDEN_SRC[0]), HostAddr.decode(FV.GOLDEN_SRC[1])
    dst_as, dst_host = AsId.decode(FV.GOLDEN_DST[0]), HostAddr.decode(FV.GOLDEN_DST[1])
    by_as = {s.owner: s for s in secrets}
    src = SourceContext(
        src_as,
        src_host,
        lambda a: router_rederive(by_as[a], src_as, src_host).key,
        lambda a, h: derive_host_host(derive_as_level(by_as[a], src_as), h, src_host).key,
    )
    return secrets, hops, src, dst_as, dst_host


def test_golden_packet_matches_frozen_bytes():
    rows = {r[0]: r[1] for r in read_vectors("golden_packet.txt")}
    secrets, hops, src, dst_as, dst_host = _golden()
    pkt = build_packet(src, hops, dst_as, dst_host, FV.GOLDEN_INDICES, FV.GOLDEN_PAYLOAD, FV.GOLDEN_TS, FV.GOLDEN_TS)
    assert pkt.encode().hex() == rows["packet"]
    assert decode_packet(bytes.fromhex(rows["packet"])) == pkt
    # each router overwrites its HVF with the second half of the 8-byte MAC
    now = FV.GOLDEN_TS
    for pos in range(1, len(hops)):
        ctx = RouterContext(secrets[pos].owner, secrets[pos], ForwardingTable({i: ("x",) for i in FV.GOLDEN_INDICES}))
        out = router_process(ctx, replace(pkt, cur=pos), now)
        assert isinstance(out, Forward)
        mac = bytes.fromhex(rows[f"mac{pos}"])
        assert pkt.hvfs[pos] == mac[:4]
        assert out.packet.hvfs[pos] == mac[4:8]
        assert out.index == FV.GOLDEN_INDICES[pos]


def test_header_length_formula(rng):
    for n in (1, 2, 5, 17):
        chain = make_chain(n, rng) if n > 1 else None
        assert header_len(n) == 36 + 6 * n + 4
        if chain:
            pkt = chain.build([0] * n, b"abc")
            assert len(pkt.encode_header()) == header_len(n)
            assert len(pkt.encode()) == header_len(n) + 28 * n + 3


def test_index_roundtrip_exhaustive():
    key = SymKey(bytes(range(16)))
    ts = 123456789
    ks = keystream(key, ts)
    assert encrypt_index(0, key, ts) == ks[:2]
    seen = set()
    for idx in range(1 << 16):
        e = encrypt_index(idx, key, ts)
        assert decrypt_index(e, key, ts) == idx
        seen.add(e)
    assert len(seen) == 1 << 16


@given(st.integers(2, 8), st.integers(0, 2**32), st.binary(max_size=64))
@settings(max_examples=40, deadline=None)
def test_honest_chain_accepts_and_validates(n, seed, payload):
    r = random.Random(seed)
    chain = make_chain(n, r)
    indices = [0] + [r.choice(SUPPORTED) for _ in range(n - 1)]
    now = 5 * NS_PER_S
    pkt, acc = deliver(chain, indices, payload, now)
    got = [out.index for _, out in chain.log]
    assert got == indices
    assert acc.payload == payload
    assert source_validate(chain.src, acc.confirmation, chain.dst_as, chain.dst_host, now) == PathValid(pkt.ts)


def test_bad_hvf_on_flipped_index(rng):
    chain = make_chain(4, rng)
    pkt = chain.build([0, 1, 2, 7], now=0)

    def flip(pos, p):
        if pos != 2:
            return p
        enc = list(p.enc_indices)
        enc[2] = bytes([enc[2][0], enc[2][1] ^ 0x04])
        return replace(p, enc_indices=tuple(enc))

    out, pos = traverse(chain, replace(pkt, cur=1), 0, flip)
    assert out == Drop(DropReason.BAD_HVF) and pos == 2


def test_unsupported_index_control_reply(rng):
    chain = make_chain(3, rng)
    pkt = chain.build([0, 999, 1], now=0)
    out, pos = traverse(chain, replace(pkt, cur=1), 0)
    assert isinstance(out, ControlReply) and pos == 1
    assert out.message.index == 999 and out.message.as_id == chain.hops[1].as_id
    assert verify_control_message(chain.src, out.message, 0)
    forged = replace(out.message, index=998)
    with pytest.raises(InvalidControlMessage):
        verify_control_message(chain.src, forged, 0)
    off_path = replace(out.message, as_id=AsId(9, 9))
    with pytest.raises(InvalidControlMessage):
        verify_control_message(chain.src, off_path, 0)


def test_bad_dvf_on_payload_change(rng):
    chain = make_chain(3, rng)
    pkt = chain.build([0, 1, 2], b"hello", now=0)
    out = dest_process(chain.dst, replace(pkt, payload=b"hellp"))
    assert out == Drop(DropReason.BAD_DVF)
    assert isinstance(dest_process(chain.dst, pkt), Accept)


def test_wrong_hop_stale_and_replay(rng):
    chain = make_chain(3, rng)
    pkt = replace(chain.build([0, 1, 2], now=10 * NS_PER_S), cur=1)
    assert router_process(chain.routers[2], pkt, 10 * NS_PER_S) == Drop(DropReason.WRONG_HOP)
    assert router_process(chain.routers[1], pkt, 20 * NS_PER_S) == Drop(DropReason.STALE)
    assert router_process(chain.routers[1], pkt, 9 * NS_PER_S) == Drop(DropReason.STALE)
    assert isinstance(router_process(chain.routers[1], pkt, 10 * NS_PER_S), Forward)
    assert router_process(chain.routers[1], pkt, 10 * NS_PER_S) == Drop(DropReason.REPLAY)


def test_confirmation_mac_and_tampering(rng):
    chain = make_chain(4, rng)
    pkt, acc = deliver(chain, [0, 1, 2, 7])
    conf = acc.confirmation
    with pytest.raises(InvalidConfirmation):
        source_validate(chain.src, replace(conf, mac=bytes(4)), chain.dst_as, chain.dst_host, 0)
    hv = list(conf.hvfs)
    hv[2] = bytes(4)
    with pytest.raises(InvalidConfirmation):
        source_validate(chain.src, replace(conf, hvfs=tuple(hv)), chain.dst_as, chain.dst_host, 0)


@pytest.mark.parametrize("k", [0, 1, 2, 3, 4])
def test_skip_update_fault_names_the_hop(k, rng):
    # hop k+1 in 1-based numbering, the source AS being hop 1
    chain = make_chain(5, rng)
    chain.routers[k].faults = RouterFaults(skip_hvf_update=True)
    pkt = chain.build([0, 1, 2, 7, 1], now=0)
    out, _ = traverse(chain, pkt, 0)
    assert isinstance(out, Accept)
    res = source_validate(chain.src, out.confirmation, chain.dst_as, chain.dst_host, 0)
    assert res == PathInvalid(pkt.ts, (k + 1,))


def test_tamper_fault_caught_downstream(rng):
    chain = make_chain(4, rng)
    chain.routers[1].faults = RouterFaults(tamper_offset=1)
    pkt = chain.build([0, 1, 2, 7], now=0)
    out, pos = traverse(chain, replace(pkt, cur=1), 0)
    assert out == Drop(DropReason.BAD_HVF) and pos == 2


def test_unknown_timestamp_after_retention(rng):
    chain = make_chain(3, rng)
    chain.src.retention_ns = NS_PER_S
    pkt, acc = deliver(chain, [0, 1, 2], now=0)
    assert source_validate(chain.src, acc.confirmation, chain.dst_as, chain.dst_host, NS_PER_S) == PathValid(pkt.ts)
    with pytest.raises(UnknownTimestamp):
        source_validate(chain.src, acc.confirmation, chain.dst_as, chain.dst_host, NS_PER_S + 1)


def test_build_errors(rng):
    chain = make_chain(3, rng)
    with pytest.raises(IndexCountMismatch):
        chain.build([0, 1])
    hops = list(chain.hops) + [HopField(AsId(7, 7), 1, 0, bytes(16))]
    with pytest.raises(MissingKey):
        build_packet(chain.src, hops, AsId(7, 7), chain.dst_host, [0, 1, 1, 1], b"", 0)


def test_timestamps_strictly_increase(rng):
    chain = make_chain(2, rng)
    ts = [chain.build([0, 1], now=5).ts for _ in range(100)]
    assert ts == list(range(5, 105))


def test_decode_roundtrip_and_errors(rng):
    chain = make_chain(3, rng)
    pkt = replace(chain.build([0, 1, 2], b"xyz"), cur=2)
    raw = pkt.encode()
    assert decode_packet(raw) == pkt
    for cut in (0, 10, len(raw) - 1):
        with pytest.raises(PacketDecodeError):
            decode_packet(raw[:cut])
    with pytest.raises(PacketDecodeError):
        decode_packet(raw + b"\x00")
    bad = bytearray(raw)
    bad[32] = 0
    with pytest.raises(PacketDecodeError):
        decode_packet(bytes(bad))


def test_duplicate_filter_window():
    f = DuplicateFilter(window_ns=1000)
    a, h = AsId(1, 1), HostAddr.parse("10.0.0.1")
    for ts in range(100_000):
        assert f.check(a, h, ts, 0) is DupVerdict.FRESH
    assert f.check(a, h, 5, 0) is DupVerdict.REPLAY
    assert f.check(a, HostAddr.parse("10.0.0.2"), 5, 0) is DupVerdict.FRESH
    assert f.check(a, h, 5, 1001) is DupVerdict.FRESH
    assert len(f) == 2


def test_flow_route_is_stable(rng):
    chain = make_chain(3, rng)
    table = ForwardingTable({1: ("a", "b", "c")})
    for r in chain.routers:
        r.install(table)
    routes = set()
    for t in range(20):
        out, _ = traverse(chain, replace(chain.build([0, 1, 1], now=t), cur=1), t)
        routes.add(tuple(o.route for _, o in chain.log[-2:]))
    assert len(routes) == 1
