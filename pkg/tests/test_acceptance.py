"""One test per acceptance criterion; each records a PASS/FAIL line shown in the terminal summary."""
from __future__ import annotations

import random
import statistics
import time
from dataclasses import replace

import yaml

from conftest import record_criterion
from helpers import PCB_NOW, SUPPORTED, beacon, byte_mutations, make_chain, pcb_rejects, traverse
from policy_gen import random_pair

from fabrid.addr import AsId
from fabrid.control_plane import (
    DETACHED_MARKER_LEN,
    PcbError,
    detach_extension,
    encode_maps,
    reattach_extension,
    section_sizes,
    synthetic_maps,
    verify_pcb,
)
from fabrid.crypto import SigKeyPair, SymKey, keystream
from fabrid.data_plane import (
    Accept,
    Forward,
    PathInvalid,
    PathValid,
    decode_packet,
    decrypt_index,
    encrypt_index,
    router_process,
    source_validate,
)
from fabrid.policy import (
    ContainmentBounds,
    Verdict,
    check_containment,
    enumerate_containment,
    eval_router_policy,
    homomorphism_containment,
    parse_policy,
)
from fabrid.registry import AlreadyExists, PolicyId, PolicyRegistry, PolicyResolver
from fabrid.sim import (
    Fault,
    Network,
    RttScenario,
    clear_faults,
    inject_fault,
    run_beaconing,
    run_microbench,
    run_rtt_experiment,
    run_send,
    topology_from_dict,
)
from fabrid.trust import GLOBAL_AUTHORITY, TrustStore


def _check(n: int, ok: bool, detail: str) -> None:
    record_criterion(n, ok, detail)
    assert ok, detail


def test_criterion_1_wire_sizes():
    t0 = time.perf_counter()
    s = section_sizes(ifif=500, ifip=100, per_pair=5, dmap=100)
    full = len(encode_maps(synthetic_maps(AsId(1, 5), ifif=500, per_pair=5, dmap=100)))
    elapsed = time.perf_counter() - t0
    got = (s.ifif, s.dmap, s.ifip, DETACHED_MARKER_LEN)
    ok = got == (7500, 800, 2200, 18) and full == s.header + 7500 + 800 and elapsed < 1.0
    _check(1, ok, f"IF-IF/D/IF-IP/marker = {got} bytes (want (7500, 800, 2200, 18)), {elapsed:.2f}s")


def test_criterion_2_rtt_means(configs):
    base = yaml.safe_load((configs / "rtt.yaml").read_text())
    src, dst, p = AsId(1, 10), AsId(1, 14), AsId(1, 12)
    t0 = time.perf_counter()
    worst, ordered = 0.0, True
    for seed in range(20):
        net = Network(topology_from_dict(base, seed))
        run_beaconing(net)
        m0 = statistics.mean(s.rtt_ms for s in run_rtt_experiment(net, RttScenario(src, dst, index=0, count=60)))
        m1 = statistics.mean(
            s.rtt_ms for s in run_rtt_experiment(net, RttScenario(src, dst, index=1, policy_as=p, count=60))
        )
        worst = max(worst, abs(m0 - 114) / 114, abs(m1 - 70) / 70)
        ordered &= m1 < m0
    elapsed = time.perf_counter() - t0
    ok = worst <= 0.15 and ordered and elapsed < 10
    _check(2, ok, f"max relative deviation {worst:.1%} (<= 15%), index 1 faster on all 20 seeds: {ordered}, {elapsed:.1f}s")


def _tamper(raw: bytearray, field: str, pos: int, rng: random.Random) -> None:
    if field == "index":
        off = 36 + 6 * pos + rng.randrange(2)
    elif field == "hvf":
        off = 36 + 6 * pos + 2 + rng.randrange(4)
    elif field == "src":
        off = 8 + rng.randrange(12)
    else:
        off = rng.randrange(8)
    raw[off] ^= rng.randrange(1, 256)


def test_criterion_3_pipeline_soundness():
    rng = random.Random(3)
    t0 = time.perf_counter()
    delivered = valid = 0
    runs = 10_000
    chains = {}
    for i in range(runs):
        n = rng.randint(2, 8)
        if n not in chains or i % 200 == 0:
            chains[n] = make_chain(n, rng)
        chain = chains[n]
        now = 10**12 + i * 1000
        indices = [0] + [rng.choice(SUPPORTED) for _ in range(n - 1)]
        pkt = chain.build(indices, rng.randbytes(rng.randint(0, 64)), now)
        out, _ = traverse(chain, pkt, now)
        if isinstance(out, Accept):
            delivered += 1
            valid += isinstance(source_validate(chain.src, out.confirmation, chain.dst_as, chain.dst_host, now), PathValid)
    trials, leaked = 10_000, 0
    fields = ("index", "hvf", "src", "ts")
    for i in range(trials):
        n = rng.randint(2, 8)
        chain = chains.get(n) or chains.setdefault(n, make_chain(n, rng))
        now = 2 * 10**12 + i * 1000
        pkt = chain.build([0] * n, b"x", now)
        pos = rng.randrange(n)
        raw = bytearray(replace(pkt, cur=pos).encode())
        _tamper(raw, fields[i % 4], pos, rng)
        out = router_process(chain.routers[pos], decode_packet(bytes(raw)), now)
        leaked += isinstance(out, Forward)
    elapsed = time.perf_counter() - t0
    ok = delivered == valid == runs and leaked == 0 and elapsed < 60
    _check(3, ok, f"{delivered}/{runs} delivered, {valid} PathValid; {leaked}/{trials} tampered forwarded; {elapsed:.1f}s")


def test_criterion_4_index_roundtrip():
    key, ts = SymKey(bytes(range(16, 32))), 0x0123456789ABCDEF
    t0 = time.perf_counter()
    bad = sum(decrypt_index(encrypt_index(i, key, ts), key, ts) != i for i in range(1 << 16))
    zero = encrypt_index(0, key, ts) == keystream(key, ts)[:2]
    elapsed = time.perf_counter() - t0
    _check(4, bad == 0 and zero and elapsed < 1.0, f"{bad} round-trip errors over 2^16, index 0 = keystream[0:2]: {zero}, {elapsed:.2f}s")


def test_criterion_5_containment(configs):
    rng = random.Random(5)
    t0 = time.perf_counter()
    pairs, disagree = 1000, 0
    for i in range(pairs):
        p, q, _, _ = random_pair(rng)
        bounds = ContainmentBounds(k=1 + i % 3)
        disagree += homomorphism_containment(p, q, bounds).verdict is not enumerate_containment(p, q, bounds).verdict
    path = parse_policy((configs / "policies" / "path_openssl.pol").read_text())
    pref = parse_policy((configs / "policies" / "pref_openssl.pol").read_text())
    res = check_containment(path, pref, ContainmentBounds(k=2))
    witness_ok = (
        res.verdict is Verdict.NOT_CONTAINED
        and eval_router_policy(path, res.witness)
        and not eval_router_policy(pref, res.witness)
    )
    elapsed = time.perf_counter() - t0
    ok = disagree == 0 and witness_ok and elapsed < 60
    _check(5, ok, f"{disagree}/{pairs} fast/enumeration disagreements (k<=3); example NotContained with valid witness: {witness_ok}; {elapsed:.1f}s")


def test_criterion_6_fault_localisation(configs):
    net = Network(topology_from_dict(yaml.safe_load((configs / "rtt.yaml").read_text())))
    run_beaconing(net)
    src, dst = AsId(1, 10), AsId(1, 14)
    t0 = time.perf_counter()
    path = run_send(net, src, dst).path
    hits = 0
    for hop, as_id in enumerate(path.ases, 1):
        clear_faults(net)
        inject_fault(net, Fault("skip_hvf_update", as_id))
        rep = run_send(net, src, dst, count=5)
        hits += all(isinstance(r.validation, PathInvalid) and r.validation.hops == (hop,) for r in rep.results)
    elapsed = time.perf_counter() - t0
    ok = len(path.ases) == 5 and hits == 5 and elapsed < 5
    _check(6, ok, f"faulty hop named exactly in {hits}/5 positions, {elapsed:.2f}s")


def test_criterion_7_beacon_integrity():
    pcb, trust, _ = beacon(3)
    data = pcb.encode()
    t0 = time.perf_counter()
    deltas = (1, 2, 4, 8, 16, 32, 64, 128, 0xFF)
    body_ok = sum(not pcb_rejects(m, trust) for _, m in byte_mutations(data, deltas))
    bare, blob = detach_extension(pcb, 1)
    blob_ok = 0
    for _, m in byte_mutations(blob, deltas):
        try:
            verify_pcb(reattach_extension(bare, 1, m).encode(), trust, PCB_NOW)
            blob_ok += 1
        except PcbError:
            pass
    elapsed = time.perf_counter() - t0
    ok = body_ok == 0 and blob_ok == 0 and elapsed < 10
    detail = f"{body_ok} body and {blob_ok} blob mutations accepted ({len(data)}-byte PCB, {len(blob)}-byte blob), {elapsed:.1f}s"
    _check(7, ok, detail)


def test_criterion_8_lookup_flatness():
    router = run_microbench("router_process")
    build = run_microbench("build_packet")
    ratio = router.ns(1000) / router.ns(10)
    r2 = build.fit["r2"]
    ok = ratio <= 2.0 and r2 >= 0.95
    _check(8, ok, f"router ns/op size 1000 vs 10 ratio {ratio:.2f} (<= 2), build_packet linear fit R^2 {r2:.4f} (>= 0.95)")


def test_criterion_9_registry():
    auth = SigKeyPair.generate(GLOBAL_AUTHORITY, b"r" * 32)
    trust = TrustStore()
    trust.add_pair(auth)
    reg = PolicyRegistry(auth)
    t0 = time.perf_counter()
    rng = random.Random(9)
    pids = rng.sample(range(1 << 32), 200)
    for pid in pids:
        reg.register(GLOBAL_AUTHORITY, PolicyId(pid), f"d{pid}")
    refused = 0
    for pid in pids:
        try:
            reg.register(GLOBAL_AUTHORITY, PolicyId(pid), "again")
        except AlreadyExists:
            refused += 1
    resolver = PolicyResolver(trust, lambda pid: reg)
    for _ in range(5):
        for pid in pids:
            resolver.resolve(PolicyId(pid))
    elapsed = time.perf_counter() - t0
    ok = refused == len(pids) and resolver.remote_fetches == len(pids) and elapsed < 1.0
    _check(9, ok, f"{refused}/{len(pids)} re-registrations refused, {resolver.remote_fetches} fetches for {len(pids)} ids x5 resolves, {elapsed:.2f}s")
