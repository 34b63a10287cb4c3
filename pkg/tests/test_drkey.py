from __future__ import annotations

import random

import pytest

import oracle
from fabrid.addr import AsId, HostAddr
from fabrid.crypto import SymKey
from fabrid.drkey import (
    AsKeyCache,
    AsSecret,
    LevelMismatch,
    derive_as_level,
    derive_host_as,
    derive_host_host,
    router_rederive,
)


def _secret(rng: random.Random, owner: AsId) -> AsSecret:
    return AsSecret(SymKey(rng.randbytes(16)), owner)


def _as(rng: random.Random) -> AsId:
    return AsId(rng.randint(1, 0xFFFF), rng.randint(1, (1 << 48) - 1))


def _host(rng: random.Random) -> HostAddr:
    return HostAddr(rng.getrandbits(32))


def test_as_level_matches_oracle_and_separates_peers():
    rng = random.Random(1)
    for _ in range(1000):
        a, b, c = _as(rng), _as(rng), _as(rng)
        if len({a, b, c}) < 3:
            continue
        ka = _secret(rng, a)
        kab = derive_as_level(ka, b)
        assert kab.key.bytes_ == oracle.k_as(ka.key.bytes_, b.encode())
        assert kab.key != derive_as_level(ka, c).key
        assert kab.key != derive_as_level(_secret(rng, b), a).key


def test_host_as_distinct_hosts_and_router_agreement():
    rng = random.Random(2)
    ka = _secret(rng, AsId(1, 10))
    src = AsId(1, 20)
    seen = set()
    for _ in range(1000):
        h = _host(rng)
        k = derive_host_as(derive_as_level(ka, src), h)
        assert k.key.bytes_ == oracle.k_host_as(ka.key.bytes_, src.encode(), h.encode())
        assert router_rederive(ka, src, h).key == k.key
        seen.add(k.key.bytes_)
    assert len(seen) == 1000


def test_router_rederive_separates_sources():
    rng = random.Random(3)
    ka = _secret(rng, AsId(1, 10))
    h = HostAddr.parse("10.0.0.1")
    keys = {router_rederive(ka, AsId(1, 100 + i), h).key for i in range(200)}
    assert len(keys) == 200
    hosts = {router_rederive(ka, AsId(1, 100), HostAddr(i)).key for i in range(200)}
    assert len(hosts) == 200


def test_host_host_order_and_domain_separation():
    rng = random.Random(4)
    for _ in range(500):
        ka = _secret(rng, _as(rng))
        k = derive_as_level(ka, _as(rng))
        h1, h2 = _host(rng), _host(rng)
        if h1 == h2:
            continue
        hh = derive_host_host(k, h1, h2)
        assert hh.key != derive_host_host(k, h2, h1).key
        assert hh.key != derive_host_as(k, h2).key
        assert hh.key.bytes_ == oracle.cbc_mac(k.key.bytes_, h1.encode() + h2.encode())


def test_level_mismatch():
    ka = AsSecret(SymKey(bytes(16)), AsId(1, 1))
    host_level = derive_host_as(derive_as_level(ka, AsId(1, 2)), HostAddr(1))
    with pytest.raises(LevelMismatch):
        derive_host_as(host_level, HostAddr(2))
    with pytest.raises(LevelMismatch):
        derive_host_host(host_level, HostAddr(2), HostAddr(3))


def test_key_cache_fetches_once():
    ka = AsSecret(SymKey(bytes(16)), AsId(1, 1))
    calls = []

    def fetch(issuer):
        calls.append(issuer)
        return derive_as_level(ka, AsId(1, 2))

    cache = AsKeyCache(fetch)
    for _ in range(5):
        cache.get(AsId(1, 1))
    assert calls == [AsId(1, 1)] and cache.fetches == 1


def test_key_cache_rejects_wrong_level():
    ka = AsSecret(SymKey(bytes(16)), AsId(1, 1))
    bad = derive_host_as(derive_as_level(ka, AsId(1, 2)), HostAddr(1))
    with pytest.raises(LevelMismatch):
        AsKeyCache(lambda _: bad).get(AsId(1, 1))
