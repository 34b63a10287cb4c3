from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from fabrid.addr import AsId, HostAddr
from fabrid.control_plane import (
    IfIpPair,
    IpRange,
    MapDecodeError,
    MapError,
    PolicyMaps,
    TooManyIndices,
    decode_maps,
    encode_maps,
    map_sizes,
    section_sizes,
    synthetic_maps,
)
from fabrid.registry import PolicyId

OWNER = AsId(1, 5)


def test_reported_sizes():
    s = section_sizes(ifif=500, per_pair=5, dmap=100)
    assert (s.ifif, s.dmap) == (7500, 800)
    assert section_sizes(ifip=100, per_pair=5).ifip == 2200
    empty = section_sizes()
    assert (empty.header, empty.imap, empty.dmap) == (8, 0, 0)


@pytest.mark.parametrize("n", [0, 100, 200, 1000])
def test_size_slopes(n):
    assert section_sizes(ifif=n).ifif == 15 * n
    assert section_sizes(ifip=n).ifip == 22 * n
    assert section_sizes(dmap=n).dmap == 8 * n


def test_full_encoding_length():
    m = synthetic_maps(OWNER, ifif=500, ifip=100, dmap=100)
    assert len(encode_maps(m)) == 8 + 7500 + 2200 + 800 == map_sizes(m).total


pairs = st.one_of(
    st.tuples(st.integers(0, 40), st.integers(0, 40)).map(lambda t: IfIpPair(*t)),
    st.tuples(st.integers(0, 40), st.integers(0, 255), st.integers(8, 32)).map(
        lambda t: IfIpPair(t[0], IpRange(t[1] << 24, t[2]))
    ),
    st.tuples(st.integers(0, 40), st.integers(0, 255), st.integers(8, 32)).map(
        lambda t: IfIpPair(IpRange(t[1] << 24, t[2]), t[0])
    ),
)


@st.composite
def policy_maps(draw):
    idxs = draw(st.lists(st.integers(1, 0xFFFF), min_size=1, max_size=12, unique=True))
    m = PolicyMaps(OWNER)
    for i in idxs:
        m.dmap[i] = PolicyId(draw(st.integers(0, 2**32 - 1)), draw(st.sampled_from([None, OWNER])))
    for p in draw(st.lists(pairs, max_size=10)):
        m.imap[p] = frozenset(draw(st.lists(st.sampled_from(idxs), min_size=1, max_size=5)))
    return m


@given(policy_maps())
def test_round_trip(m):
    data = encode_maps(m)
    back = decode_maps(data, OWNER)
    assert back.imap == m.imap and back.dmap == m.dmap
    assert encode_maps(back) == data


@given(policy_maps(), st.data())
def test_truncation_and_trailing_bytes_rejected(m, data):
    enc = encode_maps(m)
    cut = data.draw(st.integers(0, len(enc) - 1))
    with pytest.raises(MapDecodeError):
        decode_maps(enc[:cut], OWNER)
    with pytest.raises(MapDecodeError):
        decode_maps(enc + b"\x00", OWNER)


def test_validation():
    m = PolicyMaps(OWNER, {IfIpPair(1, 2): frozenset({1})}, {})
    with pytest.raises(MapError):
        encode_maps(m)
    with pytest.raises(MapError):
        encode_maps(PolicyMaps(OWNER, {}, {0: PolicyId(1)}))
    with pytest.raises(MapError):
        encode_maps(PolicyMaps(OWNER, {}, {1: PolicyId(1, AsId(1, 99))}))
    with pytest.raises(MapError):
        IfIpPair(IpRange(0, 8), IpRange(0, 8))
    big = PolicyMaps(OWNER, {IfIpPair(1, 2): frozenset(range(1, 257))}, {i: PolicyId(i) for i in range(1, 257)})
    with pytest.raises(TooManyIndices):
        encode_maps(big)


def test_host_lookup():
    r = IpRange.parse("10.1.0.0/16")
    m = PolicyMaps(OWNER, {IfIpPair(3, r): frozenset({4}), IfIpPair(r, 5): frozenset({6})},
                   {4: PolicyId(1), 6: PolicyId(2)})
    inside, outside = HostAddr.parse("10.1.2.3"), HostAddr.parse("10.2.0.1")
    assert m.indices_for_host(3, None, inside) == {4}
    assert m.indices_for_host(None, 5, inside) == {6}
    assert m.indices_for_host(3, 5, outside) == frozenset()
    assert m.index_of(PolicyId(2)) == [6]
