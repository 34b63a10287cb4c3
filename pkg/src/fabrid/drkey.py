"""DRKey-style key hierarchy.

AS secret -> AS-level key (per remote AS) -> host-level keys. Border
routers never store host keys; they recompute them from the AS secret and
the source fields of the packet header.
"""
from __future__ import annotations

import enum
import threading
from dataclasses import dataclass, field
from typing import Callable

from .addr import AsId, HostAddr
from .crypto import SymKey, prf


class KeyLevel(enum.Enum):
    AS_LEVEL = "as_level"
    HOST_AS = "host_as"
    HOST_HOST = "host_host"


class LevelMismatch(ValueError):
    pass


@dataclass(frozen=True)
class AsSecret:
    key: SymKey = field(repr=False)
    owner: AsId


@dataclass(frozen=True)
class DerivedKey:
    """``issuer`` is the AS whose secret roots the key (A in K_{A->B}),
    ``peer`` the AS it was issued to."""

    key: SymKey = field(repr=False)
    level: KeyLevel
    issuer: AsId
    peer: AsId
    issuer_host: HostAddr | None = None
    peer_host: HostAddr | None = None

    def __post_init__(self) -> None:
        hosts = (self.issuer_host is not None, self.peer_host is not None)
        expected = {
            KeyLevel.AS_LEVEL: (False, False),
            KeyLevel.HOST_AS: (False, True),
            KeyLevel.HOST_HOST: (True, True),
        }[self.level]
        if hosts != expected:
            raise ValueError(f"party fields do not match level {self.level.value}")


def derive_as_level(secret: AsSecret, b: AsId) -> DerivedKey:
    return DerivedKey(
        SymKey(prf(secret.key, b.encode())), KeyLevel.AS_LEVEL, secret.owner, b
    )


def _require_as_level(k: DerivedKey) -> None:
    if k.level is not KeyLevel.AS_LEVEL:
        raise LevelMismatch(f"expected an AS-level key, got {k.level.value}")


def derive_host_as(as_key: DerivedKey, h_b: HostAddr) -> DerivedKey:
    _require_as_level(as_key)
    return DerivedKey(
        SymKey(prf(as_key.key, h_b.encode())),
        KeyLevel.HOST_AS,
        as_key.issuer,
        as_key.peer,
        peer_host=h_b,
    )


def derive_host_host(as_key: DerivedKey, h_a: HostAddr, h_b: HostAddr) -> DerivedKey:
    """K_{A:h_a -> B:h_b}; ``h_a`` lives in the issuing AS, ``h_b`` in the peer."""
    _require_as_level(as_key)
    return DerivedKey(
        SymKey(prf(as_key.key, h_a.encode() + h_b.encode())),
        KeyLevel.HOST_HOST,
        as_key.issuer,
        as_key.peer,
        issuer_host=h_a,
        peer_host=h_b,
    )


def router_rederive(secret: AsSecret, src_as: AsId, src_host: HostAddr) -> DerivedKey:
    """Stateless recomputation of K_{A -> src_as:src_host} at a border router."""
    return derive_host_as(derive_as_level(secret, src_as), src_host)


class AsKeyCache:
    """Control-service cache of AS-level keys fetched from remote ASes.

    ``fetch`` performs the (simulated) remote key request. Reads are
    concurrent; a miss takes the write lock so each key is fetched once.
    """

    def __init__(self, fetch: Callable[[AsId], DerivedKey]):
        self._fetch = fetch
        self._keys: dict[AsId, DerivedKey] = {}
        self._lock = threading.Lock()
        self.fetches = 0

    def get(self, issuer: AsId) -> DerivedKey:
        k = self._keys.get(issuer)
        if k is not None:
            return k
        with self._lock:
            k = self._keys.get(issuer)
            if k is None:
                k = self._fetch(issuer)
                _require_as_level(k)
                self._keys[issuer] = k
                self.fetches += 1
            return k
