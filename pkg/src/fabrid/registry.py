"""Append-only policy registries and the control-service resolution cache.

The global registry is owned by a single authority; each AS owns its local
registry. Every lookup response is signed by the registry owner.
"""
from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable

from .addr import AsId
from .crypto import SigKeyPair, sign
from .trust import GLOBAL_AUTHORITY, Signer, TrustStore

MAX_PID = (1 << 32) - 1


class RegistryError(Exception):
    pass


class AlreadyExists(RegistryError):
    pass


class Unauthorized(RegistryError):
    pass


class NotFound(RegistryError):
    pass


class SignatureInvalid(RegistryError):
    pass


@dataclass(frozen=True, order=True)
class PolicyId:
    """``owner`` None is the global scope; otherwise the AS whose local map defines ``pid``."""

    pid: int
    owner: AsId | None = None

    def __post_init__(self) -> None:
        if not 0 <= self.pid <= MAX_PID:
            raise ValueError(f"policy identifier out of 32-bit range: {self.pid}")

    @property
    def is_global(self) -> bool:
        return self.owner is None

    @property
    def signer(self) -> Signer:
        return GLOBAL_AUTHORITY if self.owner is None else self.owner

    def __str__(self) -> str:
        scope = "G" if self.owner is None else f"L[{self.owner}]"
        return f"{scope}:{self.pid}"

    def to_json(self) -> dict:
        return {"scope": "global" if self.owner is None else str(self.owner), "pid": self.pid}

    @classmethod
    def from_json(cls, d: dict) -> PolicyId:
        scope = d["scope"]
        return cls(int(d["pid"]), None if scope == "global" else AsId.parse(scope))


@dataclass(frozen=True)
class RegistryEntry:
    id: PolicyId
    description: str
    registered_at: int

    def to_json(self) -> dict:
        return {**self.id.to_json(), "description": self.description, "registered_at": self.registered_at}

    @classmethod
    def from_json(cls, d: dict) -> RegistryEntry:
        return cls(PolicyId.from_json(d), d["description"], int(d["registered_at"]))

    def encode(self) -> bytes:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":")).encode()


@dataclass(frozen=True)
class SignedResponse:
    payload: bytes
    signer: Signer
    signature: bytes

    def verify(self, trust: TrustStore) -> bool:
        return trust.verify(self.signer, self.payload, self.signature)

    def entry(self) -> RegistryEntry:
        return RegistryEntry.from_json(json.loads(self.payload))


class PolicyRegistry:
    """One scope's append-only map from policy identifier to description."""

    def __init__(self, keypair: SigKeyPair, owner: AsId | None = None):
        self.owner = owner
        self.keypair = keypair
        self._entries: dict[int, RegistryEntry] = {}
        self._lock = threading.Lock()

    @property
    def signer(self) -> Signer:
        return GLOBAL_AUTHORITY if self.owner is None else self.owner

    def register(self, caller: Signer, pid: PolicyId, description: str, now: int = 0) -> RegistryEntry:
        if pid.owner != self.owner or caller != self.signer:
            raise Unauthorized(f"{caller} may not register {pid} in the registry of {self.signer}")
        with self._lock:
            if pid.pid in self._entries:
                raise AlreadyExists(f"{pid} is already registered")
            entry = RegistryEntry(pid, description, now)
            self._entries[pid.pid] = entry
        return entry

    def lookup(self, pid: PolicyId) -> SignedResponse:
        entry = self._entries.get(pid.pid) if pid.owner == self.owner else None
        if entry is None:
            raise NotFound(f"{pid} is not registered")
        payload = entry.encode()
        return SignedResponse(payload, self.signer, sign(self.keypair, payload))

    def entries(self) -> list[RegistryEntry]:
        return [self._entries[k] for k in sorted(self._entries)]

    def __len__(self) -> int:
        return len(self._entries)

    def dump(self, path: Path) -> None:
        with open(path, "w") as fh:
            for e in self.entries():
                fh.write(json.dumps(e.to_json(), sort_keys=True) + "\n")

    def load(self, path: Path) -> None:
        for e in read_entries(path):
            self.register(self.signer, e.id, e.description, e.registered_at)


def read_entries(path: Path) -> Iterable[RegistryEntry]:
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield RegistryEntry.from_json(json.loads(line))


class PolicyResolver:
    """Control-service cache over the global and remote local registries.

    The first resolve of an identifier fetches and verifies the signed
    entry; later resolves are served locally. Concurrent resolves of one
    identifier share a single fetch.
    """

    def __init__(self, trust: TrustStore, registry_of: Callable[[PolicyId], PolicyRegistry]):
        self.trust = trust
        self.registry_of = registry_of
        self.remote_fetches = 0
        self._cache: dict[PolicyId, RegistryEntry] = {}
        self._locks: dict[PolicyId, threading.Lock] = {}
        self._guard = threading.Lock()

    def resolve(self, pid: PolicyId) -> RegistryEntry:
        hit = self._cache.get(pid)
        if hit is not None:
            return hit
        with self._guard:
            lock = self._locks.setdefault(pid, threading.Lock())
        with lock:
            hit = self._cache.get(pid)
            if hit is not None:
                return hit
            self.remote_fetches += 1
            resp = self.registry_of(pid).lookup(pid)
            if resp.signer != pid.signer or not resp.verify(self.trust):
                raise SignatureInvalid(f"response for {pid} failed signature verification")
            entry = resp.entry()
            if entry.id != pid:
                raise SignatureInvalid(f"signed response for {pid} carries {entry.id}")
            self._cache[pid] = entry
            return entry

    def cached(self, pid: PolicyId) -> bool:
        return pid in self._cache


def resolve_cached(resolver: PolicyResolver, pid: PolicyId) -> RegistryEntry:
    return resolver.resolve(pid)
