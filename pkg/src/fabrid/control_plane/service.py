"""Per-AS control service: beacon store, intra-AS policy queries, key issuing."""
from __future__ import annotations

import threading
from dataclasses import dataclass, field

from ..addr import AsId, HostAddr
from ..drkey import AsKeyCache, AsSecret, DerivedKey, derive_as_level, derive_host_as, derive_host_host
from ..registry import PolicyId, PolicyResolver
from .paths import PathSegment, SegmentKind

DEFAULT_VALIDITY = 6 * 3600


class NotLocal(ValueError):
    pass


class BeaconStore:
    """Segments keyed by kind; concurrent readers see snapshots, inserts are exclusive."""

    def __init__(self) -> None:
        self._segments: dict[SegmentKind, dict[tuple, PathSegment]] = {k: {} for k in SegmentKind}
        self._lock = threading.Lock()

    def insert(self, seg: PathSegment) -> bool:
        """Store ``seg``; a newer beacon over the same hops replaces the older one."""
        key = tuple((e.as_id, e.ingress, e.egress) for e in seg.pcb.entries)
        with self._lock:
            bucket = self._segments[seg.kind]
            old = bucket.get(key)
            if old is not None and old.pcb.origin_time >= seg.pcb.origin_time:
                return False
            bucket[key] = seg
            return True

    def segments(self, kind: SegmentKind) -> list[PathSegment]:
        return list(self._segments[kind].values())

    def __len__(self) -> int:
        return sum(len(v) for v in self._segments.values())


@dataclass(frozen=True)
class IntraRoutePolicy:
    src: HostAddr
    dst: HostAddr
    pids: tuple[PolicyId, ...]
    not_before: int = 0
    not_after: int = DEFAULT_VALIDITY


@dataclass
class ControlService:
    as_id: AsId
    secret: AsSecret
    hosts: set[HostAddr] = field(default_factory=set)
    intra: list[IntraRoutePolicy] = field(default_factory=list)
    resolver: PolicyResolver | None = None
    beacons: BeaconStore = field(default_factory=BeaconStore)
    key_cache: AsKeyCache | None = None
    issued: int = 0

    def issue_as_key(self, requester: AsId) -> DerivedKey:
        """Answer a key request from ``requester``: K_{self -> requester}."""
        self.issued += 1
        return derive_as_level(self.secret, requester)

    def host_key(self, remote: AsId, host: HostAddr) -> DerivedKey:
        """K_{remote -> self:host}, the key a remote AS's routers use for packets from ``host``."""
        if self.key_cache is None:
            raise RuntimeError("control service has no remote key source")
        return derive_host_as(self.key_cache.get(remote), host)

    def host_host_key(self, remote: AsId, remote_host: HostAddr, local_host: HostAddr) -> DerivedKey:
        if self.key_cache is None:
            raise RuntimeError("control service has no remote key source")
        return derive_host_host(self.key_cache.get(remote), remote_host, local_host)

    def local_host_host_key(self, remote: AsId, local_host: HostAddr, remote_host: HostAddr) -> DerivedKey:
        """K_{self:local_host -> remote:remote_host}, derived from the local secret."""
        return derive_host_host(derive_as_level(self.secret, remote), local_host, remote_host)

    def query_intra_as_policies(
        self, src: HostAddr, dst: HostAddr
    ) -> tuple[list[PolicyId], tuple[int, int]]:
        """Policies guaranteed on the internal route between two local hosts."""
        for h in (src, dst):
            if h not in self.hosts:
                raise NotLocal(f"{h} is not a host of {self.as_id}")
        for r in self.intra:
            if r.src == src and r.dst == dst:
                return list(r.pids), (r.not_before, r.not_after)
        return [], (0, DEFAULT_VALIDITY)
