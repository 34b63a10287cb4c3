"""Duplicate suppression keyed on (source AS, source host, timestamp)."""
from __future__ import annotations

import enum
import heapq
import threading
from dataclasses import dataclass, field

from ..addr import AsId, HostAddr

NS_PER_MS = 1_000_000
DEFAULT_WINDOW_NS = 2_000 * NS_PER_MS


class DupVerdict(enum.Enum):
    FRESH = "Fresh"
    REPLAY = "Replay"


@dataclass
class _Shard:
    seen: set = field(default_factory=set)
    expiry: list = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)

    def evict(self, now: int) -> None:
        while self.expiry and self.expiry[0][0] <= now:
            _, key = heapq.heappop(self.expiry)
            self.seen.discard(key)


class DuplicateFilter:
    """Sliding-window replay filter.

    A key is remembered for ``window_ns`` after it was first seen. Shards
    are picked by source so unrelated sources never contend on one lock.
    """

    def __init__(self, window_ns: int = DEFAULT_WINDOW_NS, shards: int = 16):
        self.window_ns = window_ns
        self._shards = [_Shard() for _ in range(shards)]

    def _shard(self, src_as: AsId, src_host: HostAddr) -> _Shard:
        return self._shards[hash((src_as, src_host)) % len(self._shards)]

    def check(self, src_as: AsId, src_host: HostAddr, ts: int, now: int) -> DupVerdict:
        sh = self._shard(src_as, src_host)
        key = (src_as, src_host, ts)
        with sh.lock:
            sh.evict(now)
            if key in sh.seen:
                return DupVerdict.REPLAY
            sh.seen.add(key)
            heapq.heappush(sh.expiry, (now + self.window_ns, key))
            return DupVerdict.FRESH

    def __len__(self) -> int:
        return sum(len(s.seen) for s in self._shards)


def duplicate_check(
    state: DuplicateFilter, src_as: AsId, src_host: HostAddr, ts: int, now: int
) -> DupVerdict:
    return state.check(src_as, src_host, ts, now)
