"""Single-clock discrete-event loop."""
from __future__ import annotations

import heapq
import itertools
from typing import Any, Callable

NS_PER_MS = 1_000_000
NS_PER_S = 1_000_000_000


class EventLoop:
    """Events run in (time, insertion order); wall-clock time never matters."""

    def __init__(self, start_ns: int = 0):
        self.now = start_ns
        self._queue: list[tuple[int, int, Callable[..., Any], tuple]] = []
        self._seq = itertools.count()
        self.executed = 0

    def at(self, t_ns: int, fn: Callable[..., Any], *args: Any) -> None:
        if t_ns < self.now:
            raise ValueError(f"cannot schedule in the past ({t_ns} < {self.now})")
        heapq.heappush(self._queue, (t_ns, next(self._seq), fn, args))

    def after(self, delay_ns: int, fn: Callable[..., Any], *args: Any) -> None:
        self.at(self.now + max(0, int(delay_ns)), fn, *args)

    def run(self, until_ns: int | None = None) -> None:
        while self._queue:
            if until_ns is not None and self._queue[0][0] > until_ns:
                self.now = until_ns
                return
            t, _, fn, args = heapq.heappop(self._queue)
            self.now = t
            self.executed += 1
            fn(*args)

    def __len__(self) -> int:
        return len(self._queue)
