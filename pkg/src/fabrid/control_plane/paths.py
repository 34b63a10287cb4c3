"""Path segments, end-to-end combination, and endpoint-side path selection."""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from ..addr import AsId, HostAddr
from ..policy import (
    ContainmentBounds,
    Policy,
    PolicyError,
    Verdict,
    check_containment,
    format_policy,
    parse_policy,
)
from ..registry import PolicyId, PolicyResolver, RegistryError
from .maps import MapError, PolicyMaps
from .pcb import PCB

log = logging.getLogger(__name__)


class SegmentKind(enum.Enum):
    UP = "up"
    CORE = "core"
    DOWN = "down"


class JoinMismatch(ValueError):
    pass


@dataclass(frozen=True)
class Hop:
    """One AS on a path in traversal direction; interface 0 marks a path end."""

    as_id: AsId
    ingress: int
    egress: int
    maps: PolicyMaps | None = field(default=None, compare=False)
    announced: bool = field(default=False, compare=False)


@dataclass(frozen=True)
class PathSegment:
    kind: SegmentKind
    pcb: PCB

    def hops(self, reverse: bool | None = None) -> list[Hop]:
        """Hops in traversal order.

        Up-segments run against beacon direction, down-segments with it;
        core segments default to beacon direction unless ``reverse`` is set.
        """
        if reverse is None:
            reverse = self.kind is SegmentKind.UP
        out = []
        for e in self.pcb.entries:
            try:
                maps = e.maps()
            except MapError:
                maps = None
            if reverse:
                out.append(Hop(e.as_id, e.egress, e.ingress, maps, e.has_policy_ext))
            else:
                out.append(Hop(e.as_id, e.ingress, e.egress, maps, e.has_policy_ext))
        return out[::-1] if reverse else out

    @property
    def first_as(self) -> AsId:
        return self.pcb.entries[0].as_id

    @property
    def last_as(self) -> AsId:
        return self.pcb.entries[-1].as_id

    def __str__(self) -> str:
        return f"{self.kind.value}:" + "-".join(str(a) for a in self.pcb.ases)


@dataclass(frozen=True)
class EndToEndPath:
    hops: tuple[Hop, ...]
    src_host: HostAddr | None = None
    dst_host: HostAddr | None = None

    @property
    def ases(self) -> tuple[AsId, ...]:
        return tuple(h.as_id for h in self.hops)

    @property
    def src(self) -> AsId:
        return self.hops[0].as_id

    @property
    def dst(self) -> AsId:
        return self.hops[-1].as_id

    def __len__(self) -> int:
        return len(self.hops)

    def __str__(self) -> str:
        return " > ".join(f"{h.as_id}[{h.ingress}:{h.egress}]" for h in self.hops)


def _join(left: list[Hop], right: list[Hop]) -> list[Hop]:
    a, b = left[-1], right[0]
    if a.as_id != b.as_id:
        raise JoinMismatch(f"segments do not meet: {a.as_id} vs {b.as_id}")
    merged = Hop(
        a.as_id,
        a.ingress,
        b.egress,
        a.maps if a.maps is not None else b.maps,
        a.announced or b.announced,
    )
    out = left[:-1] + [merged] + right[1:]
    seen = [h.as_id for h in out]
    if len(set(seen)) != len(seen):
        raise JoinMismatch("combined path revisits an AS")
    return out


def combine_segments(
    up: PathSegment | None = None,
    core: PathSegment | None = None,
    down: PathSegment | None = None,
    src_host: HostAddr | None = None,
    dst_host: HostAddr | None = None,
) -> EndToEndPath:
    """Join up to three segments at shared ASes into one traversal-ordered path.

    A core segment may be used in either beacon orientation; the one whose
    ends meet the neighbouring segments is picked.
    """
    parts: list[list[Hop]] = []
    if up is not None:
        parts.append(up.hops())
    if core is not None:
        fwd, rev = core.hops(False), core.hops(True)
        start = parts[-1][-1].as_id if parts else None
        end = down.first_as if down is not None else None
        for cand in (fwd, rev):
            if (start is None or cand[0].as_id == start) and (end is None or cand[-1].as_id == end):
                parts.append(cand)
                break
        else:
            raise JoinMismatch(f"core segment {core} does not connect the given segments")
    if down is not None:
        parts.append(down.hops())
    if not parts:
        raise JoinMismatch("no segments to combine")
    hops = parts[0]
    for nxt in parts[1:]:
        hops = _join(hops, nxt)
    return EndToEndPath(tuple(hops), src_host, dst_host)


def candidate_indices(path: EndToEndPath, pos: int) -> list[int]:
    """Indices announced for the way ``path`` crosses hop ``pos``.

    The exact interface pair is tried first; IF-IP entries are consulted
    only at the path ends, against the endpoint hosts.
    """
    hop = path.hops[pos]
    if hop.maps is None:
        return []
    found = set(hop.maps.indices_for(hop.ingress, hop.egress))
    if not found:
        if pos == 0 and path.src_host is not None:
            found |= hop.maps.indices_for_host(None, hop.egress, path.src_host)
        if pos == len(path.hops) - 1 and path.dst_host is not None:
            found |= hop.maps.indices_for_host(hop.ingress, None, path.dst_host)
    return sorted(found)


class HopStatus(enum.Enum):
    COMPLIANT = "Compliant"
    NON_COMPLIANT = "NonCompliant"
    UNTRUSTED = "Untrusted"
    NO_ANNOUNCEMENT = "NoAnnouncement"


@dataclass(frozen=True)
class HopVerdict:
    status: HopStatus
    index: int = 0
    warning: bool = False

    def __str__(self) -> str:
        if self.status is HopStatus.COMPLIANT:
            return f"Compliant({self.index})"
        return self.status.value + ("!" if self.warning else "")


@dataclass(frozen=True)
class RankedPath:
    path: EndToEndPath
    verdicts: tuple[HopVerdict, ...]

    @property
    def has_untrusted(self) -> bool:
        return any(v.status is HopStatus.UNTRUSTED for v in self.verdicts)

    @property
    def compliant(self) -> int:
        return sum(v.status is HopStatus.COMPLIANT for v in self.verdicts)

    @property
    def indices(self) -> list[int]:
        """Index vector for the on-path ASes after the first."""
        return [v.index if v.status is HopStatus.COMPLIANT else 0 for v in self.verdicts[1:]]

    def rank_key(self) -> tuple:
        return (self.has_untrusted, -self.compliant, len(self.path), self.path.ases)


class ContainmentCache:
    """Memoizes containment verdicts of announced policies against one preference."""

    def __init__(self, bounds: ContainmentBounds | None = None):
        self.bounds = bounds or ContainmentBounds()
        self._verdicts: dict[tuple[PolicyId, str], Verdict] = {}
        self._policies: dict[PolicyId, Policy] = {}
        self.checks = 0

    def contained(self, pid: PolicyId, resolver: PolicyResolver, pref: Policy) -> bool:
        key = (pid, format_policy(pref))
        v = self._verdicts.get(key)
        if v is None:
            pol = self._policies.get(pid)
            if pol is None:
                pol = parse_policy(resolver.resolve(pid).description)
                self._policies[pid] = pol
            self.checks += 1
            v = check_containment(pol, pref, self.bounds).verdict
            self._verdicts[key] = v
        return v is Verdict.CONTAINED


def hop_verdict(
    path: EndToEndPath,
    pos: int,
    pref: Policy,
    trusted: Callable[[AsId], bool],
    resolver: PolicyResolver,
    cache: ContainmentCache,
) -> HopVerdict:
    hop = path.hops[pos]
    if not trusted(hop.as_id):
        return HopVerdict(HopStatus.UNTRUSTED)
    idxs = candidate_indices(path, pos)
    if hop.maps is None or not idxs:
        return HopVerdict(HopStatus.NO_ANNOUNCEMENT)
    failed = 0
    for idx in idxs:
        pid = hop.maps.dmap[idx]
        try:
            if cache.contained(pid, resolver, pref):
                return HopVerdict(HopStatus.COMPLIANT, idx)
        except (RegistryError, PolicyError) as e:
            log.warning("could not evaluate %s announced by %s: %s", pid, hop.as_id, e)
            failed += 1
    if failed == len(idxs):
        return HopVerdict(HopStatus.NO_ANNOUNCEMENT, warning=True)
    return HopVerdict(HopStatus.NON_COMPLIANT)


def filter_paths(
    paths: Iterable[EndToEndPath],
    pref: Policy,
    trusted: Iterable[AsId],
    resolver: PolicyResolver,
    cache: ContainmentCache | None = None,
) -> list[RankedPath]:
    """Per-hop verdicts for each path, best paths first."""
    trust_set = set(trusted)
    cache = cache or ContainmentCache()
    ranked = []
    for p in paths:
        verdicts = tuple(
            hop_verdict(p, i, pref, trust_set.__contains__, resolver, cache)
            for i in range(len(p.hops))
        )
        ranked.append(RankedPath(p, verdicts))
    ranked.sort(key=RankedPath.rank_key)
    return ranked


def assign_indices(path: EndToEndPath, choices: dict[AsId, PolicyId] | PolicyId | None) -> list[int]:
    """Map each on-path AS (the first excluded) to the index announcing its chosen policy, else 0."""
    out = []
    for pos in range(1, len(path.hops)):
        hop = path.hops[pos]
        want = choices.get(hop.as_id) if isinstance(choices, dict) else choices
        idx = 0
        if want is not None and hop.maps is not None:
            for i in candidate_indices(path, pos):
                if hop.maps.dmap.get(i) == want:
                    idx = i
                    break
        out.append(idx)
    return out


def enumerate_paths(
    src: AsId,
    dst: AsId,
    up: Sequence[PathSegment],
    core: Sequence[PathSegment],
    down: Sequence[PathSegment],
    src_host: HostAddr | None = None,
    dst_host: HostAddr | None = None,
) -> list[EndToEndPath]:
    """All distinct loop-free combinations from the given segment sets."""
    # None stands for "no segment of this kind", which suits endpoints in core ASes
    ups: list[PathSegment | None] = [s for s in up if s.last_as == src] + [None]
    downs: list[PathSegment | None] = [s for s in down if s.last_as == dst] + [None]
    out: dict[tuple, EndToEndPath] = {}
    for u in ups:
        for d in downs:
            for c in [None, *core]:
                if u is None and c is None and d is None:
                    continue
                try:
                    p = combine_segments(u, c, d, src_host, dst_host)
                except JoinMismatch:
                    continue
                if p.src != src or p.dst != dst:
                    continue
                key = tuple((h.as_id, h.ingress, h.egress) for h in p.hops)
                out.setdefault(key, p)
    return [out[k] for k in sorted(out)]
