"""Topology files: YAML schema, validation, and seeded key generation.

Schema (keys not listed are rejected)::

    seed: 7                     # 64-bit; FABRID_SEED / --seed override it
    start_time: 1700000000      # beacon epoch, seconds
    max_segment_len: 8
    global_policies: [{pid: 1, description: "<policy text>"}]
    ases:
      - id: 1-110
        core: true
        hosts: [10.0.0.1]
        host_range: 10.0.0.0/24             # optional, used for IF-IP announcements
        default_route: {latency_ms: 1, jitter: {mean_ms: 0, sigma: 0}}
        routes: [{id: fast, indices: [1], latency_ms: 11, jitter: {...}}]
        policies: [{index: 1, pid: 1, scope: global, pairs: all}]
        intra: [{src: 10.0.0.1, dst: 10.0.0.2, pids: [{pid: 1, scope: global}]}]
    links: [{a: 1-110, a_if: 1, b: 1-111, b_if: 1, latency_ms: 5, kind: parent}]
    trust: [1-110, ...]         # ASes endpoints trust for compliance; default all
"""
from __future__ import annotations

import hashlib
import math
import random
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from ..addr import AsId, HostAddr
from ..control_plane.maps import IpRange
from ..crypto import SigKeyPair, SymKey
from ..drkey import AsSecret
from ..policy import PolicyError, parse_policy
from ..registry import PolicyId

MAX_SEED = (1 << 64) - 1
LINK_KINDS = ("core", "parent")


class ConfigError(ValueError):
    def __init__(self, field_name: str, reason: str):
        self.field = field_name
        self.reason = reason
        super().__init__(f"{field_name}: {reason}")


@dataclass(frozen=True)
class Jitter:
    """Log-normal delay added on top of a base latency, parameterised by its mean."""

    mean_ms: float = 0.0
    sigma: float = 0.0

    def draw(self, rng: random.Random) -> float:
        if self.mean_ms <= 0:
            return 0.0
        if self.sigma <= 0:
            return self.mean_ms
        mu = math.log(self.mean_ms) - self.sigma ** 2 / 2
        return rng.lognormvariate(mu, self.sigma)


@dataclass(frozen=True)
class RouteConfig:
    id: str
    indices: frozenset[int]
    latency_ms: float
    jitter: Jitter = Jitter()

    @property
    def mean_ms(self) -> float:
        return self.latency_ms + self.jitter.mean_ms


@dataclass(frozen=True)
class Announcement:
    index: int
    pid: PolicyId
    pairs: tuple | str = "all"
    description: str | None = None


@dataclass(frozen=True)
class IntraConfig:
    src: HostAddr
    dst: HostAddr
    pids: tuple[PolicyId, ...]


@dataclass
class AsConfig:
    id: AsId
    core: bool = False
    hosts: list[HostAddr] = field(default_factory=list)
    host_range: IpRange | None = None
    default_route: RouteConfig = RouteConfig("default", frozenset({0}), 1.0)
    routes: list[RouteConfig] = field(default_factory=list)
    policies: list[Announcement] = field(default_factory=list)
    intra: list[IntraConfig] = field(default_factory=list)
    secret: AsSecret | None = None
    keypair: SigKeyPair | None = None

    def route_for(self, index: int) -> list[RouteConfig]:
        if index == 0:
            return [self.default_route]
        return [r for r in self.routes if index in r.indices]

    def all_routes(self) -> dict[str, RouteConfig]:
        out = {self.default_route.id: self.default_route}
        out.update({r.id: r for r in self.routes})
        return out


@dataclass(frozen=True)
class LinkConfig:
    a: AsId
    a_if: int
    b: AsId
    b_if: int
    latency_ms: float
    jitter: Jitter = Jitter()
    kind: str = "parent"


@dataclass
class Topology:
    seed: int
    ases: dict[AsId, AsConfig]
    links: list[LinkConfig]
    global_policies: dict[int, str] = field(default_factory=dict)
    trust: set[AsId] | None = None
    start_time: int = 1_700_000_000
    max_segment_len: int = 8
    authority: SigKeyPair | None = None

    def interfaces(self, as_id: AsId) -> dict[int, tuple[LinkConfig, AsId, int]]:
        """Interface id -> (link, neighbour AS, neighbour interface)."""
        out = {}
        for ln in self.links:
            if ln.a == as_id:
                out[ln.a_if] = (ln, ln.b, ln.b_if)
            if ln.b == as_id:
                out[ln.b_if] = (ln, ln.a, ln.a_if)
        return out

    def trusted(self) -> set[AsId]:
        return set(self.ases) if self.trust is None else set(self.trust)


def _seeded(seed: int, label: str, n: int) -> bytes:
    return hashlib.sha256(f"fabrid-sim|{seed}|{label}".encode()).digest()[:n]


def assign_keys(topo: Topology) -> None:
    for a in topo.ases.values():
        a.secret = AsSecret(SymKey(_seeded(topo.seed, f"secret|{a.id}", 16)), a.id)
        a.keypair = SigKeyPair.generate(a.id, _seeded(topo.seed, f"sign|{a.id}", 32))
    topo.authority = SigKeyPair.generate("global", _seeded(topo.seed, "authority", 32))


# -- parsing ------------------------------------------------------------------


def _get(d: dict, key: str, where: str, typ: type | tuple = object, default: Any = ...) -> Any:
    if key not in d:
        if default is ...:
            raise ConfigError(f"{where}.{key}", "missing")
        return default
    v = d[key]
    if typ is not object and not isinstance(v, typ):
        raise ConfigError(f"{where}.{key}", f"expected {getattr(typ, '__name__', typ)}, got {type(v).__name__}")
    return v


def _check_keys(d: Any, allowed: set[str], where: str) -> None:
    if not isinstance(d, dict):
        raise ConfigError(where, "expected a mapping")
    extra = set(d) - allowed
    if extra:
        raise ConfigError(where, f"unknown keys {sorted(extra)}")


def _as_id(v: Any, where: str) -> AsId:
    try:
        return AsId.parse(str(v))
    except ValueError as e:
        raise ConfigError(where, str(e)) from None


def _host(v: Any, where: str) -> HostAddr:
    try:
        return HostAddr.parse(str(v))
    except ValueError as e:
        raise ConfigError(where, str(e)) from None


def _num(v: Any, where: str, minimum: float = 0.0) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or v < minimum:
        raise ConfigError(where, f"expected a number >= {minimum}")
    return float(v)


def _jitter(d: Any, where: str) -> Jitter:
    if d is None:
        return Jitter()
    _check_keys(d, {"mean_ms", "sigma"}, where)
    return Jitter(_num(d.get("mean_ms", 0), f"{where}.mean_ms"), _num(d.get("sigma", 0), f"{where}.sigma"))


def _route(d: Any, where: str, default_id: str | None = None) -> RouteConfig:
    _check_keys(d, {"id", "indices", "latency_ms", "jitter"}, where)
    rid = str(d.get("id", default_id)) if default_id else str(_get(d, "id", where))
    idx = d.get("indices", [] if default_id is None else [0])
    if not isinstance(idx, list) or not all(isinstance(i, int) and 0 <= i <= 0xFFFF for i in idx):
        raise ConfigError(f"{where}.indices", "expected a list of 16-bit indices")
    if default_id is None and 0 in idx:
        raise ConfigError(f"{where}.indices", "index 0 belongs to the default route")
    return RouteConfig(rid, frozenset(idx), _num(_get(d, "latency_ms", where), f"{where}.latency_ms"), _jitter(d.get("jitter"), f"{where}.jitter"))


def _pid(d: Any, owner: AsId, where: str) -> PolicyId:
    _check_keys(d, {"pid", "scope", "index", "pairs", "description"}, where)
    scope = d.get("scope", "global")
    if scope not in ("global", "local"):
        raise ConfigError(f"{where}.scope", "must be 'global' or 'local'")
    pid = _get(d, "pid", where, int)
    try:
        return PolicyId(pid, None if scope == "global" else owner)
    except ValueError as e:
        raise ConfigError(f"{where}.pid", str(e)) from None


def _policy_text(text: Any, where: str) -> str:
    if not isinstance(text, str):
        raise ConfigError(where, "policy description must be text")
    try:
        parse_policy(text)
    except PolicyError as e:
        raise ConfigError(where, f"unparseable policy: {e}") from None
    return text


def _as(d: Any, where: str) -> AsConfig:
    _check_keys(d, {"id", "core", "hosts", "host_range", "default_route", "routes", "policies", "intra"}, where)
    aid = _as_id(_get(d, "id", where), f"{where}.id")
    cfg = AsConfig(aid, bool(d.get("core", False)))
    cfg.hosts = [_host(h, f"{where}.hosts[{i}]") for i, h in enumerate(d.get("hosts", []) or [])]
    if d.get("host_range") is not None:
        try:
            cfg.host_range = IpRange.parse(str(d["host_range"]))
        except ValueError as e:
            raise ConfigError(f"{where}.host_range", str(e)) from None
    if d.get("default_route") is not None:
        cfg.default_route = _route(d["default_route"], f"{where}.default_route", default_id="default")
    cfg.routes = [_route(r, f"{where}.routes[{i}]") for i, r in enumerate(d.get("routes", []) or [])]
    ids = [r.id for r in cfg.routes] + [cfg.default_route.id]
    if len(set(ids)) != len(ids):
        raise ConfigError(f"{where}.routes", "duplicate route id")
    for i, p in enumerate(d.get("policies", []) or []):
        w = f"{where}.policies[{i}]"
        pid = _pid(p, aid, w)
        index = _get(p, "index", w, int)
        if not 0 < index <= 0xFFFF:
            raise ConfigError(f"{w}.index", "announced indices are non-zero 16-bit values")
        pairs = p.get("pairs", "all")
        if pairs != "all":
            if not isinstance(pairs, list) or not all(
                isinstance(x, list) and len(x) == 2 and all(isinstance(v, int) for v in x) for x in pairs
            ):
                raise ConfigError(f"{w}.pairs", "expected 'all' or a list of [ingress, egress]")
            pairs = tuple(tuple(x) for x in pairs)
        desc = p.get("description")
        if pid.owner is not None:
            desc = _policy_text(_get(p, "description", w), f"{w}.description")
        elif desc is not None:
            raise ConfigError(f"{w}.description", "global policies are described under global_policies")
        cfg.policies.append(Announcement(index, pid, pairs, desc))
    seen = [a.index for a in cfg.policies]
    if len(set(seen)) != len(seen):
        raise ConfigError(f"{where}.policies", "an index is announced twice")
    for i, r in enumerate(d.get("intra", []) or []):
        w = f"{where}.intra[{i}]"
        _check_keys(r, {"src", "dst", "pids"}, w)
        pids = tuple(_pid(x, aid, f"{w}.pids[{j}]") for j, x in enumerate(r.get("pids", []) or []))
        cfg.intra.append(IntraConfig(_host(_get(r, "src", w), f"{w}.src"), _host(_get(r, "dst", w), f"{w}.dst"), pids))
    return cfg


def _link(d: Any, where: str) -> LinkConfig:
    _check_keys(d, {"a", "a_if", "b", "b_if", "latency_ms", "jitter", "kind"}, where)
    kind = d.get("kind", "parent")
    if kind not in LINK_KINDS:
        raise ConfigError(f"{where}.kind", f"must be one of {LINK_KINDS}")
    ifs = []
    for k in ("a_if", "b_if"):
        v = _get(d, k, where, int)
        if not 0 < v <= 0xFFFF:
            raise ConfigError(f"{where}.{k}", "interface ids are non-zero 16-bit values")
        ifs.append(v)
    return LinkConfig(
        _as_id(_get(d, "a", where), f"{where}.a"),
        ifs[0],
        _as_id(_get(d, "b", where), f"{where}.b"),
        ifs[1],
        _num(_get(d, "latency_ms", where), f"{where}.latency_ms"),
        _jitter(d.get("jitter"), f"{where}.jitter"),
        kind,
    )


def topology_from_dict(d: Any, seed: int | None = None) -> Topology:
    _check_keys(d, {"seed", "start_time", "max_segment_len", "global_policies", "ases", "links", "trust"}, "topology")
    s = seed if seed is not None else d.get("seed", 0)
    if isinstance(s, bool) or not isinstance(s, int) or not 0 <= s <= MAX_SEED:
        raise ConfigError("seed", "expected a 64-bit unsigned integer")
    gp: dict[int, str] = {}
    for i, p in enumerate(d.get("global_policies", []) or []):
        w = f"global_policies[{i}]"
        _check_keys(p, {"pid", "description"}, w)
        pid = _get(p, "pid", w, int)
        if pid in gp:
            raise ConfigError(f"{w}.pid", "duplicate global policy id")
        gp[pid] = _policy_text(_get(p, "description", w), f"{w}.description")
    ases: dict[AsId, AsConfig] = {}
    raw_ases = _get(d, "ases", "topology", list)
    for i, a in enumerate(raw_ases):
        cfg = _as(a, f"ases[{i}]")
        if cfg.id in ases:
            raise ConfigError(f"ases[{i}].id", f"duplicate AS id {cfg.id}")
        ases[cfg.id] = cfg
    links = [_link(x, f"links[{i}]") for i, x in enumerate(d.get("links", []) or [])]
    trust = None
    if d.get("trust") is not None:
        trust = {_as_id(x, f"trust[{i}]") for i, x in enumerate(d["trust"])}
    topo = Topology(
        s,
        ases,
        links,
        gp,
        trust,
        int(d.get("start_time", 1_700_000_000)),
        int(d.get("max_segment_len", 8)),
    )
    validate(topo)
    assign_keys(topo)
    return topo


def validate(topo: Topology) -> None:
    if not topo.ases:
        raise ConfigError("ases", "topology has no ASes")
    used: set[tuple[AsId, int]] = set()
    for i, ln in enumerate(topo.links):
        for end, ifid in ((ln.a, ln.a_if), (ln.b, ln.b_if)):
            if end not in topo.ases:
                raise ConfigError(f"links[{i}]", f"unknown AS {end}")
            if (end, ifid) in used:
                raise ConfigError(f"links[{i}]", f"interface {ifid} of {end} used twice")
            used.add((end, ifid))
        if ln.a == ln.b:
            raise ConfigError(f"links[{i}]", "self-loop")
        if ln.kind == "core" and not (topo.ases[ln.a].core and topo.ases[ln.b].core):
            raise ConfigError(f"links[{i}].kind", "core links join two core ASes")
        if ln.kind == "parent" and topo.ases[ln.b].core:
            raise ConfigError(f"links[{i}].kind", "a core AS cannot be a child")
    for a in topo.ases.values():
        ifs = topo.interfaces(a.id)
        for ann in a.policies:
            if ann.pid.owner is None and ann.pid.pid not in topo.global_policies:
                raise ConfigError(f"ases[{a.id}].policies", f"global pid {ann.pid.pid} is not defined")
            if ann.pairs != "all":
                for x in ann.pairs:
                    for v in x:
                        if v != 0 and v not in ifs:
                            raise ConfigError(f"ases[{a.id}].policies", f"interface {v} does not exist")
    if topo.trust is not None:
        for t in topo.trust:
            if t not in topo.ases:
                raise ConfigError("trust", f"unknown AS {t}")
    # connectivity
    start = next(iter(topo.ases))
    seen = {start}
    todo = deque([start])
    while todo:
        cur = todo.popleft()
        for _, nb, _ in topo.interfaces(cur).values():
            if nb not in seen:
                seen.add(nb)
                todo.append(nb)
    if len(seen) != len(topo.ases):
        missing = sorted(str(a) for a in set(topo.ases) - seen)
        raise ConfigError("links", f"topology is not connected; unreachable: {missing}")


def load_topology(path: str | Path, seed: int | None = None) -> Topology:
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except OSError as e:
        raise ConfigError(str(path), str(e)) from None
    except yaml.YAMLError as e:
        raise ConfigError(str(path), f"not valid YAML: {e}") from None
    return topology_from_dict(data, seed)
