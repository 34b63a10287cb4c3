"""Wall-clock micro-benchmarks. Absolute numbers are machine-specific; the
shapes (flat lookup cost, linear growth in hops) are what gets checked."""
from __future__ import annotations

import random
import statistics
import time
from dataclasses import dataclass, field
from typing import Any, Callable

from ..addr import AsId, HostAddr
from ..crypto import SymKey
from ..data_plane.dupsup import DuplicateFilter
from ..data_plane.endpoint import SourceContext, build_packet
from ..data_plane.packet import HopField
from ..data_plane.router import Forward, ForwardingTable, RouterContext, router_process
from ..drkey import AsSecret, router_rederive
from ..policy import ContainmentBounds, check_containment, parse_policy

COMPONENTS = ("build_packet", "router_process", "containment")
DEFAULT_HOPS = (2, 4, 8, 16)
DEFAULT_TABLE_SIZES = (10, 1000)


@dataclass
class BenchRow:
    param: int
    ns_per_op: float

    @property
    def ops_per_sec(self) -> float:
        return 1e9 / self.ns_per_op if self.ns_per_op else float("inf")


@dataclass
class BenchReport:
    component: str
    param_name: str
    rows: list[BenchRow] = field(default_factory=list)
    fit: dict[str, float] = field(default_factory=dict)

    def ns(self, param: int) -> float:
        return next(r.ns_per_op for r in self.rows if r.param == param)


def _median_ns(fn: Callable[[int], Any], ops: int, repeats: int, warmup: int) -> float:
    """Median over ``repeats`` batches of ``ops`` calls; ``fn`` gets a running counter."""
    counter = 0
    for _ in range(warmup):
        fn(counter)
        counter += 1
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter_ns()
        for _ in range(ops):
            fn(counter)
            counter += 1
        samples.append((time.perf_counter_ns() - t0) / ops)
    return statistics.median(samples)


def linear_fit(xs: list[float], ys: list[float]) -> dict[str, float]:
    slope, intercept = statistics.linear_regression(xs, ys)
    r = statistics.correlation(xs, ys)
    return {"slope": slope, "intercept": intercept, "r2": r * r}


def _keys(rng: random.Random, n: int) -> list[AsSecret]:
    return [AsSecret(SymKey(rng.randbytes(16)), AsId(1, 100 + i)) for i in range(n)]


SRC_AS = AsId(1, 1)
SRC_HOST = HostAddr.parse("10.0.0.1")
DST_HOST = HostAddr.parse("10.0.9.1")


def _source(secrets: list[AsSecret]) -> SourceContext:
    keys = {s.owner: router_rederive(s, SRC_AS, SRC_HOST).key for s in secrets}
    dk = SymKey(bytes(16))
    return SourceContext(SRC_AS, SRC_HOST, keys.__getitem__, lambda a, h: dk)


def bench_build_packet(hops=DEFAULT_HOPS, ops: int = 300, repeats: int = 7, seed: int = 0) -> BenchReport:
    rng = random.Random(seed)
    report = BenchReport("build_packet", "hops")
    payload = bytes(1000)
    for h in hops:
        secrets = _keys(rng, h)
        src = _source(secrets)
        path = [HopField(s.owner, 1, 2, rng.randbytes(16)) for s in secrets]
        idx = [0] + [1] * (h - 1)
        dst = path[-1].as_id
        # retention is irrelevant here; keep the source's state from growing
        src.retention_ns = 0

        def op(i: int) -> None:
            build_packet(src, path, dst, DST_HOST, idx, payload, now=i)

        report.rows.append(BenchRow(h, _median_ns(op, ops, repeats, warmup=ops // 5)))
    report.fit = linear_fit([float(r.param) for r in report.rows], [r.ns_per_op for r in report.rows])
    return report


def bench_router_process(sizes=DEFAULT_TABLE_SIZES, ops: int = 2000, repeats: int = 7, seed: int = 0) -> BenchReport:
    rng = random.Random(seed)
    report = BenchReport("router_process", "table_size")
    secrets = _keys(rng, 3)
    router_secret = secrets[1]
    src = _source(secrets)
    path = [HopField(s.owner, 1, 2, rng.randbytes(16)) for s in secrets]
    for size in sizes:
        table = ForwardingTable({i: (f"r{i}",) for i in range(1, size + 1)})
        total = ops * (repeats + 1)
        pkts = []
        for k in range(total):
            idx = rng.randint(1, size)
            p = build_packet(src, path, path[-1].as_id, DST_HOST, [0, idx, 0], b"", now=0, ts=k + 1)
            pkts.append(p.__class__(**{**p.__dict__, "cur": 1}))
        src.retained.clear()
        ctx = RouterContext(router_secret.owner, router_secret, table, DuplicateFilter(window_ns=1 << 62))
        # packets are all "now"; freshness always passes
        now = total // 2

        def op(i: int) -> None:
            out = router_process(ctx, pkts[i % total], now)
            if not isinstance(out, Forward):
                raise RuntimeError(f"benchmark packet not forwarded: {out}")

        report.rows.append(BenchRow(size, _median_ns(op, ops, repeats, warmup=0 if total <= ops * repeats else ops)))
    return report


def bench_containment(ks=(1, 2), repeats: int = 5) -> BenchReport:
    path = parse_policy(
        'manu(r) = m1 and exists c: C. software(r, c) and name(c) = s and version(c) = v',
        {"m1": 9, "s": "openssl", "v": "3.1.0"},
    )
    pref = parse_policy(
        'manu(r) = m1 and forall c: C. software(r, c) and name(c) = s -> version(c) >= vmin',
        {"m1": 9, "s": "openssl", "vmin": "3.0.7"},
    )
    report = BenchReport("containment", "k")
    for k in ks:
        b = ContainmentBounds(k=k)

        def op(_: int) -> None:
            check_containment(path, pref, b)

        report.rows.append(BenchRow(k, _median_ns(op, 1, repeats, warmup=1)))
    return report


def run_microbench(component: str, params: dict | None = None) -> BenchReport:
    params = dict(params or {})
    if component == "build_packet":
        return bench_build_packet(**params)
    if component == "router_process":
        return bench_router_process(**params)
    if component == "containment":
        return bench_containment(**params)
    raise ValueError(f"unknown component {component!r}; expected one of {COMPONENTS}")
