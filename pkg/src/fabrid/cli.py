"""Command-line front end: ``fabrid {beacon,paths,send,policy-check,sizes,bench}``.

Exit codes: 0 on success (a NotContained verdict included), 1 on domain
errors during a run, 2 on usage, configuration or policy parse errors.
"""
from __future__ import annotations

import argparse
import csv
import os
import statistics
import sys
from pathlib import Path
from typing import Sequence

from .addr import AsId
from .control_plane import (
    DETACHED_MARKER_LEN,
    ContainmentCache,
    SegmentKind,
    filter_paths,
    section_sizes,
)
from .policy import ContainmentBounds, PolicyError, Verdict, check_containment, parse_policy
from .sim import (
    FAULT_KINDS,
    COMPONENTS,
    ConfigError,
    Fault,
    Network,
    RttScenario,
    SimulationError,
    UnknownAs,
    inject_fault,
    load_topology,
    run_beaconing,
    run_microbench,
    run_rtt_experiment,
    run_send,
    samples_csv,
)

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_USAGE = 2

K0_CAVEAT = (
    "note: --k 0 only considers routers without software components; "
    "existential requirements on software can never hold there"
)


class UsageError(Exception):
    pass


# -- helpers ------------------------------------------------------------------


def _seed(args: argparse.Namespace) -> int | None:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("FABRID_SEED")
    if env is None or env == "":
        return None
    try:
        return int(env, 0)
    except ValueError:
        raise UsageError(f"FABRID_SEED must be an integer, got {env!r}") from None


def _as(text: str) -> AsId:
    try:
        return AsId.parse(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None


def _policy(path: str):
    text = _read(path)
    try:
        return parse_policy(text)
    except PolicyError as e:
        raise UsageError(f"{path}: {e}") from None


def read_trust_file(path: str) -> set[AsId]:
    """One AS id per line; blank lines and ``#`` comments are ignored."""
    out = set()
    for n, line in enumerate(_read(path).splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            out.add(AsId.parse(line))
        except ValueError as e:
            raise UsageError(f"{path}:{n}: {e}") from None
    return out


def _network(args: argparse.Namespace, rounds: int = 1) -> Network:
    if not args.topology:
        raise UsageError("--topology is required")
    topo = load_topology(args.topology, _seed(args))
    net = Network(topo)
    run_beaconing(net, rounds=rounds)
    return net


def _writer(out):
    return csv.writer(out, lineterminator="\n")


def _fmt_path(ases) -> str:
    return " > ".join(map(str, ases))


# -- commands -----------------------------------------------------------------


def cmd_beacon(args, out) -> int:
    net = _network(args, args.rounds)
    rows = []
    for as_id in sorted(net.nodes):
        for kind in SegmentKind:
            for seg in net.segments(kind, as_id):
                rows.append((str(as_id), kind.value, _fmt_path(seg.pcb.ases)))
    rows.sort()
    if args.format == "csv":
        w = _writer(out)
        w.writerow(["as", "kind", "segment"])
        w.writerows(rows)
    else:
        for as_id, kind, seg in rows:
            print(f"{as_id:>10}  {kind:<4}  {seg}", file=out)
        print(f"{len(rows)} segments stored", file=out)
    for d in net.diagnostics:
        print(f"diagnostic: {d}", file=sys.stderr)
    return EXIT_OK


def cmd_paths(args, out) -> int:
    pref = _policy(args.pref) if args.pref else parse_policy(ANY_POLICY)
    net = _network(args)
    trusted = read_trust_file(args.trust) if args.trust else net.topo.trusted()
    paths = net.paths(args.src, args.dst)
    if not paths:
        print(f"no paths from {args.src} to {args.dst}", file=out)
        return EXIT_OK
    resolver = net.node(args.src).service.resolver
    ranked = filter_paths(paths, pref, trusted, resolver, ContainmentCache(ContainmentBounds(k=args.k)))
    if args.format == "csv":
        w = _writer(out)
        w.writerow(["rank", "path", "verdicts", "indices"])
        for n, r in enumerate(ranked, 1):
            w.writerow([n, _fmt_path(r.path.ases), " ".join(map(str, r.verdicts[1:])), " ".join(map(str, r.indices))])
        return EXIT_OK
    for n, r in enumerate(ranked, 1):
        flags = " untrusted" if r.has_untrusted else ""
        print(f"[{n}] {_fmt_path(r.path.ases)}  ({r.compliant}/{len(r.path) - 1} compliant{flags})", file=out)
        for hop, v in zip(r.path.hops[1:], r.verdicts[1:]):
            mark = "  !" if v.status.value != "Compliant" else ""
            print(f"      {str(hop.as_id):>10}  {v}{mark}", file=out)
        print(f"      indices {r.indices}", file=out)
    return EXIT_OK


ANY_POLICY = "const m: M = 1\nmanu(r) = m or not manu(r) = m\n"


def _parse_fault(text: str) -> Fault:
    parts = text.split(":")
    if len(parts) not in (2, 3) or parts[0] not in FAULT_KINDS:
        raise UsageError(f"--fault expects KIND:AS[:OFFSET] with KIND in {', '.join(FAULT_KINDS)}")
    try:
        return Fault(parts[0], AsId.parse(parts[1]), int(parts[2]) if len(parts) == 3 else 1)
    except ValueError as e:
        raise UsageError(f"--fault: {e}") from None


def cmd_send(args, out) -> int:
    faults = [_parse_fault(f) for f in args.fault]
    net = _network(args)
    path = None
    indices = None
    if args.pref:
        pref = _policy(args.pref)
        paths = net.paths(args.src, args.dst)
        if not paths:
            raise SimulationError(f"no paths from {args.src} to {args.dst}")
        best = filter_paths(paths, pref, net.topo.trusted(), net.node(args.src).service.resolver,
                            ContainmentCache(ContainmentBounds(k=args.k)))[0]
        path = best.path
        indices = (0, *best.indices)
    for f in faults:
        inject_fault(net, f)
    if faults:
        rep = run_send(net, args.src, args.dst, indices, args.count, args.interval_ms, path)
        w = _writer(out) if args.format == "csv" else None
        if w:
            w.writerow(["seq", "delivered", "validation", "drop", "where"])
        for r in rep.results:
            val = "" if r.validation is None else type(r.validation).__name__
            if isinstance(getattr(r.validation, "hops", None), tuple):
                val += str(list(r.validation.hops))
            if w:
                w.writerow([r.seq, int(r.delivered), val, r.drop or "", r.where or ""])
            else:
                state = f"delivered, {val}" if r.delivered else f"dropped at {r.where} ({r.drop})"
                print(f"seq {r.seq}: {state}", file=out)
        return EXIT_OK
    sc = RttScenario(
        args.src, args.dst, index=max(indices) if indices else args.index, policy_as=args.policy_as, count=args.count,
        interval_ms=args.interval_ms, path=path.ases if path else None,
        indices=indices,
    )
    samples = run_rtt_experiment(net, sc)
    if args.format == "csv":
        out.write(samples_csv(samples))
    else:
        rtts = [s.rtt_ms for s in samples]
        print(f"path {_fmt_path(path.ases) if path else f'{args.src} .. {args.dst}'}", file=out)
        label = f"indices {list(indices)}" if indices else f"index {args.index}"
        print(f"{len(rtts)} probes, {label}: mean {statistics.fmean(rtts):.2f} ms, "
              f"median {statistics.median(rtts):.2f} ms, min {min(rtts):.2f} ms, max {max(rtts):.2f} ms",
              file=out)
    return EXIT_OK


def cmd_policy_check(args, out) -> int:
    if not args.policy or not args.pref:
        raise UsageError("policy-check needs --policy and --pref")
    p = _policy(args.policy)
    q = _policy(args.pref)
    try:
        res = check_containment(p, q, ContainmentBounds(k=args.k))
    except ValueError as e:
        raise UsageError(str(e)) from None
    if args.k == 0:
        print(K0_CAVEAT, file=sys.stderr)
    if args.format == "csv":
        w = _writer(out)
        w.writerow(["verdict", "method", "explored", "witness"])
        w.writerow([res.verdict.value, res.method, res.explored,
                    res.witness.describe().replace("\n", " ") if res.witness else ""])
        return EXIT_OK
    if res.verdict is Verdict.NOT_CONTAINED:
        print("NotContained", file=out)
        print(res.witness.describe(), file=out)
    elif res.verdict is Verdict.UNKNOWN:
        print(f"Unknown(budget): gave up after {res.explored} setups", file=out)
    else:
        print("Contained", file=out)
    return EXIT_OK


def cmd_sizes(args, out) -> int:
    s = section_sizes(args.ifif, args.ifip, args.indices, args.dmap)
    rows = [
        ("header", 0, s.header),
        ("IF-IF", args.ifif, s.ifif),
        ("IF-IP", args.ifip, s.ifip),
        ("D", args.dmap, s.dmap),
        ("detached-marker", 1, DETACHED_MARKER_LEN),
    ]
    if args.format == "csv":
        w = _writer(out)
        w.writerow(["section", "entries", "bytes"])
        w.writerows(rows)
    else:
        for name, n, b in rows:
            print(f"{name:<16} {n:>6} entries {b:>8} B", file=out)
    return EXIT_OK


def cmd_bench(args, out) -> int:
    rep = run_microbench(args.component)
    if args.format == "csv":
        w = _writer(out)
        w.writerow(["component", rep.param_name, "ns_per_op", "ops_per_sec"])
        for r in rep.rows:
            w.writerow([rep.component, r.param, f"{r.ns_per_op:.1f}", f"{r.ops_per_sec:.1f}"])
    else:
        for r in rep.rows:
            print(f"{rep.component} {rep.param_name}={r.param}: {r.ns_per_op:,.0f} ns/op "
                  f"({r.ops_per_sec:,.0f} ops/s)", file=out)
        if rep.fit:
            print(f"linear fit: slope {rep.fit['slope']:.0f} ns/hop, R^2 {rep.fit['r2']:.4f}", file=out)
    return EXIT_OK


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--topology", help="topology YAML file")
    common.add_argument("--seed", type=lambda s: int(s, 0), help="overrides FABRID_SEED and the file's seed")
    common.add_argument("--format", choices=("text", "csv"), default="text")
    common.add_argument("--k", type=int, default=2, help="software-stack bound for containment checks")

    ap = argparse.ArgumentParser(prog="fabrid", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    b = sub.add_parser("beacon", parents=[common], help="run beaconing and list stored segments")
    b.add_argument("--rounds", type=int, default=1)
    b.set_defaults(fn=cmd_beacon)

    p = sub.add_parser("paths", parents=[common], help="ranked paths with per-AS verdicts")
    p.add_argument("src", type=_as)
    p.add_argument("dst", type=_as)
    p.add_argument("--pref", help="preference policy file")
    p.add_argument("--trust", help="trusted AS list, one per line")
    p.set_defaults(fn=cmd_paths)

    s = sub.add_parser("send", parents=[common], help="echo probes (RTT) or one-way traffic with faults")
    s.add_argument("src", type=_as)
    s.add_argument("dst", type=_as)
    s.add_argument("--index", type=int, default=0)
    s.add_argument("--policy-as", type=_as, help="request --index only at this AS")
    s.add_argument("--pref", help="pick the best path and indices for this preference policy")
    s.add_argument("--count", type=int, default=60)
    s.add_argument("--interval-ms", type=float, default=1000.0)
    s.add_argument("--fault", action="append", default=[], metavar="KIND:AS[:OFFSET]")
    s.set_defaults(fn=cmd_send)

    c = sub.add_parser("policy-check", parents=[common], help="does --policy imply --pref?")
    c.add_argument("--policy", help="path policy file")
    c.add_argument("--pref", help="preference policy file")
    c.set_defaults(fn=cmd_policy_check)

    z = sub.add_parser("sizes", parents=[common], help="encoded policy-map sizes")
    z.add_argument("--ifif", type=int, default=500)
    z.add_argument("--ifip", type=int, default=100)
    z.add_argument("--dmap", type=int, default=100)
    z.add_argument("--indices", type=int, default=5, help="indices per pair")
    z.set_defaults(fn=cmd_sizes)

    m = sub.add_parser("bench", parents=[common], help="micro-benchmarks")
    m.add_argument("component", choices=COMPONENTS)
    m.set_defaults(fn=cmd_bench)
    return ap


def main(argv: Sequence[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args, out)
    except (UsageError, ConfigError, PolicyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (SimulationError, UnknownAs) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
