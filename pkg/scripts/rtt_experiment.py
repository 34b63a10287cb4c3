"""Echo-probe RTTs over the five-AS calibration topology, index 0 against index 1.

    python3 scripts/rtt_experiment.py --seeds 20 --count 60 --csv rtt.csv
"""
from __future__ import annotations

import argparse
import csv
import statistics
from dataclasses import dataclass
from pathlib import Path

import yaml

from fabrid.addr import AsId
from fabrid.sim import Network, RttScenario, run_beaconing, run_rtt_experiment, topology_from_dict

ROOT = Path(__file__).resolve().parents[1]


@dataclass
class RttConfig:
    topology: Path = ROOT / "configs" / "rtt.yaml"
    src: str = "1-10"
    dst: str = "1-14"
    policy_as: str = "1-12"
    seeds: int = 20
    count: int = 60
    interval_ms: float = 1000.0
    csv: Path | None = None


def run(cfg: RttConfig) -> list[tuple[int, int, float]]:
    base = yaml.safe_load(cfg.topology.read_text())
    src, dst, pas = AsId.parse(cfg.src), AsId.parse(cfg.dst), AsId.parse(cfg.policy_as)
    rows = []
    for seed in range(cfg.seeds):
        net = Network(topology_from_dict(base, seed))
        run_beaconing(net)
        for index in (0, 1):
            sc = RttScenario(src, dst, index=index, policy_as=pas if index else None,
                             count=cfg.count, interval_ms=cfg.interval_ms)
            rows += [(seed, index, s.rtt_ms) for s in run_rtt_experiment(net, sc)]
    return rows


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--topology", type=Path, default=RttConfig.topology)
    ap.add_argument("--seeds", type=int, default=RttConfig.seeds)
    ap.add_argument("--count", type=int, default=RttConfig.count)
    ap.add_argument("--csv", type=Path)
    a = ap.parse_args()
    cfg = RttConfig(topology=a.topology, seeds=a.seeds, count=a.count, csv=a.csv)
    rows = run(cfg)
    for index in (0, 1):
        per_seed = [statistics.mean(r for s, i, r in rows if i == index and s == seed) for seed in range(cfg.seeds)]
        allv = [r for _, i, r in rows if i == index]
        print(f"index {index}: mean {statistics.mean(allv):7.2f} ms  median {statistics.median(allv):7.2f} ms  "
              f"seed means {min(per_seed):.2f}..{max(per_seed):.2f} ms")
    if cfg.csv:
        with cfg.csv.open("w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["seed", "index", "rtt_ms"])
            w.writerows((s, i, f"{r:.3f}") for s, i, r in rows)
        print(f"wrote {len(rows)} samples to {cfg.csv}")


if __name__ == "__main__":
    main()
