"""Encoded policy-map size as each section grows, as CSV on stdout."""
from __future__ import annotations

import argparse
from dataclasses import dataclass

from fabrid.addr import AsId
from fabrid.control_plane import DETACHED_MARKER_LEN, encode_maps, section_sizes, synthetic_maps


@dataclass
class SweepConfig:
    max_entries: int = 1000
    step: int = 100
    per_pair: int = 5


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--max-entries", type=int, default=SweepConfig.max_entries)
    ap.add_argument("--step", type=int, default=SweepConfig.step)
    ap.add_argument("--per-pair", type=int, default=SweepConfig.per_pair)
    a = ap.parse_args()
    cfg = SweepConfig(a.max_entries, a.step, a.per_pair)
    print("entries,ifif_bytes,ifip_bytes,dmap_bytes,full_ifif_encoding,detached_marker")
    owner = AsId(1, 1)
    for n in range(0, cfg.max_entries + 1, cfg.step):
        s = section_sizes(ifif=n, ifip=n, per_pair=cfg.per_pair, dmap=n)
        full = len(encode_maps(synthetic_maps(owner, ifif=n, per_pair=cfg.per_pair)))
        print(f"{n},{s.ifif},{s.ifip},{s.dmap},{full},{DETACHED_MARKER_LEN}")


if __name__ == "__main__":
    main()
