"""Packet construction, router processing and containment timings on this machine."""
from __future__ import annotations

import argparse

from fabrid.sim import COMPONENTS, run_microbench


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("components", nargs="*", choices=COMPONENTS, default=list(COMPONENTS))
    a = ap.parse_args()
    for comp in a.components:
        rep = run_microbench(comp)
        print(f"{comp} (by {rep.param_name})")
        for row in rep.rows:
            print(f"  {row.param:>6}  {row.ns_per_op / 1000:10.2f} us/op  {row.ops_per_sec:12.0f} ops/s")
        if rep.fit:
            print(f"  linear fit: {rep.fit['slope'] / 1000:.2f} us per {rep.param_name[:-1]}, "
                  f"intercept {rep.fit['intercept'] / 1000:.2f} us, R^2 {rep.fit['r2']:.4f}")


if __name__ == "__main__":
    main()
