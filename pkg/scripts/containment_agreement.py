"""Fast-path containment against brute-force enumeration on random conjunctive pairs."""
from __future__ import annotations

import argparse
import random
import sys
import time
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from policy_gen import random_pair  # noqa: E402

from fabrid.policy import ContainmentBounds, enumerate_containment, homomorphism_containment  # noqa: E402


@dataclass
class AgreementConfig:
    pairs: int = 1000
    max_k: int = 3
    seed: int = 5


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--pairs", type=int, default=AgreementConfig.pairs)
    ap.add_argument("--max-k", type=int, default=AgreementConfig.max_k)
    ap.add_argument("--seed", type=int, default=AgreementConfig.seed)
    a = ap.parse_args()
    cfg = AgreementConfig(a.pairs, a.max_k, a.seed)
    rng = random.Random(cfg.seed)
    verdicts: Counter = Counter()
    fast_s = slow_s = 0.0
    mismatches = []
    for i in range(cfg.pairs):
        p, q, ta, tb = random_pair(rng)
        b = ContainmentBounds(k=1 + i % cfg.max_k)
        t0 = time.perf_counter()
        fast = homomorphism_containment(p, q, b)
        t1 = time.perf_counter()
        slow = enumerate_containment(p, q, b)
        t2 = time.perf_counter()
        fast_s += t1 - t0
        slow_s += t2 - t1
        verdicts[slow.verdict.name] += 1
        if fast.verdict is not slow.verdict:
            mismatches.append((b.k, ta, tb))
    print(f"{cfg.pairs} pairs, k in 1..{cfg.max_k}: {len(mismatches)} disagreements; verdicts {dict(verdicts)}")
    print(f"fast path {fast_s * 1000 / cfg.pairs:.3f} ms/pair, enumeration {slow_s * 1000 / cfg.pairs:.3f} ms/pair")
    for k, ta, tb in mismatches[:5]:
        print(f"--- k={k}\n{ta}\n  vs\n{tb}")
    sys.exit(1 if mismatches else 0)


if __name__ == "__main__":
    main()
