"""Run the numbered exit criteria and write the results to a CSV.

Usage: python scripts/run_acceptance.py [--criteria 1,4,6] [--seed 1] [--out results]
"""

import argparse
import sys
import time
from pathlib import Path

from svlab import io, verification


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--criteria", help="comma-separated subset (default: all)")
    ap.add_argument("--seed", type=int, default=verification.DEFAULT_SEED)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--out", default="results")
    args = ap.parse_args()
    which = {int(c) for c in args.criteria.split(",")} if args.criteria else None

    checks = []
    for n in sorted(verification.CRITERIA):
        if which is not None and n not in which:
            continue
        started = time.perf_counter()
        batch = verification.run_acceptance(args.seed, args.threads, {n})
        ok = all(c.passed for c in batch)
        print(f"{'PASS' if ok else 'FAIL'} criterion {n} ({time.perf_counter() - started:.1f} s)")
        for c in batch:
            print("    " + c.line())
        checks += batch

    man = io.RunManifest("run_acceptance", None, {"criteria": args.criteria or "all"}, args.seed)
    path = io.write_csv(Path(args.out) / "acceptance.csv", verification.CHECK_COLUMNS,
                        (c.row() for c in checks), man)
    print(f"{sum(c.passed for c in checks)}/{len(checks)} checks passed -> {path}")
    return 0 if all(c.passed for c in checks) else 3


if __name__ == "__main__":
    sys.exit(main())
