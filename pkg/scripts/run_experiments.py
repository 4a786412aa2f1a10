"""Run every named experiment with its default settings and write reports.

usage: python scripts/run_experiments.py [--seed S] [--out DIR] [--workers N] [name ...]
"""

import argparse
import sys
import time

from fbmdim.experiments import EXPERIMENTS, emit_report, make_config, run, summary_text


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("names", nargs="*", default=sorted(EXPERIMENTS))
    ap.add_argument("--seed", type=int, default=20240601)
    ap.add_argument("--out", default="results")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    status = 0
    for name in args.names:
        t0 = time.perf_counter()
        result = run(make_config(name, args.seed, workers=args.workers))
        emit_report(result, args.out)
        sys.stdout.write(summary_text(result))
        print(f"elapsed: {time.perf_counter() - t0:.1f}s\n")
        status |= not result.passed
    return status


if __name__ == "__main__":
    sys.exit(main())
