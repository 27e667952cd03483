#!/usr/bin/env python3
"""Run every reference problem and print one line per case.

Exit status 3 if any case misses its tolerance.
"""

import argparse
import sys
import time

from ebmlbm.benchmarks import BENCHES


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("names", nargs="*", help=f"subset of {', '.join(sorted(BENCHES))} (default: all)")
    args = ap.parse_args()
    unknown = set(args.names) - set(BENCHES)
    if unknown:
        ap.error(f"unknown benchmark(s): {', '.join(sorted(unknown))}")
    ok = True
    for name in args.names or sorted(BENCHES):
        t0 = time.perf_counter()
        for res in BENCHES[name]():
            print(f"{res.line()}  [{time.perf_counter() - t0:.0f} s]", flush=True)
            ok &= res.passed
    return 0 if ok else 3


if __name__ == "__main__":
    sys.exit(main())
