"""Run acceptance criteria 1-9 plus the precision check, with wall-clock timings.

    python3 scripts/run_acceptance.py [--quick] [--out results/acceptance.json]
"""

import argparse
import json
import time
from pathlib import Path

from kron import acceptance


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--quick", action="store_true")
    ap.add_argument("--out", type=Path)
    args = ap.parse_args()
    scale = 4 if args.quick else 1
    jobs = [
        ("1+2", lambda: acceptance.criterion_1_2(1, 200 // scale)),
        ("3", lambda: acceptance.criterion_3(3, 100 // scale)),
        ("4", lambda: acceptance.criterion_4(4, 100 // scale)),
        ("5", acceptance.criterion_5),
        ("6", acceptance.criterion_6),
        ("7", acceptance.criterion_7),
        ("8", acceptance.criterion_8),
        ("9", acceptance.criterion_9),
        ("10", acceptance.precision_monotonicity),
    ]
    rows = []
    for label, job in jobs:
        start = time.perf_counter()
        out = job()
        elapsed = time.perf_counter() - start
        for res in out if isinstance(out, tuple) else (out,):
            print(f"{res.line()}  ({elapsed:.1f} s)")
            rows.append(dict(res.to_json(), seconds=round(elapsed, 2)))
    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(json.dumps(rows, indent=2, sort_keys=True, default=str))


if __name__ == "__main__":
    main()
