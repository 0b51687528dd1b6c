"""Exact checks of both one-variable limit formulas over a random battery.

    python3 scripts/limit_formula_battery.py --size 500 --seed 7
"""

import argparse
import random
import time
from collections import Counter

from kron.acceptance import battery, random_module, random_norm, shift_in_dual
from kron.eisenstein_one import limit_check_first, limit_check_second


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    start = time.perf_counter()
    first = Counter()
    for q, r, Y, nu, a in battery(args.seed, args.size):
        first[(q, r, limit_check_first(Y, nu, a).equal)] += 1
    t1 = time.perf_counter() - start

    rng = random.Random(args.seed + 1)
    second = Counter()
    start = time.perf_counter()
    for _ in range(args.size):
        q, r = rng.choice((2, 3, 4)), rng.choice((1, 2, 3))
        Y = random_module(rng, q, r)
        rep = limit_check_second(Y, random_norm(rng, q, r), shift_in_dual(rng, Y))
        second[(q, r, rep.equal and rep.details["value_at_0"].is_zero())] += 1
    t2 = time.perf_counter() - start

    for name, counts, secs in (("first", first, t1), ("second", second, t2)):
        bad = sum(v for (_, _, ok), v in counts.items() if not ok)
        print(f"{name} formula: {args.size} cases, {bad} failures, {secs:.1f} s")
        for (q, r, ok), v in sorted(counts.items()):
            print(f"  q={q} r={r} {'ok' if ok else 'FAIL'}: {v}")


if __name__ == "__main__":
    main()
