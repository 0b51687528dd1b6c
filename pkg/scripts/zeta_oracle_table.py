"""Pipeline zeta_O(s) against ideal-count partial sums and their tail bounds.

    python3 scripts/zeta_oracle_table.py --s 1.5 2 3
"""

import argparse

from kron.global_ext import load_fixture
from kron.lfunc import oracle_zeta_check

DEGREES = {"rational_q3": 5, "kummer_sqrt_t": 4, "constant_f4": 6, "real_quadratic": 4}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--s", type=float, nargs="+", default=[2.0, 3.0])
    ap.add_argument("--fixtures", nargs="+", default=list(DEGREES))
    args = ap.parse_args()
    print(f"{'fixture':16} {'s':>5} {'pipeline':>18} {'partial sum':>18} {'tail bound':>11}  ok")
    for name in args.fixtures:
        ext = load_fixture(name)
        for s in args.s:
            row = oracle_zeta_check(ext, s, DEGREES.get(name, 3))
            print(f"{name:16} {s:5.2f} {row['pipeline']:18.14f} {row['partial_sum']:18.14f} "
                  f"{row['tail_bound']:11.3e}  {row['within']}")


if __name__ == "__main__":
    main()
