"""Torus-integral side against the direct lattice sum over a grid of s.

    python3 scripts/integral_representation_scan.py real_quadratic --s 1.25 1.5 2 3
"""

import argparse

from kron.eisenstein_multi import integral_representation, multi_eisenstein_numeric, rhs_normalized
from kron.global_ext import load_fixture


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("fixture", nargs="?", default="real_quadratic")
    ap.add_argument("--s", type=float, nargs="+", default=[1.25, 1.5, 2.0, 3.0])
    args = ap.parse_args()
    ext = load_fixture(args.fixture)
    print(f"{'s':>5} {'integral':>20} {'direct':>20} {'difference':>11} {'quad err':>10}")
    for s in args.s:
        lhs, err = integral_representation(ext, None, None, s)
        rhs = rhs_normalized(ext, multi_eisenstein_numeric(ext, None, None, s, 1e-13), s)
        print(f"{s:5.2f} {lhs:20.15f} {rhs:20.15f} {abs(lhs - rhs):11.2e} {err:10.1e}")


if __name__ == "__main__":
    main()
