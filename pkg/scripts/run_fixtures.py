"""Run every worked-example fixture and print a PASS/FAIL table."""

import argparse
import sys

from phifam.fixtures import FIXTURES, run_fixture


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--panels", type=int, default=None, help="quadrature panels per unit of the mapped interval")
    args = parser.parse_args()
    failed = 0
    for name in FIXTURES:
        print(f"== {name}")
        for row in run_fixture(name, args.panels):
            mark = "PASS" if row.passed else "FAIL"
            failed += not row.passed
            print(f"  {mark}  {row.name:<55} {row.value:>18.12g}  (expected {row.expected:.12g}, tol {row.tol:.0e})")
    print(f"{failed} failing checks")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
