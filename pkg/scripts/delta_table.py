"""Tabulate delta against spill counts and mark where it behaves as a deviation function.

    python scripts/delta_table.py --sizes 9 1 1
    python scripts/delta_table.py --sizes 6 4
"""

import argparse

from cluster_guard.delta import (
    SpillSpec2Way,
    SpillSpec3Way,
    delta,
    delta_2way_closed,
    delta_3way_closed,
    deviation_valid_range,
)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", type=int, nargs="+", default=[9, 1, 1], help="two or three block sizes")
    args = ap.parse_args()

    if len(args.sizes) == 2:
        n1, n2 = args.sizes
        print(f"{'s':>3} {'delta':>6}  valid")
        for s in range(n1 + 1):
            spec = SpillSpec2Way(n1, n2, s)
            assert delta(*spec.partitions()) == delta_2way_closed(spec)
            print(f"{s:>3} {delta_2way_closed(spec):>6}  {deviation_valid_range(spec)}")
        return

    n1, n2, n3 = args.sizes
    print(f"{'s1':>3} {'s2':>3} {'delta':>6}  valid")
    for s1 in range(n1 + 1):
        for s2 in range(n1 - s1 + 1):
            spec = SpillSpec3Way(n1, n2, n3, s1, s2)
            assert delta(*spec.partitions()) == delta_3way_closed(spec)
            print(f"{s1:>3} {s2:>3} {delta_3way_closed(spec):>6}  {deviation_valid_range(spec)}")


if __name__ == "__main__":
    main()
