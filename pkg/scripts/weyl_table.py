"""Eigenvalue counting functions of both operators and their fitted exponents."""

from __future__ import annotations

import argparse

from subframe.pipeline import weyl_rows
from subframe.spectral import weyl_slope


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--log2-min", type=int, default=4)
    ap.add_argument("--log2-max", type=int, default=12)
    args = ap.parse_args()
    rows = list(weyl_rows(args.log2_min, args.log2_max))
    for w, ne, ns in rows:
        print(f"omega={w:10.1f} elliptic={ne:8d} sub={ns:8d}")
    ws = [r[0] for r in rows]
    print(f"slope elliptic={weyl_slope('elliptic', ws):.4f} sub={weyl_slope('sub', ws):.4f}")


if __name__ == "__main__":
    main()
