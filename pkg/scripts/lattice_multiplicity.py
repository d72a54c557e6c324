"""Separation, covering radius and ball multiplicity of r-lattices across mesh levels."""

from __future__ import annotations

import argparse

from subframe.geometry import build_mesh
from subframe.lattice import build_lattice, verify_lattice


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--metric", choices=["cc", "riemann"], default="cc")
    ap.add_argument("--r", type=float, nargs="+", default=[0.6, 0.3])
    ap.add_argument("--levels", type=int, nargs="+", default=[5, 6])
    args = ap.parse_args()
    for level in args.levels:
        mesh = build_mesh(level)
        for r in args.r:
            rep = verify_lattice(build_lattice(mesh, args.metric, r))
            print(f"L{level} r={r:g} n={rep.size} sep/r={rep.min_separation / r:.3f} "
                  f"cover/r={rep.covering_radius / r:.3f} mult={rep.multiplicity}")


if __name__ == "__main__":
    main()
