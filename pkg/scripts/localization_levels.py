"""Empirical localization constant of each frame level."""

from __future__ import annotations

import argparse
import time

from subframe.frame import build_frame, localization_report
from subframe.geometry import build_mesh


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--J", type=int, default=1)
    ap.add_argument("--N", type=float, default=5.0)
    ap.add_argument("--mesh-level", type=int, default=6)
    args = ap.parse_args()
    t0 = time.perf_counter()
    frame = build_frame(args.J, "cc")
    print(f"frame J={args.J} built in {time.perf_counter() - t0:.1f}s")
    mesh = build_mesh(args.mesh_level)
    for lev in frame.levels[1:]:
        rep = localization_report(lev, args.N, mesh=mesh)
        print(f"j={lev.j} atoms={lev.size} C_emp={rep.C_emp:.4f}")


if __name__ == "__main__":
    main()
