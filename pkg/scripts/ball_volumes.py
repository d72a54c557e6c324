"""Log-log slopes of CC ball volumes at the pole and on the equator."""

from __future__ import annotations

import argparse
import math

import numpy as np

from subframe.geometry import refined_ball_volume, volume_slope


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rmin", type=float, default=0.05)
    ap.add_argument("--rmax", type=float, default=0.4)
    ap.add_argument("--n", type=int, default=8)
    args = ap.parse_args()
    radii = np.geomspace(args.rmin, args.rmax, args.n)
    for name, lat in (("pole", math.pi / 2), ("equator", 0.0)):
        vols = [refined_ball_volume(lat, float(r)) for r in radii]
        for r, v in zip(radii, vols):
            print(f"{name:8s} r={r:.4f} |B|={v:.6e}")
        print(f"{name:8s} slope={volume_slope(radii, vols):.3f}")


if __name__ == "__main__":
    main()
