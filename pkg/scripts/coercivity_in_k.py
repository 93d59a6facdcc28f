"""Smallest generalized eigenvalue of the second variation as the trial space grows.

    python3 scripts/coercivity_in_k.py --config configs/curved_matched.yaml --modes 4 8 16 32

Writes a CSV (K, nx, ny, eigenvalue) to stdout.
"""

import argparse

from fbstab.cli import RunConfig, build_scenario
from fbstab.variation import coercivity_constant


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", required=True)
    ap.add_argument("--modes", type=int, nargs="+", default=[4, 8, 16, 32])
    ap.add_argument("--grids", type=int, nargs="+", default=[128, 256],
                    help="values of nx; ny = nx / 2")
    args = ap.parse_args()
    base = RunConfig.load(args.config)
    print("K,nx,ny,eigenvalue")
    for nx in args.grids:
        sc = build_scenario(base.override(nx=nx, ny=nx // 2, K=(nx // 2 - 1) // 2))
        modes = [K for K in args.modes if 2 * K + 1 <= nx // 2]
        for K in modes:
            est = coercivity_constant(sc, K)
            print(f"{K},{nx},{nx // 2},{est.eigenvalue:.17g}")


if __name__ == "__main__":
    main()
