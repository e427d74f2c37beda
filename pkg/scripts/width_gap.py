"""Gap between trained-net K2 and the integrated truncated hierarchy as width grows.

    python scripts/width_gap.py --seeds 10 --widths 256 1024 4096
"""

import argparse

import numpy as np

from lantk import experiments as ex


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--widths", type=int, nargs="+", default=[256, 1024, 4096])
    args = ap.parse_args()
    print("width  median gap  median drift")
    for m in args.widths:
        runs = [ex.width_gap(s, m) for s in range(args.seeds)]
        print(f"{m:<6} {np.median([r['gap'] for r in runs]):.3e}   {np.median([r['drift'] for r in runs]):.3e}")


if __name__ == "__main__":
    main()
