"""Intra- vs inter-class label-aware component of the infinite-time hierarchy kernel.

    python scripts/nth_probe.py --seeds 10
"""

import argparse

from lantk import experiments as ex


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--orthant", choices=["mc", "quadrature"], default="mc")
    args = ap.parse_args()
    print("seed  intra mean  inter mean")
    for s in range(args.seeds):
        r = ex.nth_probe(s, orthant=args.orthant)
        print(f"{s:<5} {r['intra_mean']:>10.4f}  {r['inter_mean']:>10.4f}")


if __name__ == "__main__":
    main()
