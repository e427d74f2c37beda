"""Relative ratio of intra- to inter-class normalized similarity for several kernel sources.

    python scripts/elasticity.py --seeds 10
"""

import argparse

from lantk import experiments as ex


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--width", type=int, default=64)
    args = ap.parse_args()
    setup = ex.ElasticitySetup(width=args.width)
    print("seed  source              train-train  test-train")
    for s in range(args.seeds):
        for src, by_mode in ex.elasticity(s, setup)["reports"].items():
            print(f"{s:<5} {src:<19} {by_mode['train-train'].rr:.4f}       {by_mode['test-train'].rr:.4f}")


if __name__ == "__main__":
    main()
