"""Agnostic vs label-aware kernel regression on a synthetic task, several seeds.

    python scripts/benchmark.py --generator shells --d 5 --seeds 10
"""

import argparse

from lantk import experiments as ex


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--generator", default="shells")
    ap.add_argument("--d", type=int, default=5)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--estimators", nargs="+", default=["fjlt_v1", "kr_v1", "oracle"])
    ap.add_argument("--n-train", type=int, default=500)
    args = ap.parse_args()
    sizes = ex.BenchmarkSizes(args.n_train, 200, 1000)
    print("seed  kernel            lam     val    test")
    for s in range(args.seeds):
        for r in ex.benchmark({"generator": args.generator, "d": args.d}, s, sizes, estimators=tuple(args.estimators)):
            lam = "-" if r["lam"] is None else f"{r['lam']:g}"
            print(f"{s:<5} {r['kernel']:<17} {lam:<7} {r['val_acc']:.3f}  {r['test_acc']:.3f}")


if __name__ == "__main__":
    main()
