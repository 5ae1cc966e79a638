"""Upper constant of cc_upper(0, x) / ||x|| over random unit-norm points."""

import argparse

from carnot.algebra import preset
from carnot.metric import estimate_norm_equivalence


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--samples", type=int, default=16)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    for name, param in (("abelian", 3), ("heisenberg", 1), ("engel", None)):
        alg = preset(name, param)
        r = estimate_norm_equivalence(args.samples, alg, seed=args.seed)
        print(f"{alg.name:<16} max {r.max_ratio:.4f}  mean {r.mean_ratio:.4f}")


if __name__ == "__main__":
    main()
