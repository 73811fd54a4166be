"""Known bits a dishonest Alice keeps after shift-adding g MOKs, for g = 1..g_max."""

import argparse

from qpqsim import analysis
from qpqsim.keys import SimParams


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=100_000)
    ap.add_argument("--p", type=float, default=0.25)
    ap.add_argument("--g-max", type=int, default=12)
    ap.add_argument("--runs", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--rule", choices=["exact", "threshold"], default="threshold")
    args = ap.parse_args()
    params = SimParams(N=args.n, k=7, p=args.p, seed=args.seed)
    rows = analysis.table2(params, range(1, args.g_max + 1), args.runs, args.rule)
    print(f"# N*p2 = {args.n * analysis.p2(args.p):.2f}, N*p2 (unique decode) = {args.n * analysis.p2_exact(args.p):.2f}")
    print(analysis.to_text(rows), end="")


if __name__ == "__main__":
    main()
