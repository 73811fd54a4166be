"""DQA of the multi-query attack on the N-N dilution, for several (N, k) and p."""

import argparse

from qpqsim import analysis


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--runs", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--large", action="store_true", help="include N=10^4 (slow)")
    ap.add_argument("--csv", help="write rows here as CSV")
    args = ap.parse_args()
    sizes = analysis.TABLE1_SIZES if args.large else analysis.TABLE1_SIZES[:2]
    rows = analysis.table1(args.runs, args.seed, sizes, jobs=args.jobs)
    print(analysis.to_text(rows), end="")
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(analysis.to_csv(rows))


if __name__ == "__main__":
    main()
