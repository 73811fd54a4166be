"""Key error rate with and without the error-corrected post-processing, over e."""

import argparse

import numpy as np

from qpqsim import analysis


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--e-max", type=float, default=0.5)
    ap.add_argument("--steps", type=int, default=50)
    ap.add_argument("--g", type=int, default=6)
    args = ap.parse_args()
    grid = np.linspace(0, args.e_max, args.steps + 1)
    rows = analysis.fig5_curves(grid, args.g)
    # the decoder-exact law for comparison
    for r in rows:
        r["fok_exact"] = analysis.fok_error_exact(r["e"], args.g)
    print(analysis.to_csv(rows), end="")


if __name__ == "__main__":
    main()
