"""Rank attack on random rM-N instances: queries used against rank and rM."""

import argparse
from math import comb

import numpy as np

from qpqsim.attack_rm import run_rank_attack
from qpqsim.keys import SimParams, make_rng
from qpqsim.protocol import random_database


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--instances", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--no-shortcut", action="store_true")
    args = ap.parse_args()
    print("M,k,r,N,rank,queries,exact")
    ok = 0
    for i in range(args.instances):
        rng = make_rng(args.seed, i)
        m = int(rng.integers(2, 11))
        k = int(rng.integers(1, min(4, m) + 1))
        r = int(rng.integers(1, 4))
        n = int(rng.integers(1, comb(m, k) + 1))
        p = min(1.0, max(0.25, (3 / n) ** (1 / (k * r))))
        params = SimParams(N=n, M=m, k=k, r=r, p=p)
        db = random_database(n, rng)
        res = run_rank_attack(params, db, rng, shortcut=not args.no_shortcut)
        exact = bool(np.array_equal(res.recovered, db))
        ok += exact and res.queries_used <= res.rank
        print(f"{m},{k},{r},{n},{res.rank},{res.queries_used},{int(exact)}")
    print(f"# {ok}/{args.instances} recovered within rank(G) queries")


if __name__ == "__main__":
    main()
