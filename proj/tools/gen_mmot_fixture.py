#!/usr/bin/env python3
"""Regenerate tests/fixtures/mmot_oracle.json.

Each instance is the multi-marginal transport LP over symmetric plans on
N-subsets of distinct sites, solved with SciPy's HiGHS backend:

    minimize   sum_S w_S cost(S)        cost(S) = sum_{i != j in S} |x_i - x_j|^{-s}
    subject to sum_{S containing a} w_S = N mu_a   for every site a,  w >= 0.

Usage: python3 tools/gen_mmot_fixture.py [--acceptance] [--out PATH] [--count 200] [--seed 7]

The default mix (N in {2, 3, 4}) feeds the unit tests; --acceptance writes
tests/fixtures/mmot_acceptance.json with N in {2, 3} and m^N <= 10^5.
"""

import argparse
import itertools
import json
import pathlib

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import coo_matrix


def solve(sites, weights, s, N):
    m = len(weights)
    subsets = list(itertools.combinations(range(m), N))
    cost = np.empty(len(subsets))
    rows, cols = [], []
    for c, S in enumerate(subsets):
        pts = sites[list(S)]
        diff = pts[:, None, :] - pts[None, :, :]
        r = np.sqrt((diff**2).sum(axis=-1))
        iu = np.triu_indices(N, 1)
        cost[c] = 2.0 * np.sum(r[iu] ** (-s))
        rows.extend(S)
        cols.extend([c] * N)
    A = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(m, len(subsets))).tocsr()
    res = linprog(cost, A_eq=A, b_eq=N * weights, bounds=(0, None), method="highs",
                  options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10})
    if res.status != 0:
        raise RuntimeError(res.message)
    return float(res.fun)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--acceptance", action="store_true")
    ap.add_argument("--out")
    ap.add_argument("--count", type=int, default=200)
    ap.add_argument("--seed", type=int)
    args = ap.parse_args()
    fixtures = pathlib.Path(__file__).resolve().parents[1] / "tests/fixtures"
    if args.out is None:
        args.out = str(fixtures / ("mmot_acceptance.json" if args.acceptance else "mmot_oracle.json"))
    if args.seed is None:
        args.seed = 11 if args.acceptance else 7

    rng = np.random.default_rng(args.seed)
    instances = []
    while len(instances) < args.count:
        if args.acceptance:
            N = int(rng.choice([2, 3]))
            d = int(rng.integers(1, 4))
            m = {2: int(rng.integers(3, 121)), 3: int(rng.integers(4, 47))}[N]
        else:
            N = int(rng.choice([2, 2, 3, 4]))
            d = int(rng.integers(1, 4))
            m = {2: int(rng.integers(4, 121)), 3: int(rng.integers(6, 47)), 4: int(rng.integers(8, 21))}[N]
        s = float(rng.uniform(0.1, min(d, 2.5) - 0.05))
        sites = rng.uniform(0.0, 1.0, size=(m, d))
        weights = rng.uniform(0.2, 1.0, size=m)
        weights /= weights.sum()
        if N * weights.max() > 1.0:
            continue
        instances.append({
            "d": d, "s": s, "N": N,
            "sites": sites.ravel().tolist(),
            "weights": weights.tolist(),
            "cost": solve(sites, weights, s, N),
        })
    meta = {"generator": "tools/gen_mmot_fixture.py", "solver": "scipy.optimize.linprog(method='highs')",
            "seed": args.seed, "instances": instances}
    pathlib.Path(args.out).write_text(json.dumps(meta, indent=1) + "\n")
    print(f"wrote {len(instances)} instances to {args.out}")


if __name__ == "__main__":
    main()
