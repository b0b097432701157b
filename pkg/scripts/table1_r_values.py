"""Regenerate the table of contraction factors r for N in {30, 300, 1000}
and radius in {0.3, 0.6, 0.9}, with the optimal constant-weight design."""
import argparse

import numpy as np

from cisprt import optimal_constant_weight, random_geometric

REFERENCE = {(30, 0.3): 0.8241, (30, 0.6): 0.5580, (30, 0.9): 0.2891,
             (300, 0.3): 0.7989, (300, 0.6): 0.6014, (300, 0.9): 0.2166,
             (1000, 0.3): 0.7689, (1000, 0.6): 0.5940, (1000, 0.9): 0.2297}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=5)
    args = ap.parse_args()
    print("N,radius,reference_r,median_r,min_r,max_r")
    for (n, radius), ref in REFERENCE.items():
        rs = [optimal_constant_weight(random_geometric(n, radius, seed=s)).r for s in range(args.seeds)]
        print(f"{n},{radius},{ref},{np.median(rs):.4f},{min(rs):.4f},{max(rs):.4f}", flush=True)


if __name__ == "__main__":
    main()
