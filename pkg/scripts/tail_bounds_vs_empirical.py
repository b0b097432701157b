"""Empirical stopping-time tails against the distributed Q-bound and the
centralized first-passage series, written as one CSV."""
import argparse

import numpy as np

from cisprt import (ErrorSpec, GaussianShiftModel, Hypothesis, cisprt_thresholds, optimal_constant_weight,
                    random_geometric, simulate, substream, wald_thresholds)
from cisprt.analysis import centralized_tail_series, distributed_tail_upper
from cisprt.detectors import CENSORED


def tail(stop_times, t_max):
    st = np.where(stop_times == CENSORED, np.iinfo(np.int64).max, stop_times)
    return np.array([np.mean(st > t) for t in range(1, t_max + 1)])


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=30)
    ap.add_argument("--radius", type=float, default=0.6)
    ap.add_argument("--graph-seed", type=int, default=3)
    ap.add_argument("--mu", type=float, default=1.0)
    ap.add_argument("--eps", type=float, default=1e-3)
    ap.add_argument("--trials", type=int, default=10_000)
    ap.add_argument("--agent", type=int, default=0)
    args = ap.parse_args()

    w = optimal_constant_weight(random_geometric(args.n, args.radius, seed=args.graph_seed))
    model = GaussianShiftModel(args.mu, 1.0, args.n)
    e = ErrorSpec.symmetric(args.eps)
    th, ct = cisprt_thresholds(e, model, w.r), wald_thresholds(e, args.n)
    d = simulate(model, Hypothesis.H1, [substream(1, 0, i) for i in range(args.trials)], th, 100_000, mixing=w.w)
    c = simulate(model, Hypothesis.H1, [substream(1, 1, i) for i in range(args.trials)], ct, 100_000,
                 centralized=True)
    t_max = int(max(d.stop_times.max(), c.stop_times.max()))
    t = np.arange(1, t_max + 1)
    cols = [t, tail(d.stop_times[:, args.agent], t_max), distributed_tail_upper(model, w.r, th.upper, t),
            tail(c.stop_times[:, 0], t_max), centralized_tail_series(model, ct.lower, ct.upper, t)]
    print("t,cisprt_empirical,cisprt_upper_bound,centralized_empirical,centralized_lower_series")
    for row in zip(*cols):
        print(f"{row[0]}," + ",".join(f"{v:.17g}" for v in row[1:]))


if __name__ == "__main__":
    main()
