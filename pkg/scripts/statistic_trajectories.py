"""Record CISPRT statistics of a few agents over one H1 run until every
agent has stopped (defaults: N=300, radius 0.6, eps=1e-10)."""
import argparse
import sys

from cisprt import (ErrorSpec, GaussianShiftModel, Hypothesis, cisprt_thresholds, optimal_constant_weight,
                    random_geometric, run_cisprt, substream)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=300)
    ap.add_argument("--radius", type=float, default=0.6)
    ap.add_argument("--eps", type=float, default=1e-10)
    ap.add_argument("--mu", type=float, default=0.5)
    ap.add_argument("--agents", type=int, nargs="+", default=[0, 9, 49])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    g = random_geometric(args.n, args.radius, seed=args.seed)
    w = optimal_constant_weight(g)
    model = GaussianShiftModel(args.mu, 1.0, args.n)
    th = cisprt_thresholds(ErrorSpec.symmetric(args.eps), model, w.r)
    out = run_cisprt(model, w, th, Hypothesis.H1, substream(args.seed, 0), 100_000, record=True)
    print(f"# r={w.r:.4f} upper={th.upper:.6g} lower={th.lower:.6g}", file=sys.stderr)
    t_end = int(out.stop_times.max())
    print("t,agent,S_value")
    for t in range(1, t_end + 1):
        for a in args.agents:
            print(f"{t},{a},{out.trajectory[t - 1, a]:.17g}")


if __name__ == "__main__":
    main()
