"""Command-line front end.

Exit status: 0 success, 1 usage or configuration error, 2 runtime error.
"""
from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import analysis, montecarlo
from .detectors import run_cisprt
from .graph import random_geometric
from .model import GaussianShiftModel, Hypothesis, substream
from .thresholds import (ErrorSpec, cisprt_thresholds, cisprt_thresholds_tightened,
                         universal_lower_bound, wald_thresholds)
from .weights import constant_weight_design, optimal_constant_weight

OUT_ENV = "CISPRT_OUT"

# section -> key -> parser; anything else in a config file is rejected
_floats = lambda s: [float(x) for x in s.replace(",", " ").split()]  # noqa: E731
_ints = lambda s: [int(x) for x in s.replace(",", " ").split()]  # noqa: E731
_words = lambda s: [x for x in s.replace(",", " ").split()]  # noqa: E731


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _cap(s: str):
    return None if s.strip().lower() == "auto" else int(s)


SCHEMA = {
    "graph": {"n_agents": int, "radius": float, "seed": int, "delta": float},
    "model": {"mu": float, "sigma2": float},
    "experiment": {"eps": _floats, "detectors": _words, "hypotheses": _words, "n_trials": int,
                   "t_cap": _cap, "tightened": _bool, "chunk": int, "seed": int, "threads": int},
    "bounds": {"eps": float, "t_max": int},
    "report": {"trajectory_agents": _ints, "trajectory_eps": float, "trajectory_seed": int,
               "trajectory_t_cap": int},
}

DEFAULTS = {
    "graph": {"n_agents": "30", "radius": "0.6", "seed": "0"},
    "model": {"mu": "1.0", "sigma2": "1.0"},
    "experiment": {"eps": "1e-8, 1e-7, 1e-6, 1e-5, 1e-4", "detectors": "cisprt, centralized, isolated",
                   "hypotheses": "H1", "n_trials": "2000", "t_cap": "auto", "tightened": "false",
                   "chunk": "256", "seed": "0", "threads": "1"},
    "bounds": {"eps": "1e-3", "t_max": "50"},
    "report": {"trajectory_agents": "0, 9, 29", "trajectory_eps": "1e-10", "trajectory_seed": "0",
               "trajectory_t_cap": "100000"},
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def load_config(path, overrides=()) -> dict:
    """Parse an INI-style config plus ``section.key=value`` overrides into typed values."""
    raw = {sec: dict(vals) for sec, vals in DEFAULTS.items()}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise UsageError(f"config file not found: {p}")
        cp = configparser.ConfigParser()
        cp.optionxform = str
        try:
            cp.read(p)
        except configparser.Error as exc:
            raise UsageError(f"{p}: {exc}") from exc
        for sec in cp.sections():
            for key, val in cp[sec].items():
                _check_key(sec, key)
                raw[sec][key] = val
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise UsageError(f"--set expects section.key=value, got {item!r}")
        name, val = item.split("=", 1)
        sec, key = name.strip().split(".", 1)
        _check_key(sec, key)
        raw[sec][key] = val
    typed = {}
    for sec, vals in raw.items():
        typed[sec] = {}
        for key, val in vals.items():
            try:
                typed[sec][key] = SCHEMA[sec][key](val)
            except ValueError as exc:
                raise UsageError(f"bad value for {sec}.{key}: {val!r} ({exc})") from exc
    return typed


def _check_key(sec: str, key: str) -> None:
    if sec not in SCHEMA:
        raise UsageError(f"unknown config section: {sec}")
    if key not in SCHEMA[sec]:
        raise UsageError(f"unknown config key: {sec}.{key}")


def experiment_config(conf: dict, seed=None, threads=None) -> montecarlo.ExperimentConfig:
    g, mdl, ex = conf["graph"], conf["model"], conf["experiment"]
    return montecarlo.ExperimentConfig(
        n_agents=g["n_agents"], radius=g["radius"], graph_seed=g["seed"], mu=mdl["mu"],
        sigma2=mdl["sigma2"], eps=ex["eps"], detectors=ex["detectors"], hypotheses=ex["hypotheses"],
        n_trials=ex["n_trials"], master_seed=ex["seed"] if seed is None else seed,
        t_cap=ex["t_cap"], tightened=ex["tightened"], chunk=ex["chunk"],
        threads=ex["threads"] if threads is None else threads)


def _header(conf: dict, seed) -> str:
    return json.dumps({"config": conf, "master_seed": seed}, sort_keys=True)


def _weights(conf, g):
    delta = conf["graph"].get("delta")
    return optimal_constant_weight(g) if delta is None else constant_weight_design(g, delta)


def cmd_graph_gen(args, conf, out: Path) -> None:
    gc = conf["graph"]
    g = random_geometric(gc["n_agents"], gc["radius"], seed=gc["seed"])
    g.meta["config"] = conf
    g.to_edgelist(out / "graph.edges")
    sp = g.spectrum
    doc = {"config": conf, "master_seed": gc["seed"], "n": g.n_agents, "n_edges": len(g.edges),
           "eigenvalues": sp.eigenvalues.tolist(), "fiedler": sp.fiedler, "lambda_max": sp.lambda_max}
    (out / "spectrum.json").write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n")


def cmd_design_weights(args, conf, out: Path) -> None:
    gc = conf["graph"]
    g = random_geometric(gc["n_agents"], gc["radius"], seed=gc["seed"])
    w = _weights(conf, g)
    w.to_csv(out / "weights.csv", header=_header(conf, gc["seed"]))
    doc = {"config": conf, "master_seed": gc["seed"], "r": w.r, "delta": w.delta,
           "k": g.n_agents * w.r ** 2, "violations": [v.prop for v in w.violations]}
    (out / "weights.json").write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n")
    print(json.dumps({"r": w.r, "delta": w.delta}))


def cmd_thresholds(args, conf, out) -> None:
    alpha = args.alpha if args.alpha is not None else args.eps
    beta = args.beta if args.beta is not None else args.eps
    if alpha is None or beta is None:
        raise UsageError("give --eps or both --alpha and --beta")
    try:
        e = ErrorSpec(alpha, beta)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    model = GaussianShiftModel.from_kl(args.m, args.n)
    th = cisprt_thresholds(e, model, args.r)
    doc = {"alpha": alpha, "beta": beta, "n": args.n, "r": args.r, "m": args.m,
           "k": args.n * args.r ** 2, **th.as_dict(),
           "wald": wald_thresholds(e).as_dict(),
           "centralized": wald_thresholds(e, args.n).as_dict(),
           "M": universal_lower_bound(e, model)}
    if args.tightened:
        doc["tightened"] = cisprt_thresholds_tightened(e, model, args.r).as_dict()
    print(json.dumps(doc, sort_keys=True))


def cmd_simulate(args, conf, out: Path) -> None:
    cfg = experiment_config(conf, args.seed, args.threads)
    result = montecarlo.run_experiment(cfg)
    montecarlo.write_outputs(result, out)
    for key, err in result.errors.items():
        print(f"cell {key} failed: {err}", file=sys.stderr)


def cmd_bounds(args, conf, out: Path) -> None:
    cfg = experiment_config(conf, args.seed)
    g = random_geometric(cfg.n_agents, cfg.radius, seed=cfg.graph_seed)
    w = _weights(conf, g)
    model = cfg.model
    e = ErrorSpec.symmetric(conf["bounds"]["eps"])
    times = np.arange(1, conf["bounds"]["t_max"] + 1)
    dist = analysis.tail_bound_curve(analysis.BoundKind.DISTRIBUTED_UPPER, model, times, r=w.r,
                                     gamma_h=cisprt_thresholds(e, model, w.r).upper)
    ct = wald_thresholds(e, model.n_agents)
    cent = analysis.tail_bound_curve(analysis.BoundKind.CENTRALIZED_LOWER_SERIES, model, times,
                                     gamma_l=ct.lower, gamma_h=ct.upper)
    lines = [f"# {_header(conf, cfg.master_seed)}", "t,bound_value,kind"]
    for curve in (dist, cent):
        lines += [f"{t},{v:.17g},{curve.kind.value}" for t, v in zip(curve.times, curve.values)]
    (out / "bounds.csv").write_text("\n".join(lines) + "\n")


def cmd_report(args, conf, out: Path) -> None:
    src = Path(args.input) if args.input else out
    summ_path = src / "summary.json"
    if not summ_path.is_file():
        raise UsageError(f"no simulate output at {summ_path}")
    summ = json.loads(summ_path.read_text())
    header = _header(conf, summ.get("master_seed"))
    lines = [f"# {header}", "eps,detector,agent,ratio,ratio_se,mean,M"]
    for row in summ.get("ratios", []):
        vals = [row.get(k) for k in ("eps", "detector", "agent", "ratio", "ratio_se", "mean", "M")]
        lines.append(",".join("" if v is None else (f"{v:.17g}" if isinstance(v, float) else str(v))
                              for v in vals))
    (out / "ratios.csv").write_text("\n".join(lines) + "\n")

    cfg = experiment_config(conf, args.seed)
    rep = conf["report"]
    agents = rep["trajectory_agents"]
    if any(not 0 <= a < cfg.n_agents for a in agents):
        raise UsageError(f"report.trajectory_agents {agents} out of range for n_agents={cfg.n_agents}")
    g = random_geometric(cfg.n_agents, cfg.radius, seed=cfg.graph_seed)
    w = _weights(conf, g)
    model = cfg.model
    th = cisprt_thresholds(ErrorSpec.symmetric(rep["trajectory_eps"]), model, w.r)
    o = run_cisprt(model, w, th, Hypothesis.H1, substream(rep["trajectory_seed"], 0),
                   rep["trajectory_t_cap"], record=True)
    t_end = int(np.nanmax(np.where(o.censored, o.t_cap, o.stop_times)))
    lines = [f"# {header}", "t,agent,S_value"]
    for t in range(1, t_end + 1):
        for a in agents:
            lines.append(f"{t},{a},{o.trajectory[t - 1, a]:.17g}")
    (out / "trajectory.csv").write_text("\n".join(lines) + "\n")


COMMANDS = {"graph-gen": cmd_graph_gen, "design-weights": cmd_design_weights,
            "thresholds": cmd_thresholds, "simulate": cmd_simulate, "bounds": cmd_bounds,
            "report": cmd_report}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="INI config file")
    common.add_argument("--out", help=f"output directory (default ${OUT_ENV} or .)")
    common.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    common.add_argument("--threads", type=int, help="worker processes, 0 = all cores")
    common.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE")
    p = _Parser(prog="cisprt", description="Distributed sequential detection toolkit")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name == "thresholds":
            sp.add_argument("--eps", type=float)
            sp.add_argument("--alpha", type=float)
            sp.add_argument("--beta", type=float)
            sp.add_argument("--n", type=int, required=True)
            sp.add_argument("--r", type=float, required=True)
            sp.add_argument("--m", type=float, required=True)
            sp.add_argument("--tightened", action="store_true")
        if name == "report":
            sp.add_argument("--input", help="simulate output directory (default: --out)")
    return p


def parse_and_dispatch(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise UsageError("--seed must be an unsigned 64-bit integer")
        if args.threads is not None and args.threads < 0:
            raise UsageError("--threads must be >= 0")
        conf = load_config(args.config, args.set)
        if args.seed is not None:
            conf["experiment"]["seed"] = args.seed
        out = Path(args.out or os.environ.get(OUT_ENV) or ".")
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        if args.command != "thresholds":
            out.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](args, conf, out)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


def main() -> None:
    sys.exit(parse_and_dispatch())


if __name__ == "__main__":
    main()
