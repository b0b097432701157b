"""Monte Carlo orchestration for stopping-time and error-rate experiments.

Determinism contract: trial ``i`` of cell ``(eps_idx, detector, hypothesis)``
draws from ``substream(master_seed, eps_idx, detector_id, hypothesis, i)``.
Trials are processed in fixed-size chunks whose composition does not depend
on the worker count, and chunk results are concatenated in trial order, so
outputs are byte-identical for any ``threads`` setting.
"""
from __future__ import annotations

import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from statsmodels.stats.proportion import proportion_confint

from . import analysis
from .detectors import CENSORED, DetectionOutcome, simulate
from .graph import Graph, random_geometric
from .model import GaussianShiftModel, Hypothesis, substream
from .thresholds import (ErrorSpec, ThresholdSet, cisprt_thresholds, cisprt_thresholds_tightened,
                         universal_lower_bound, wald_thresholds)
from .weights import WeightMatrix, optimal_constant_weight

log = logging.getLogger(__name__)

DETECTORS = {"cisprt": 0, "centralized": 1, "isolated": 2}
CENTER = "center"


def default_eps_grid() -> list[float]:
    return [float(x) for x in np.logspace(-8, -4, 5)]


@dataclass
class ExperimentConfig:
    n_agents: int = 30
    radius: float = 0.6
    graph_seed: int = 0
    mu: float = 1.0
    sigma2: float = 1.0
    eps: list = field(default_factory=default_eps_grid)
    detectors: list = field(default_factory=lambda: ["cisprt", "centralized", "isolated"])
    hypotheses: list = field(default_factory=lambda: ["H1"])
    n_trials: int = 2000
    master_seed: int = 0
    t_cap: Optional[int] = None  # None: 50 * ceil(reference expected stopping time)
    tightened: bool = False
    threads: int = 1
    chunk: int = 256

    def __post_init__(self):
        if self.n_trials < 1:
            raise ValueError("n_trials must be >= 1")
        for e in self.eps:
            ErrorSpec.symmetric(e)
        for d in self.detectors:
            if d not in DETECTORS:
                raise ValueError(f"unknown detector {d!r}")
        for h in self.hypotheses:
            Hypothesis[h]

    @property
    def model(self) -> GaussianShiftModel:
        return GaussianShiftModel(self.mu, self.sigma2, self.n_agents)

    def resolved(self) -> dict:
        return asdict(self)


@dataclass
class StoppingTimeDistribution:
    """Empirical stopping-time law of one agent (or the center) in one cell."""

    detector: str
    agent: object
    eps: float
    hypothesis: str
    stop_times: np.ndarray = field(repr=False)
    decisions: np.ndarray = field(repr=False)
    t_cap: int

    @property
    def n_trials(self) -> int:
        return len(self.stop_times)

    @property
    def censored(self) -> int:
        return int(np.sum(self.stop_times == CENSORED))

    @property
    def counts(self) -> np.ndarray:
        """``counts[t-1]`` = trials stopping at t, for t = 1..t_cap."""
        st = self.stop_times[self.stop_times != CENSORED]
        return np.bincount(st, minlength=self.t_cap + 1)[1:]

    @property
    def tail(self) -> np.ndarray:
        """``tail[t]`` = fraction with T > t, t = 0..t_cap; censored trials never stop."""
        cum = np.concatenate([[0], np.cumsum(self.counts)])
        return 1.0 - cum / self.n_trials

    @property
    def mean(self) -> float:
        """Mean over stopped trials; a lower estimate when censoring occurred."""
        st = self.stop_times[self.stop_times != CENSORED]
        return float(st.mean()) if st.size else math.nan

    @property
    def se(self) -> float:
        st = self.stop_times[self.stop_times != CENSORED]
        return float(st.std(ddof=1) / math.sqrt(st.size)) if st.size > 1 else math.nan

    def error_rate(self) -> tuple[float, float, float]:
        """Wrong-decision frequency with its 95% Wilson interval: the
        false-alarm rate under H0, the miss rate under H1."""
        truth = Hypothesis[self.hypothesis]
        wrong = int(np.sum((self.decisions != CENSORED) & (self.decisions != int(truth))))
        lo, hi = proportion_confint(wrong, self.n_trials, alpha=0.05, method="wilson")
        return wrong / self.n_trials, float(lo), float(hi)

    def summary(self) -> dict:
        rate, lo, hi = self.error_rate()
        key = "p_fa" if self.hypothesis == "H0" else "p_m"
        return {"agent": self.agent, "mean": self.mean, "se": self.se, "censored": self.censored,
                "n_trials": self.n_trials, key: rate, f"{key}_wilson": [lo, hi]}

    def to_csv(self, path, header: Optional[str] = None) -> None:
        cum = np.cumsum(self.counts) / self.n_trials
        lines = [f"# {header}"] if header else []
        lines.append("t,count,tail,cumulative")
        for t, (c, tl, cu) in enumerate(zip(self.counts, self.tail[1:], cum), start=1):
            lines.append(f"{t},{c},{tl:.17g},{cu:.17g}")
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


@dataclass
class Cell:
    eps: float
    eps_index: int
    detector: str
    hypothesis: str
    thresholds: ThresholdSet
    t_cap: int
    outcome: Optional[DetectionOutcome] = None
    error: Optional[str] = None

    @property
    def key(self) -> str:
        return f"eps{self.eps_index}_{self.detector}_{self.hypothesis}"

    def distributions(self) -> list[StoppingTimeDistribution]:
        o = self.outcome
        agents = [CENTER] if self.detector == "centralized" else range(o.stop_times.shape[1])
        return [StoppingTimeDistribution(self.detector, a, self.eps, self.hypothesis,
                                         o.stop_times[:, j], o.decisions[:, j], self.t_cap)
                for j, a in enumerate(agents)]

    def disagreement(self) -> float:
        """Fraction of trials in which two agents reached different decisions."""
        d = self.outcome.decisions
        return float(np.mean((d.max(axis=1) != d.min(axis=1))))


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    graph: Graph
    weights: WeightMatrix
    cells: list
    sampled_agent: int

    @property
    def distributions(self) -> list[StoppingTimeDistribution]:
        return [d for c in self.cells if c.outcome is not None for d in c.distributions()]

    @property
    def errors(self) -> dict:
        return {c.key: c.error for c in self.cells if c.error}

    def cell(self, eps_index: int, detector: str, hypothesis: str = "H1") -> Cell:
        for c in self.cells:
            if (c.eps_index, c.detector, c.hypothesis) == (eps_index, detector, hypothesis):
                return c
        raise KeyError((eps_index, detector, hypothesis))

    def distribution(self, eps_index: int, detector: str, agent=None, hypothesis: str = "H1"):
        c = self.cell(eps_index, detector, hypothesis)
        if c.outcome is None:
            raise KeyError(f"cell {c.key} failed: {c.error}")
        dists = c.distributions()
        if detector == "centralized":
            return dists[0]
        return dists[self.sampled_agent if agent is None else agent]


def agent_sample(n_agents: int, seed) -> int:
    """Uniformly chosen agent index."""
    if n_agents < 1:
        raise ValueError("n_agents must be >= 1")
    return int(np.random.default_rng(seed).integers(n_agents))


def cell_thresholds(detector: str, e: ErrorSpec, model: GaussianShiftModel, r: float,
                    tightened: bool = False) -> ThresholdSet:
    if detector == "cisprt":
        return (cisprt_thresholds_tightened if tightened else cisprt_thresholds)(e, model, r)
    if detector == "centralized":
        return wald_thresholds(e, model.n_agents)
    return wald_thresholds(e)


def auto_t_cap(detector: str, e: ErrorSpec, model: GaussianShiftModel, r: float) -> int:
    """50 x ceil of the detector's reference expected stopping time.

    Centralized: M(alpha, beta). Isolated: M for a single agent. CISPRT:
    the larger of M and the closed-form upper bound on E_1[T_i].
    """
    ref = universal_lower_bound(e, model)
    if detector == "isolated":
        ref = universal_lower_bound(e, model.with_agents(1))
    elif detector == "cisprt":
        gam = cisprt_thresholds(e, model, r).upper
        ref = max(ref, analysis.expected_stop_bounds(model, r, gam, e.alpha)[1])
    return 50 * max(1, math.ceil(ref))


def _run_chunk(args) -> DetectionOutcome:
    model, h, seeds, thresholds, t_cap, mixing, centralized = args
    return simulate(model, h, seeds, thresholds, t_cap, mixing=mixing, centralized=centralized)


def _concat(parts: list) -> DetectionOutcome:
    return DetectionOutcome(np.concatenate([p.stop_times for p in parts]),
                            np.concatenate([p.decisions for p in parts]), parts[0].t_cap)


def run_cell(cfg: ExperimentConfig, model: GaussianShiftModel, w: WeightMatrix, cell: Cell,
             pool: Optional[ProcessPoolExecutor] = None) -> DetectionOutcome:
    det_id = DETECTORS[cell.detector]
    h = Hypothesis[cell.hypothesis]
    seeds = [substream(cfg.master_seed, cell.eps_index, det_id, h, i) for i in range(cfg.n_trials)]
    mixing = w.w if cell.detector == "cisprt" else None
    central = cell.detector == "centralized"
    jobs = [(model, h, seeds[i:i + cfg.chunk], cell.thresholds, cell.t_cap, mixing, central)
            for i in range(0, len(seeds), cfg.chunk)]
    parts = list(pool.map(_run_chunk, jobs)) if pool else [_run_chunk(j) for j in jobs]
    return _concat(parts)


def run_experiment(cfg: ExperimentConfig, graph: Optional[Graph] = None,
                   weights: Optional[WeightMatrix] = None) -> ExperimentResult:
    """Run every (eps, detector, hypothesis) cell; a failing cell is
    recorded in ``result.errors`` and does not stop the others."""
    model = cfg.model
    g = graph if graph is not None else random_geometric(cfg.n_agents, cfg.radius, seed=cfg.graph_seed)
    w = weights if weights is not None else optimal_constant_weight(g)
    threads = cfg.threads or os.cpu_count() or 1
    cells = []
    pool = ProcessPoolExecutor(threads) if threads > 1 else None
    try:
        for ei, eps in enumerate(cfg.eps):
            e = ErrorSpec.symmetric(eps)
            for det in cfg.detectors:
                for hyp in cfg.hypotheses:
                    try:
                        th = cell_thresholds(det, e, model, w.r, cfg.tightened)
                        cap = cfg.t_cap or auto_t_cap(det, e, model, w.r)
                        cell = Cell(eps, ei, det, hyp, th, cap)
                        cell.outcome = run_cell(cfg, model, w, cell, pool)
                    except Exception as exc:  # noqa: BLE001 - isolate cell failures
                        log.exception("cell eps=%g %s %s failed", eps, det, hyp)
                        cell = Cell(eps, ei, det, hyp, ThresholdSet(0.0, 0.0), 0, error=repr(exc))
                    cells.append(cell)
    finally:
        if pool:
            pool.shutdown()
    return ExperimentResult(cfg, g, w, cells, agent_sample(cfg.n_agents, cfg.master_seed))


def compare_ratios(result: ExperimentResult) -> list[dict]:
    """E_1[T] / M(eps) per detector and eps, with theoretical references.

    Raises KeyError when a requested H1 cell is missing or failed.
    """
    cfg, model, r = result.config, result.config.model, result.weights.r
    rows = []
    for ei, eps in enumerate(cfg.eps):
        e = ErrorSpec.symmetric(eps)
        big_m = universal_lower_bound(e, model)
        gam = cisprt_thresholds(e, model, r).upper
        for det in cfg.detectors:
            d = result.distribution(ei, det)
            rows.append({"eps": eps, "detector": det, "agent": d.agent, "mean": d.mean, "se": d.se,
                         "M": big_m, "ratio": d.mean / big_m, "ratio_se": d.se / big_m,
                         "censored": d.censored})
        rows.append({"eps": eps, "detector": "cisprt_theory_lower", "agent": None,
                     "ratio": (1 - 2 * eps) * gam / (model.m * big_m), "M": big_m})
        rows.append({"eps": eps, "detector": "cisprt_efficiency_bound", "agent": None,
                     "ratio": analysis.efficiency_bound(cfg.n_agents, r), "M": big_m})
    return rows


def _clean(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.generic):
        return _clean(x.item())
    return x


def summary(result: ExperimentResult) -> dict:
    cfg = result.config
    out = {"config": cfg.resolved(), "master_seed": cfg.master_seed, "r": result.weights.r,
           "k": cfg.n_agents * result.weights.r ** 2, "sampled_agent": result.sampled_agent,
           "efficiency_bound": analysis.efficiency_bound(cfg.n_agents, result.weights.r),
           "errors": result.errors, "cells": {}}
    model = cfg.model
    for c in result.cells:
        if c.outcome is None:
            continue
        e = ErrorSpec.symmetric(c.eps)
        dists = c.distributions()
        focus = dists[0] if c.detector == "centralized" else dists[result.sampled_agent]
        out["cells"][c.key] = {
            "eps": c.eps, "detector": c.detector, "hypothesis": c.hypothesis,
            "thresholds": c.thresholds.as_dict(), "t_cap": c.t_cap,
            "M": universal_lower_bound(e, model),
            "sampled": focus.summary(),
            "agents": [d.summary() for d in dists],
            "disagreement": c.disagreement(),
        }
    try:
        out["ratios"] = compare_ratios(result)
    except KeyError as exc:
        out["ratios_error"] = str(exc)
    return _clean(out)


def write_outputs(result: ExperimentResult, out_dir) -> list[Path]:
    """One tail CSV per cell (sampled agent) plus ``summary.json``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    header = json.dumps({"config": result.config.resolved(), "master_seed": result.config.master_seed},
                        sort_keys=True)
    written = []
    for c in result.cells:
        if c.outcome is None:
            continue
        dists = c.distributions()
        focus = dists[0] if c.detector == "centralized" else dists[result.sampled_agent]
        p = out_dir / f"tail_{c.key}.csv"
        focus.to_csv(p, header=header)
        written.append(p)
    p = out_dir / "summary.json"
    p.write_text(json.dumps(summary(result), sort_keys=True, indent=1) + "\n")
    written.append(p)
    return written
