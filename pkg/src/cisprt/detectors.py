"""Sequential detectors: CISPRT, centralized SPRT and isolated per-agent SPRTs.

All three share one batch engine. A batch is a list of trial seeds; each
trial draws its own observation stream, so a trial's outcome does not
depend on which other trials share its batch.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .model import GaussianShiftModel, Hypothesis, ObservationStream
from .thresholds import ErrorSpec, ThresholdSet, wald_thresholds
from .weights import WeightMatrix

BLOCK = 32
CENSORED = -1


@dataclass
class CisprtState:
    """Running statistics S_i(t) = t * P_i(t) and per-agent stop records."""

    t: int
    s: np.ndarray
    stopped: np.ndarray
    stop_time: np.ndarray
    decision: np.ndarray

    @classmethod
    def initial(cls, n_agents: int) -> "CisprtState":
        return cls(0, np.zeros(n_agents), np.zeros(n_agents, bool),
                   np.full(n_agents, CENSORED), np.full(n_agents, CENSORED))

    @property
    def p(self) -> np.ndarray:
        return self.s / self.t if self.t else np.zeros_like(self.s)


def cisprt_step(state: CisprtState, w: WeightMatrix, eta, thresholds: Optional[ThresholdSet] = None) -> CisprtState:
    """One synchronous update ``S(t+1) = W (S(t) + eta(t+1))``.

    Stopped agents keep mixing; only their stop time and decision freeze.
    """
    eta = np.asarray(eta, dtype=float)
    wm = w.w if isinstance(w, WeightMatrix) else np.asarray(w)
    if eta.shape != state.s.shape or wm.shape != (len(state.s),) * 2:
        raise ValueError(f"dimension mismatch: eta {eta.shape}, S {state.s.shape}, W {wm.shape}")
    s = wm @ (state.s + eta)
    t = state.t + 1
    stopped, stop_time, decision = state.stopped.copy(), state.stop_time.copy(), state.decision.copy()
    if thresholds is not None:
        hit = ~stopped & ((s > thresholds.upper) | (s < thresholds.lower))
        stop_time[hit] = t
        decision[hit] = np.where(s[hit] > thresholds.upper, Hypothesis.H1, Hypothesis.H0)
        stopped |= hit
    return replace(state, t=t, s=s, stopped=stopped, stop_time=stop_time, decision=decision)


@dataclass
class DetectionOutcome:
    """Stopping times (samples) and decisions, one row per trial.

    Censored entries (no exit by ``t_cap``) hold ``CENSORED`` in both arrays.
    ``trajectory`` is ``(trials, t, stats)`` when recording was requested.
    """

    stop_times: np.ndarray
    decisions: np.ndarray
    t_cap: int
    trajectory: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def censored(self) -> np.ndarray:
        return self.stop_times == CENSORED

    def __getitem__(self, i) -> "DetectionOutcome":
        traj = None if self.trajectory is None else self.trajectory[i]
        return DetectionOutcome(self.stop_times[i], self.decisions[i], self.t_cap, traj)


def simulate(model: GaussianShiftModel, h: Hypothesis, seeds: Sequence, thresholds: ThresholdSet,
             t_cap: int, mixing: Optional[np.ndarray] = None, centralized: bool = False,
             record: bool = False) -> DetectionOutcome:
    """Run a batch of trials to stopping or ``t_cap``.

    ``mixing`` is the matrix applied after adding the innovation (W for
    CISPRT, None for independent per-agent sums); ``centralized`` collapses
    each innovation vector to its network average.
    """
    if t_cap < 1:
        raise ValueError("t_cap must be >= 1")
    if thresholds.lower > thresholds.upper:
        raise ValueError("thresholds.lower must not exceed thresholds.upper")
    n_trials = len(seeds)
    n_stats = 1 if centralized else model.n_agents
    up, lo = thresholds.upper, thresholds.lower
    streams = [ObservationStream(model, h, sd) for sd in seeds]
    wt = None if mixing is None else np.ascontiguousarray(np.asarray(mixing).T)

    stop_times = np.full((n_trials, n_stats), CENSORED, dtype=np.int64)
    decisions = np.full((n_trials, n_stats), CENSORED, dtype=np.int64)
    traj = np.full((n_trials, t_cap, n_stats), np.nan) if record else None

    active = np.arange(n_trials)
    s = np.zeros((n_trials, n_stats))
    t = 0
    while t < t_cap and active.size:
        nb = min(BLOCK, t_cap - t)
        eta = np.stack([streams[i].take_llr(nb) for i in active])
        for j in range(nb):
            inc = eta[:, j]
            if centralized:
                s = s + inc.mean(axis=1, keepdims=True)
            elif wt is None:
                s = s + inc
            else:
                s = (s + inc) @ wt
            t += 1
            if record:
                traj[active, t - 1] = s
            st = stop_times[active]
            hit = (st == CENSORED) & ((s > up) | (s < lo))
            if hit.any():
                st[hit] = t
                dec = decisions[active]
                dec[hit] = np.where(s[hit] > up, 1, 0)
                stop_times[active] = st
                decisions[active] = dec
        done = (stop_times[active] != CENSORED).all(axis=1)
        if done.any():
            active, s = active[~done], s[~done]
    return DetectionOutcome(stop_times, decisions, t_cap, traj)


def run_cisprt(model: GaussianShiftModel, w: WeightMatrix, thresholds: ThresholdSet, h: Hypothesis,
               seed, t_cap: int, record: bool = False) -> DetectionOutcome:
    """Single CISPRT trial; arrays have one entry per agent."""
    return simulate(model, h, [seed], thresholds, t_cap, mixing=w.w, record=record)[0]


def run_sprt(model: GaussianShiftModel, thresholds: ThresholdSet, h: Hypothesis, seed, t_cap: int,
             record: bool = False) -> DetectionOutcome:
    """Single centralized SPRT trial on the network-averaged LLR sum."""
    return simulate(model, h, [seed], thresholds, t_cap, centralized=True, record=record)[0]


def run_isolated(model: GaussianShiftModel, h: Hypothesis, e: ErrorSpec, seed, t_cap: int,
                 record: bool = False) -> DetectionOutcome:
    """Every agent runs Wald's SPRT on its own LLR stream, no communication."""
    return simulate(model, h, [seed], wald_thresholds(e), t_cap, record=record)[0]


def statistic_paths(model: GaussianShiftModel, w: WeightMatrix, h: Hypothesis, seeds: Sequence,
                    times: Sequence[int]) -> np.ndarray:
    """CISPRT statistics with no stopping, sampled at ``times``;
    shape ``(trials, len(times), N)``."""
    times = np.asarray(times)
    t_max = int(times.max())
    out = np.empty((len(seeds), len(times), model.n_agents))
    eta = np.stack([ObservationStream(model, h, sd).take_llr(t_max) for sd in seeds])
    s = np.zeros((len(seeds), model.n_agents))
    wt = np.ascontiguousarray(w.w.T)
    for t in range(1, t_max + 1):
        s = (s + eta[:, t - 1]) @ wt
        for idx in np.flatnonzero(times == t):
            out[:, idx] = s
    return out
