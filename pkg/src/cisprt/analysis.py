"""Closed-form stopping-time bounds, large-deviation exponents and
connectivity-dependent efficiency bounds."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np
from scipy.special import log_ndtr, ndtr

from .graph import Graph, GraphError, is_connected
from .model import GaussianShiftModel
from .thresholds import connectivity_constant

log = logging.getLogger(__name__)

SERIES_TOL = 1e-12
S_MAX_CAP = 1_000_000


class SeriesError(RuntimeError):
    pass


class BoundKind(str, Enum):
    DISTRIBUTED_UPPER = "distributed_upper"
    CENTRALIZED_LOWER_SERIES = "centralized_lower_series"


@dataclass(frozen=True)
class TailBoundCurve:
    times: np.ndarray
    values: np.ndarray
    kind: BoundKind

    def to_csv(self, path, header: str | None = None) -> None:
        lines = [f"# {header}"] if header else []
        lines.append("t,bound_value,kind")
        kind = BoundKind(self.kind).value
        lines += [f"{t},{v:.17g},{kind}" for t, v in zip(self.times, self.values)]
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


def q_function(x):
    """Standard normal right tail."""
    return ndtr(-np.asarray(x, dtype=float)) if np.ndim(x) else float(ndtr(-x))


def log_q_function(x):
    return log_ndtr(-np.asarray(x, dtype=float)) if np.ndim(x) else float(log_ndtr(-x))


def variance_bound(model: GaussianShiftModel, r: float, t):
    """``2mt/N + 2m r^2 (1 - r^{2t}) / (1 - r^2)``; the second term is 0 at r = 0."""
    t = np.asarray(t, dtype=float)
    m, n = model.m, model.n_agents
    mixing = 2 * m * r * r * -np.expm1(2 * t * np.log(r)) / (1 - r * r) if r > 0 else 0.0
    return 2 * m * t / n + mixing


def _dist_arg(model, r, gamma_h, t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 1):
        raise ValueError("t must be >= 1")
    return (model.m * t - gamma_h) / np.sqrt(variance_bound(model, r, t))


def distributed_tail_upper(model: GaussianShiftModel, r: float, gamma_h: float, t):
    """Upper bound on P_1(T_i > t) for a CISPRT agent with upper threshold gamma_h."""
    return q_function(_dist_arg(model, r, gamma_h, t))


def log_distributed_tail_upper(model: GaussianShiftModel, r: float, gamma_h: float, t):
    return log_q_function(_dist_arg(model, r, gamma_h, t))


def _observation_scale(model: GaussianShiftModel, gamma_l: float, gamma_h: float, scale: str = "llr"):
    # thresholds on the averaged LLR -> thresholds on the averaged observation
    if scale == "observation":
        return gamma_l, gamma_h
    if scale != "llr":
        raise ValueError(f"scale must be 'llr' or 'observation', got {scale!r}")
    f = 1.0 / model.llr_scale
    return gamma_l * f, gamma_h * f


def k_series(model: GaussianShiftModel, gamma_l: float, gamma_h: float, a: float, t: float,
             s_max: int | None = None) -> float:
    """Truncated sine series K_t^S(a) on the averaged-observation scale.

    ``gamma_l``, ``gamma_h`` and ``a`` are already on that scale. With
    ``s_max=None`` terms are added until one falls below ``SERIES_TOL``.
    """
    n, sig2 = model.n_agents, model.sigma2
    width = gamma_h - gamma_l
    drift = n * model.m / 4
    curv = sig2 * math.pi**2 / (2 * n * width**2)
    pref = sig2 * math.pi / (n * width**2)
    total, s0, chunk = 0.0, 1, 64
    cap = S_MAX_CAP if s_max is None else s_max
    while s0 <= cap:
        s = np.arange(s0, min(s0 + chunk, cap + 1), dtype=float)
        rate = drift + curv * s * s
        terms = pref * s * (-1.0) ** (s + 1) / rate * np.exp(-rate * t) * np.sin(s * math.pi * a / width)
        total += float(terms.sum())
        if s_max is None:
            # sin may vanish at a node; judge convergence on the envelope
            env = pref * s[-1] / rate[-1] * math.exp(-rate[-1] * t)
            if env < SERIES_TOL:
                return total
        s0 += chunk
        chunk *= 2
    if s_max is None:
        raise SeriesError(f"K series not converged within {S_MAX_CAP} terms (t={t})")
    return total


def centralized_tail_series(model: GaussianShiftModel, gamma_l: float, gamma_h: float, t,
                            s_max: int | None = None, scale: str = "llr"):
    """Continuous-time first-passage survival, a lower bound on P_1(T_c > t).

    ``gamma_l``/``gamma_h`` are the centralized SPRT thresholds on the
    network-averaged LLR. The Brownian first-passage series is written for
    the averaged observation, so thresholds are mapped by ``sigma2/(2 mu)``;
    pass ``scale="observation"`` to supply them on that scale directly.
    """
    if not gamma_l < 0 < gamma_h:
        raise ValueError("need gamma_l < 0 < gamma_h")
    lo, hi = _observation_scale(model, gamma_l, gamma_h, scale)
    c = model.n_agents * model.mu / model.sigma2

    def one(tt):
        if tt < 1:
            raise ValueError("t must be >= 1")
        raw = (math.exp(c * lo) * k_series(model, lo, hi, hi, tt, s_max)
               - math.exp(c * hi) * k_series(model, lo, hi, lo, tt, s_max))
        val = min(max(raw, 0.0), 1.0)
        if val != raw:
            log.debug("clamped series value at t=%s: raw=%r clamped=%r", tt, raw, val)
        return val

    if np.ndim(t):
        return np.array([one(float(x)) for x in np.asarray(t)])
    return one(float(t))


def ld_exponent_centralized(model: GaussianShiftModel, gamma_l: float, gamma_h: float,
                            scale: str = "llr") -> float:
    """Tail exponent of the centralized stopping time; ``scale`` as in
    :func:`centralized_tail_series`."""
    if not gamma_l < gamma_h:
        raise ValueError("need gamma_l < gamma_h")
    lo, hi = _observation_scale(model, gamma_l, gamma_h, scale)
    n = model.n_agents
    return -(n * model.m / 4 + model.sigma2 * math.pi**2 / (2 * n * (hi - lo) ** 2))


def ld_exponent_distributed(model: GaussianShiftModel) -> float:
    return -model.n_agents * model.m / 4


def expected_stop_bounds(model: GaussianShiftModel, r: float, gamma_h: float, epsilon: float,
                         c: float = 0.0) -> tuple[float, float]:
    """Bracket on E_1[T_i] for CISPRT with symmetric error targets.

    The lower end is the small-epsilon approximation
    ``((1 - 2 eps) gamma_h - c) / m``; ``c`` is the unknown
    threshold-independent slack constant and defaults to 0.
    """
    n, m = model.n_agents, model.m
    k = connectivity_constant(n, r)
    upper = 5 * gamma_h / (4 * m) - 1 / math.expm1(-n * m / (4 * (k + 1)))
    lower = ((1 - 2 * epsilon) * gamma_h - c) / m
    return lower, upper


def efficiency_bound(n_agents: int, r: float) -> float:
    """Asymptotic ceiling on E_1[T_i] / M(eps): 10 (N r^2 + 1) / 7."""
    return 10 * (connectivity_constant(n_agents, r) + 1) / 7


def collaboration_threshold(n_agents: int) -> float:
    """Largest r for which the efficiency bound does not exceed N."""
    return math.sqrt((7 * n_agents - 10) / (10 * n_agents))


def eigen_ratio_bound(g: Graph) -> float:
    """Efficiency bound for the optimal constant-weight design, from the Laplacian spectrum."""
    if g.n_agents == 1:
        return 10 / 7
    if not is_connected(g):
        raise GraphError("eigen-ratio bound needs a connected graph")
    l2, ln = g.spectrum.fiedler, g.spectrum.lambda_max
    return 10 / 7 + 10 * g.n_agents * (ln - l2) ** 2 / (7 * (l2 + ln) ** 2)


def tail_bound_curve(kind: BoundKind, model: GaussianShiftModel, times: Sequence[int], *,
                     r: float | None = None, gamma_h: float | None = None,
                     gamma_l: float | None = None) -> TailBoundCurve:
    times = np.asarray(times, dtype=int)
    if BoundKind(kind) is BoundKind.DISTRIBUTED_UPPER:
        vals = distributed_tail_upper(model, r, gamma_h, times)
    else:
        vals = centralized_tail_series(model, gamma_l, gamma_h, times)
    return TailBoundCurve(times, np.asarray(vals, dtype=float), BoundKind(kind))


def statistic_divergence(paths: np.ndarray) -> float:
    """Largest ``sup_t |S_i(t) - S_j(t)|`` over trials and agent pairs.

    ``paths`` has shape ``(trials, t, N)``; purely an empirical diagnostic.
    """
    spread = np.nanmax(paths, axis=2) - np.nanmin(paths, axis=2)
    return float(np.nanmax(spread))
