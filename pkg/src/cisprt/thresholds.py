"""Decision thresholds for the three detectors and the universal lower bound
on expected stopping time."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .model import GaussianShiftModel

SERIES_RTOL = 1e-14
BISECT_ATOL = 1e-10


class SeriesError(RuntimeError):
    pass


class ThresholdKind(str, Enum):
    WALD_CENTRALIZED = "wald_centralized"
    CISPRT_CLOSED_FORM = "cisprt_closed_form"
    CISPRT_TIGHTENED = "cisprt_tightened"
    CUSTOM = "custom"


@dataclass(frozen=True)
class ErrorSpec:
    """Target false-alarm (alpha) and miss (beta) probabilities, both in (0, 1/2)."""

    alpha: float
    beta: float

    def __post_init__(self):
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if not 0 < v < 0.5:
                raise ValueError(f"{name} must lie in (0, 1/2), got {v}")

    @classmethod
    def symmetric(cls, eps: float) -> "ErrorSpec":
        return cls(eps, eps)


@dataclass(frozen=True)
class ThresholdSet:
    upper: float
    lower: float
    kind: ThresholdKind = ThresholdKind.CUSTOM

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError(f"lower {self.lower} exceeds upper {self.upper}")

    def scaled(self, factor: float) -> "ThresholdSet":
        return ThresholdSet(self.upper * factor, self.lower * factor, self.kind)

    def as_dict(self) -> dict:
        return {"upper": self.upper, "lower": self.lower, "kind": ThresholdKind(self.kind).value}


def wald_thresholds(e: ErrorSpec, n_agents: int = 1) -> ThresholdSet:
    """Wald's thresholds ``log((1-b)/a)`` and ``log(b/(1-a))``.

    The centralized statistic averages the agents' LLRs, so with
    ``n_agents=N`` both thresholds are divided by N; this is the same test
    as comparing the summed LLR against Wald's thresholds.
    """
    up = math.log((1 - e.beta) / e.alpha) / n_agents
    lo = math.log(e.beta / (1 - e.alpha)) / n_agents
    return ThresholdSet(up, lo, ThresholdKind.WALD_CENTRALIZED)


def connectivity_constant(n_agents: int, r: float) -> float:
    """k = N r^2."""
    if not 0 <= r < 1:
        raise ValueError(f"r must lie in [0, 1), got {r}")
    return n_agents * r * r


def cisprt_thresholds(e: ErrorSpec, model: GaussianShiftModel, r: float) -> ThresholdSet:
    """Closed-form CISPRT thresholds guaranteeing per-agent error rates."""
    n, m = model.n_agents, model.m
    k = connectivity_constant(n, r)
    scale = 8 * (k + 1) / (7 * n)
    log_geo = math.log(-math.expm1(-n * m / (4 * (k + 1))))
    up = scale * (math.log(2 / e.alpha) - log_geo)
    # log(b/2) + log_geo written as a negation so alpha == beta gives exact symmetry
    lo = -scale * (math.log(2 / e.beta) - log_geo)
    return ThresholdSet(up, lo, ThresholdKind.CISPRT_CLOSED_FORM)


def error_series(gamma: float, model: GaussianShiftModel, r: float, target: float | None = None,
                 t_max: int = 10_000_000) -> float:
    """``(1/2) sum_t exp(-N (gamma + m t)^2 / (4 m t (k+1)))`` over t >= 1.

    With ``gamma = upper`` this bounds the false-alarm probability; with
    ``gamma = -lower`` the miss probability. Terms are dominated by
    ``exp(-N gamma / (2(k+1))) q^t`` with ``q = exp(-N m / (4(k+1)))``, and
    summation stops once that geometric tail falls below
    ``SERIES_RTOL * target`` (target defaults to the running sum).
    """
    n, m = model.n_agents, model.m
    k = connectivity_constant(n, r)
    c = n / (4 * m * (k + 1))
    log_q = -n * m / (4 * (k + 1))
    lead = -n * gamma / (2 * (k + 1))
    total = 0.0
    start, chunk = 1, 1024
    while start <= t_max:
        t = np.arange(start, start + chunk, dtype=float)
        total += 0.5 * float(np.sum(np.exp(-c * (gamma + m * t) ** 2 / t)))
        last = start + chunk - 1
        log_tail = math.log(0.5) + lead + (last + 1) * log_q - math.log(-math.expm1(log_q))
        ref = target if target is not None else total
        if ref > 0 and log_tail < math.log(SERIES_RTOL * ref):
            return total
        if ref == 0 and log_tail < -745:
            return total
        start = last + 1
        chunk = min(chunk * 2, 1 << 20)
    raise SeriesError(f"error series not converged by t={t_max} (gamma={gamma}, r={r})")


def _smallest_feasible(target: float, model, r, hi: float) -> float:
    """Smallest gamma >= 0 with error_series(gamma) <= target, by bisection.

    Returns the feasible end of the final bracket.
    """
    f = lambda g: error_series(g, model, r, target=target) - target  # noqa: E731
    if f(0.0) <= 0:
        return 0.0
    lo = 0.0
    while f(hi) > 0:
        lo, hi = hi, 2 * hi
        if hi > 1e12:
            raise SeriesError("root bracket failure")
    while hi - lo > BISECT_ATOL:
        mid = 0.5 * (lo + hi)
        if f(mid) <= 0:
            hi = mid
        else:
            lo = mid
    return hi


def cisprt_thresholds_tightened(e: ErrorSpec, model: GaussianShiftModel, r: float) -> ThresholdSet:
    """Numerically tightened CISPRT thresholds.

    Upper and lower are solved independently against alpha and beta. The
    search runs over ``[0, 10 * closed_form_upper]``; when the constraint
    already holds at zero the threshold is 0.
    """
    closed = cisprt_thresholds(e, model, r)
    up = _smallest_feasible(e.alpha, model, r, 10 * closed.upper)
    lo = -_smallest_feasible(e.beta, model, r, 10 * -closed.lower)
    return ThresholdSet(up, lo, ThresholdKind.CISPRT_TIGHTENED)


def universal_lower_bound(e: ErrorSpec, model: GaussianShiftModel) -> float:
    """M(alpha, beta): no admissible test has smaller E_1[T]."""
    a, b = e.alpha, e.beta
    num = (1 - b) * math.log((1 - b) / a) + b * math.log(b / (1 - a))
    return num / (model.n_agents * model.m)
