"""Gaussian shift-in-mean observation model and seeded observation streams."""
from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np


class Hypothesis(IntEnum):
    H0 = 0
    H1 = 1

    @property
    def sign(self) -> float:
        return 1.0 if self is Hypothesis.H1 else -1.0


@dataclass(frozen=True)
class GaussianShiftModel:
    """Under H1 each agent observes ``mu + noise``, under H0 ``-mu + noise``,
    with i.i.d. N(0, sigma2) noise across agents and time."""

    mu: float
    sigma2: float
    n_agents: int = 1

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError(f"mu must be > 0, got {self.mu}")
        if not self.sigma2 > 0:
            raise ValueError(f"sigma2 must be > 0, got {self.sigma2}")
        if self.n_agents < 1:
            raise ValueError(f"n_agents must be >= 1, got {self.n_agents}")

    @property
    def m(self) -> float:
        """Per-agent KL divergence between the hypotheses."""
        return 2.0 * self.mu**2 / self.sigma2

    @property
    def llr_scale(self) -> float:
        """Factor mapping an observation to its log-likelihood ratio."""
        return 2.0 * self.mu / self.sigma2

    @classmethod
    def from_kl(cls, m: float, n_agents: int = 1, sigma2: float = 1.0) -> "GaussianShiftModel":
        return cls(float(np.sqrt(m * sigma2 / 2.0)), sigma2, n_agents)

    def with_agents(self, n_agents: int) -> "GaussianShiftModel":
        return GaussianShiftModel(self.mu, self.sigma2, n_agents)


def log_likelihood_ratio(model: GaussianShiftModel, y):
    return model.llr_scale * np.asarray(y, dtype=float) if np.ndim(y) else model.llr_scale * float(y)


def as_seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def substream(master_seed: int, *keys: int) -> np.random.SeedSequence:
    """Seed for one trial, fixed by the master seed and integer keys alone,
    so trials can run in any order or process."""
    return np.random.SeedSequence(master_seed, spawn_key=tuple(int(k) for k in keys))


class ObservationStream:
    """Lazily extended sequence of observation vectors y(1), y(2), ...

    Column ``i`` of every block is agent ``i``'s stream. Draws are consumed
    sequentially from a PCG64 generator, so the values do not depend on
    how the stream is chunked.
    """

    def __init__(self, model: GaussianShiftModel, h: Hypothesis, seed):
        self.model = model
        self.h = Hypothesis(h)
        self._rng = np.random.Generator(np.random.PCG64(as_seed_sequence(seed)))
        self.t = 0

    def take(self, n_steps: int) -> np.ndarray:
        """Next ``n_steps`` observation vectors, shape ``(n_steps, N)``."""
        z = self._rng.standard_normal((n_steps, self.model.n_agents))
        self.t += n_steps
        return self.h.sign * self.model.mu + np.sqrt(self.model.sigma2) * z

    def take_llr(self, n_steps: int) -> np.ndarray:
        return log_likelihood_ratio(self.model, self.take(n_steps))


def sample_observations(model: GaussianShiftModel, h: Hypothesis, t_max: int, seed) -> np.ndarray:
    """First ``t_max`` observation vectors as a ``(t_max, N)`` array."""
    if t_max < 1:
        raise ValueError("t_max must be >= 1")
    return ObservationStream(model, h, seed).take(t_max)
