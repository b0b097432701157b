"""Combination matrices W and their contraction factor r = ||W - J||."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .graph import Graph, GraphError, is_connected, is_connected_traversal, laplacian

log = logging.getLogger(__name__)

ROW_SUM_TOL = 1e-10
SYM_TOL = 1e-12


class WeightError(ValueError):
    pass


@dataclass(frozen=True)
class Violation:
    prop: str
    detail: str


@dataclass(frozen=True)
class WeightMatrix:
    """Symmetric stochastic W with r = ||W - J||.

    ``violations`` lists tolerated A4 departures (negative self-weights of
    the constant-weight design).
    """

    w: np.ndarray
    r: float
    delta: Optional[float] = None
    violations: tuple = ()

    @property
    def n_agents(self) -> int:
        return self.w.shape[0]

    def to_csv(self, path, header: Optional[str] = None) -> None:
        lines = [f"# {header}"] if header else []
        lines += [",".join(f"{x:.17g}" for x in row) for row in self.w]
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


def averaging_matrix(n: int) -> np.ndarray:
    return np.full((n, n), 1.0 / n)


def contraction_factor(w) -> float:
    """Spectral norm of ``W - J``; for symmetric stochastic W this is the
    second largest eigenvalue magnitude of W."""
    w = np.asarray(w.w if isinstance(w, WeightMatrix) else w, dtype=float)
    d = w - averaging_matrix(w.shape[0])
    ev = np.linalg.eigvalsh((d + d.T) / 2)
    return float(np.max(np.abs(ev)))


def validate_a4(w, g: Graph) -> list[Violation]:
    """Check nonnegativity, symmetry, support, stochasticity, irreducibility
    and ``r < 1``. Returns an empty list when all hold."""
    w = np.asarray(w, dtype=float)
    n = g.n_agents
    if w.shape != (n, n):
        return [Violation("shape", f"expected ({n}, {n}), got {w.shape}")]
    out = []
    if w.min() < 0:
        i, j = np.unravel_index(np.argmin(w), w.shape)
        out.append(Violation("nonnegativity", f"w[{i},{j}] = {w[i, j]:.6g}"))
    asym = np.abs(w - w.T)
    if asym.max() > SYM_TOL:
        i, j = np.unravel_index(np.argmax(asym), w.shape)
        out.append(Violation("symmetry", f"|w[{i},{j}] - w[{j},{i}]| = {asym[i, j]:.3g}"))
    off_support = (g.adjacency == 0) & ~np.eye(n, dtype=bool) & (w != 0)
    if off_support.any():
        i, j = np.argwhere(off_support)[0]
        out.append(Violation("support", f"w[{i},{j}] = {w[i, j]:.6g} but ({i},{j}) is not an edge"))
    rows = np.abs(w.sum(axis=1) - 1.0)
    if rows.max() > ROW_SUM_TOL:
        i = int(np.argmax(rows))
        out.append(Violation("stochastic", f"row {i} sums to {w[i].sum():.17g}"))
    support = Graph.from_adjacency(((w != 0) | (w.T != 0)).astype(float) * (1 - np.eye(n)))
    if not is_connected_traversal(support):
        out.append(Violation("irreducible", "support graph of W is disconnected"))
    r = contraction_factor(w)
    if r >= 1 - ROW_SUM_TOL:
        out.append(Violation("r<1", f"||W - J|| = {r:.17g}"))
    return out


def from_matrix(w, g: Graph) -> WeightMatrix:
    """Wrap an externally designed W after checking it against the graph."""
    w = np.array(w, dtype=float)
    bad = validate_a4(w, g)
    if bad:
        raise WeightError("; ".join(f"{v.prop}: {v.detail}" for v in bad))
    w.setflags(write=False)
    return WeightMatrix(w, contraction_factor(w))


def constant_weight_design(g: Graph, delta: float) -> WeightMatrix:
    """W = I - delta * L, admissible for ``0 < delta < 2 / lambda_N``.

    Rows sum to one and r < 1 on that range, but self-weights turn negative
    once ``delta > 1 / max_degree``; such W are accepted with the
    nonnegativity violation recorded.
    """
    if g.n_agents == 1:
        return WeightMatrix(np.ones((1, 1)), 0.0, delta)
    if not is_connected(g):
        raise GraphError("constant-weight design needs a connected graph")
    sp = g.spectrum
    if not 0 < delta < 2.0 / sp.lambda_max:
        raise WeightError(f"delta={delta} outside (0, {2.0 / sp.lambda_max})")
    w = np.eye(g.n_agents) - delta * laplacian(g)
    bad = validate_a4(w, g)
    # delta > 1/d_max makes self-weights negative; the analysis only needs
    # symmetry, stochasticity and r < 1, so that one is tolerated
    fatal = [v for v in bad if v.prop != "nonnegativity"]
    if fatal:
        raise WeightError("; ".join(f"{v.prop}: {v.detail}" for v in fatal))
    if bad:
        log.info("constant-weight W has negative entries (delta=%g): %s", delta, bad[0].detail)
    r = max(abs(1 - delta * sp.fiedler), abs(1 - delta * sp.lambda_max))
    w.setflags(write=False)
    return WeightMatrix(w, float(r), delta, tuple(bad))


def optimal_constant_weight(g: Graph) -> WeightMatrix:
    """Constant link weight delta = 2 / (lambda_2 + lambda_N), which minimizes r."""
    if g.n_agents == 1:
        return WeightMatrix(np.ones((1, 1)), 0.0, 0.0)
    if not is_connected(g):
        raise GraphError("graph is disconnected: lambda_2 = 0 gives r = 1")
    sp = g.spectrum
    return constant_weight_design(g, 2.0 / (sp.fiedler + sp.lambda_max))
