import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cisprt.graph import (Graph, GraphError, is_connected, is_connected_spectral,
                          is_connected_traversal, laplacian, random_geometric, spectrum)


def test_laplacian_path():
    np.testing.assert_array_equal(laplacian(Graph.path(3)), [[1, -1, 0], [-1, 2, -1], [0, -1, 1]])


def test_laplacian_complete_and_empty():
    L = laplacian(Graph.complete(3))
    np.testing.assert_array_equal(np.diag(L), [2, 2, 2])
    assert np.all(L[~np.eye(3, dtype=bool)] == -1)
    np.testing.assert_array_equal(laplacian(Graph(3, frozenset())), np.zeros((3, 3)))


@pytest.mark.parametrize("n", [2, 3, 5, 8, 13])
def test_path_spectrum_closed_form(n):
    expected = np.sort(4 * np.sin(np.arange(n) * np.pi / (2 * n)) ** 2)
    np.testing.assert_allclose(spectrum(Graph.path(n)).eigenvalues, expected, atol=1e-12)


def test_p3_spectrum():
    np.testing.assert_allclose(spectrum(Graph.path(3)).eigenvalues, [0, 1, 3], atol=1e-12)


def test_complete_spectrum():
    ev = spectrum(Graph.complete(6)).eigenvalues
    np.testing.assert_allclose(ev, [0] + [6] * 5, atol=1e-12)


def test_disconnected_pair():
    g = Graph(2, frozenset())
    sp = spectrum(g)
    np.testing.assert_array_equal(sp.eigenvalues, [0, 0])
    assert sp.fiedler == 0
    assert not is_connected(g)


def test_connectivity_examples():
    assert is_connected(Graph.path(3))
    assert is_connected(Graph.complete(30))
    assert not is_connected(Graph(2, frozenset()))


def test_simple_graph_rejects_self_loop():
    with pytest.raises(GraphError):
        Graph.from_edges(3, [(1, 1)])


def test_duplicate_edges_collapse():
    g = Graph.from_edges(3, [(0, 1), (1, 0)])
    assert g.edges == {(0, 1)}
    a = g.adjacency
    assert np.array_equal(a, a.T) and np.all(np.diag(a) == 0)


def test_rgg_single_vertex():
    g = random_geometric(1, 0.3, seed=0)
    assert g.n_agents == 1 and not g.edges and is_connected(g)


def test_rgg_radius_beyond_diameter():
    for seed in range(20):
        assert random_geometric(2, 1.5, seed=seed).edges == {(0, 1)}


def test_rgg_edges_match_distances():
    g = random_geometric(40, 0.35, seed=11)
    d = np.linalg.norm(g.positions[:, None] - g.positions[None], axis=-1)
    expect = {(i, j) for i in range(40) for j in range(i + 1, 40) if d[i, j] <= 0.35}
    assert g.edges == expect
    assert np.all((g.positions > 0) & (g.positions < 1))


def test_rgg_seed_reproducible():
    assert random_geometric(50, 0.3, seed=9).edges == random_geometric(50, 0.3, seed=9).edges


def test_rgg_gives_up():
    with pytest.raises(GraphError, match="radius too small"):
        random_geometric(50, 0.01, seed=0, max_resamples=5)


def test_edgelist_roundtrip(tmp_path):
    g = random_geometric(12, 0.5, seed=4)
    g.to_edgelist(tmp_path / "g.edges")
    first = (tmp_path / "g.edges").read_text().splitlines()[0]
    assert first.startswith("# {") and '"seed": 4' in first
    h = Graph.from_edgelist(tmp_path / "g.edges")
    assert h == g and h.meta["radius"] == 0.5


@settings(max_examples=200, deadline=None)
@given(n=st.integers(1, 9), p=st.floats(0.0, 1.0), seed=st.integers(0, 2**32 - 1))
def test_spectral_and_traversal_connectivity_agree(n, p, seed):
    rng = np.random.default_rng(seed)
    a = np.triu((rng.random((n, n)) < p).astype(float), 1)
    g = Graph.from_adjacency(a + a.T)
    assert is_connected_spectral(g) == is_connected_traversal(g)
    ev = g.spectrum.eigenvalues
    assert abs(ev[0]) < 1e-9 and np.all(ev >= -1e-9)


@pytest.mark.parametrize("seed", range(25))
def test_generated_graphs_connectivity_agree(seed):
    g = random_geometric(30, 0.3, seed=seed)
    assert is_connected_spectral(g) and is_connected_traversal(g)


@settings(max_examples=150, deadline=None)
@given(n=st.integers(2, 8), p=st.floats(0.0, 1.0), seed=st.integers(0, 2**32 - 1), data=st.data())
def test_adding_edge_never_decreases_fiedler(n, p, seed, data):
    rng = np.random.default_rng(seed)
    a = np.triu((rng.random((n, n)) < p).astype(float), 1)
    g = Graph.from_adjacency(a + a.T)
    missing = [(i, j) for i in range(n) for j in range(i + 1, n) if (i, j) not in g.edges]
    if not missing:
        return
    i, j = data.draw(st.sampled_from(missing))
    before = np.linalg.eigvalsh(laplacian(g))[1]
    after = np.linalg.eigvalsh(laplacian(g.with_edge(i, j)))[1]
    assert after >= before - 1e-10
