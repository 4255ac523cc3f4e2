from fractions import Fraction

import numpy as np
import pytest

from conftest import random_graph
from oracles import brute_ricci_edge
from pdperm.errors import ParameterError
from pdperm.filtration import (closeness, compute_filtration, degree_function, extend_to_edges, fiedler_squared,
                               geodesic_from, ollivier_ricci, read_vertex_function, ricci_edge_curvatures,
                               write_vertex_function)
from pdperm.graphio import Graph, dumbbell_mesh

P3 = Graph(3, [(0, 1), (1, 2)])
K3 = Graph(3, [(0, 1), (1, 2), (0, 2)])
STAR = Graph(4, [(0, 1), (0, 2), (0, 3)])


def complete(n):
    iu, ju = np.triu_indices(n, 1)
    return Graph(n, np.column_stack([iu, ju]))


class TestDegree:
    def test_fixtures(self):
        assert degree_function(K3).tolist() == [2, 2, 2]
        assert degree_function(STAR).tolist() == [3, 1, 1, 1]
        assert degree_function(P3).tolist() == [1, 2, 1]


class TestCloseness:
    def test_path(self):
        assert np.allclose(closeness(P3), [2 / 3, 1, 2 / 3])

    def test_complete(self):
        assert np.allclose(closeness(complete(5)), 1)

    def test_two_edges(self):
        assert np.allclose(closeness(Graph(4, [(0, 1), (2, 3)])), 1 / 3)

    def test_isolated(self):
        assert closeness(Graph(3, [(0, 1)]))[2] == 0


class TestFiedler:
    def test_path(self):
        assert np.allclose(fiedler_squared(P3), [0.5, 0, 0.5], atol=1e-12)

    def test_edge(self):
        assert np.allclose(fiedler_squared(Graph(2, [(0, 1)])), [0.5, 0.5])

    def test_random_graphs(self, rng):
        for _ in range(30):
            g = random_graph(rng, int(rng.integers(2, 15)), 0.4)
            f = fiedler_squared(g)
            assert (f >= 0).all() and abs(f.sum() - 1) < 1e-9

    def test_automorphism_symmetry(self):
        # cycle C6: every pair of vertices is swapped by some automorphism
        f = fiedler_squared(Graph(6, [(i, (i + 1) % 6) for i in range(6)]))
        assert np.allclose(f, f[0], atol=1e-8)

    def test_disconnected(self):
        f = fiedler_squared(Graph(5, [(0, 1), (2, 3), (3, 4)]))
        assert np.allclose(f[:2], f[0]) and np.allclose(f[2:], f[2])
        assert abs(f.sum() - 1) < 1e-12

    def test_iterative_path_matches_dense(self, rng):
        import pdperm.filtration as flt

        g = random_graph(rng, 40, 0.2)
        while g.components()[0] > 1:
            g = random_graph(rng, 40, 0.2)
        dense = fiedler_squared(g)
        old = flt.DENSE_EIGEN_LIMIT
        flt.DENSE_EIGEN_LIMIT = 10
        try:
            sparse = fiedler_squared(g)
        finally:
            flt.DENSE_EIGEN_LIMIT = old
        assert np.allclose(dense, sparse, atol=1e-8)


class TestRicci:
    def test_edge_graph(self):
        assert np.allclose(ollivier_ricci(Graph(2, [(0, 1)]), alpha=0.5), 1.0)

    def test_path_lazy_free(self):
        kappa = ricci_edge_curvatures(P3, alpha=0.0)
        expected = brute_ricci_edge(P3.adjacency().toarray(), 0, 1, Fraction(0))
        assert np.allclose(kappa, expected, atol=1e-9)
        assert np.allclose(ollivier_ricci(P3, alpha=0.0), [kappa[0], kappa.mean(), kappa[1]])

    def test_against_assignment_oracle(self, rng):
        for _ in range(40):
            n = int(rng.integers(2, 9))
            g = random_graph(rng, n, float(rng.choice([0.3, 0.5, 0.8])))
            if g.n_edges == 0:
                continue
            alpha = Fraction(int(rng.integers(0, 4)), 4)
            kappa = ricci_edge_curvatures(g, float(alpha))
            adj = g.adjacency().toarray()
            ref = [brute_ricci_edge(adj, int(x), int(y), alpha) for x, y in g.edges]
            assert np.allclose(kappa, ref, atol=1e-9)
            assert (kappa <= 1 + 1e-12).all()

    def test_reductions(self):
        g = Graph(4, [(0, 1), (1, 2), (2, 3), (1, 3)])
        kappa = ricci_edge_curvatures(g)
        assert ollivier_ricci(g, reduce="min")[1] == kappa[[0, 1, 2]].min()
        assert ollivier_ricci(g, reduce="max")[1] == kappa[[0, 1, 2]].max()
        with pytest.raises(ParameterError):
            ollivier_ricci(g, reduce="median")

    def test_needs_edge(self):
        with pytest.raises(ParameterError):
            ollivier_ricci(Graph(3, []))
        assert compute_filtration("ricci", Graph(3, [])).tolist() == [0, 0, 0]


class TestGeodesic:
    def test_path(self):
        assert geodesic_from(P3, 0).tolist() == [0, 1, 2]
        assert geodesic_from(P3, 1)[1] == 0

    def test_tetrahedron(self):
        assert geodesic_from(complete(4), 2).tolist() == [1, 1, 0, 1]

    def test_unreachable_sentinel(self):
        d, flag = geodesic_from(Graph(4, [(0, 1), (1, 2)]), 0, return_unreachable=True)
        assert d.tolist() == [0, 1, 2, 3] and flag.tolist() == [False, False, False, True]

    def test_negative_length(self):
        with pytest.raises(ParameterError):
            geodesic_from(P3, 0, lengths=[1, -1])

    def test_mesh_lengths(self):
        m, _ = dumbbell_mesh(0, n_rings=6, n_theta=6)
        g = m.skeleton()
        d = geodesic_from(g, 0, m.edge_lengths(g))
        assert d[0] == 0 and (d > 0).sum() == g.n_vertices - 1


class TestExtension:
    def test_directions(self):
        g = Graph(2, [(0, 1)])
        assert extend_to_edges(g, [1, 3], "sublevel").values.tolist() == [3]
        assert extend_to_edges(g, [1, 3], "superlevel").values.tolist() == [1]

    def test_constant(self):
        assert (extend_to_edges(K3, [2, 2, 2]).values == 2).all()


@pytest.mark.parametrize("name", ["degree", "closeness", "fiedler_s", "ricci"])
def test_relabel_invariance(name, rng):
    for _ in range(5):
        g = random_graph(rng, 9, 0.5)
        perm = rng.permutation(9)
        f = compute_filtration(name, g)
        f2 = compute_filtration(name, g.relabel(perm))
        assert np.allclose(f2[perm], f, atol=1e-9)


def test_vertex_function_io(tmp_path, rng):
    f = rng.normal(size=7)
    write_vertex_function(f, str(tmp_path / "f.txt"))
    assert np.array_equal(read_vertex_function(str(tmp_path / "f.txt")), f)


def test_unknown_filtration():
    with pytest.raises(ParameterError):
        compute_filtration("heat", P3)
