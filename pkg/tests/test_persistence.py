import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_graph
from pdperm.errors import FormatError, SchemaError
from pdperm.graphio import Graph
from pdperm.persistence import (Kind, PersistenceDiagram, diagram_stats, extended_pd, read_diagrams,
                                reduce_extended, sublevel_pd0, superlevel_pd0, write_diagrams)

P3 = Graph(3, [(0, 1), (1, 2)])
TRIANGLE = Graph(3, [(0, 1), (1, 2), (0, 2)])


def pts(d, kind):
    return sorted(map(tuple, d.of_kind(kind).tolist()))


class TestSublevel:
    def test_path(self):
        d = sublevel_pd0(P3, [1, 3, 2])
        assert pts(d, "sub0") == [(1, 3), (2, 3)]

    def test_constant(self):
        assert pts(sublevel_pd0(TRIANGLE, [4, 4, 4]), "sub0") == [(4, 4)]

    def test_two_edges(self):
        d = sublevel_pd0(Graph(4, [(0, 1), (2, 3)]), [0, 1, 2, 3])
        assert pts(d, "sub0") == [(0, 1), (2, 3)]

    def test_orientation(self, rng):
        for _ in range(20):
            g = random_graph(rng, 10, 0.3)
            d = sublevel_pd0(g, rng.integers(0, 5, 10))
            assert (d.births <= d.deaths).all()
            assert (d.kinds == Kind.SUB0).all()


class TestSuperlevel:
    def test_path(self):
        assert pts(superlevel_pd0(P3, [1, 3, 2]), "sup0") == [(3, 1)]

    def test_constant(self):
        assert pts(superlevel_pd0(P3, [2, 2, 2]), "sup0") == [(2, 2)]

    def test_duality(self, rng):
        for _ in range(30):
            g = random_graph(rng, 9, 0.35)
            f = rng.normal(size=9)
            sup = superlevel_pd0(g, f)
            sub = sublevel_pd0(g, -f)
            assert sorted(map(tuple, sup.points.tolist())) == sorted(map(tuple, (-sub.points).tolist()))
            assert (sup.births >= sup.deaths).all()


class TestExtended:
    def test_triangle(self):
        d = extended_pd(TRIANGLE, [0, 1, 2])
        assert pts(d, "ext0") == [(0, 2)] and pts(d, "ext1") == [(2, 0)]
        assert pts(d, "ord0") == [] and pts(d, "rel1") == []

    def test_path(self):
        d = extended_pd(P3, [1, 3, 2])
        assert pts(d, "ord0") == [(2, 3)] and pts(d, "ext0") == [(1, 3)]
        assert pts(d, "rel1") == [] and pts(d, "ext1") == []

    def test_betti_four(self):
        # K_{2,4} has 8 edges and 6 vertices: B1 = 3; add one chord for 4
        g = Graph(6, [(a, b) for a in (0, 1) for b in (2, 3, 4, 5)] + [(2, 3)])
        assert len(extended_pd(g, np.arange(6.0)).of_kind("ext1")) == 4

    def test_oracle_trivia(self):
        assert pts(reduce_extended(Graph(3, []), [3, 1, 2]), "ext0") == [(1, 1), (2, 2), (3, 3)]
        assert pts(reduce_extended(Graph(2, [(0, 1)]), [0, 1]), "ext0") == [(0, 1)]

    def test_matches_oracle(self, rng):
        for _ in range(150):
            n = int(rng.integers(1, 13))
            g = random_graph(rng, n, float(rng.choice([0.2, 0.5, 0.8])))
            f = rng.integers(0, 6, n).astype(float)
            assert extended_pd(g, f).same_multiset(reduce_extended(g, f))

    def test_real_values_match_oracle(self, rng):
        for _ in range(40):
            g = random_graph(rng, 10, 0.4)
            f = rng.normal(size=10)
            assert extended_pd(g, f).same_multiset(reduce_extended(g, f))

    def test_counts(self, rng):
        for _ in range(50):
            g = random_graph(rng, int(rng.integers(1, 20)), 0.25)
            d = extended_pd(g, rng.normal(size=g.n_vertices))
            assert len(d.of_kind("ext0")) == g.components()[0]
            assert len(d.of_kind("ext1")) == g.betti1()

    def test_orientations(self, rng):
        for _ in range(30):
            g = random_graph(rng, 12, 0.4)
            d = extended_pd(g, rng.integers(0, 4, 12))
            up = np.isin(d.kinds, [Kind.ORD0, Kind.EXT0])
            assert (d.births[up] <= d.deaths[up]).all()
            assert (d.births[~up] >= d.deaths[~up]).all()


@given(st.integers(0, 10_000), st.floats(-50, 50), st.floats(0.1, 20))
def test_translation_and_scale(seed, c, lam):
    r = np.random.default_rng(seed)
    g = random_graph(r, 8, 0.45)
    f = r.integers(0, 5, 8).astype(float)
    base = extended_pd(g, f).canonical()
    moved = extended_pd(g, lam * f + c).canonical()
    assert np.array_equal(base.kinds, moved.kinds)
    assert np.allclose(lam * base.births + c, moved.births)
    assert np.allclose(lam * base.deaths + c, moved.deaths)


@given(st.integers(0, 10_000))
def test_relabel_invariance(seed):
    r = np.random.default_rng(seed)
    g = random_graph(r, 9, 0.4)
    f = r.integers(0, 4, 9).astype(float)
    perm = r.permutation(9)
    f2 = np.empty_like(f)
    f2[perm] = f
    h = g.relabel(perm)
    assert extended_pd(g, f).same_multiset(extended_pd(h, f2))
    assert sublevel_pd0(g, f).same_multiset(sublevel_pd0(h, f2))
    assert superlevel_pd0(g, f).same_multiset(superlevel_pd0(h, f2))


class TestStats:
    def test_examples(self):
        assert diagram_stats(PersistenceDiagram.from_points([(0, 10), (0, 0.5)])) == (2, 1)
        assert diagram_stats(PersistenceDiagram.from_points([(0, 1), (2, 3), (5, 4)])) == (3, 0)
        assert diagram_stats(PersistenceDiagram.empty()) == (0, 0)


class TestIo:
    def test_round_trip(self, tmp_path, rng):
        ds = []
        for i in range(5):
            g = random_graph(rng, 8, 0.4)
            ds.append(extended_pd(g, rng.normal(size=8), dataset="toy", graph_id=str(i), filtration="rand"))
        ds.append(PersistenceDiagram.empty(dataset="toy", graph_id="e", filtration="rand", fake=True))
        write_diagrams(ds, str(tmp_path / "d.txt"))
        back = read_diagrams(str(tmp_path / "d.txt"))
        assert len(back) == len(ds)
        for a, b in zip(ds, back):
            assert a.same_multiset(b) and a.provenance == b.provenance

    def test_schema_mismatch(self, tmp_path):
        (tmp_path / "d.txt").write_text("## pdperm-diagrams/0\n# a b c true\n")
        with pytest.raises(SchemaError):
            read_diagrams(str(tmp_path / "d.txt"))

    def test_bad_line(self, tmp_path):
        (tmp_path / "d.txt").write_text("# a b c true\nord0 1\n")
        with pytest.raises(FormatError):
            read_diagrams(str(tmp_path / "d.txt"))
