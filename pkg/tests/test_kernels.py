import numpy as np
import pytest

from conftest import random_diagram
from oracles import fisher_oracle
from pdperm.errors import ParameterError
from pdperm.kernels import (KernelSpec, base_matrix, cross_gram, fisher_distance, gram, k_pf, k_pss, k_pwg, k_sw,
                            kernel_distance, kernel_distance_matrix, pwg_embedding_distance, read_gram_csv,
                            sliced_wasserstein, slice_angles, write_gram_csv)
from pdperm.persistence import PersistenceDiagram

ONE = PersistenceDiagram.from_points([(0.0, 1.0)])
EMPTY = PersistenceDiagram.empty()

SPECS = [KernelSpec("sw", sigma=1.0), KernelSpec("pss", t=0.5), KernelSpec("pwg", rho=1.0, K_w=1.0, tau=1.0),
         KernelSpec("pf", t=1.0, tau=0.5)]


def pt(*points):
    return PersistenceDiagram.from_points(points)


class TestSlicedWasserstein:
    def test_angles(self):
        assert np.allclose(slice_angles(4), [-np.pi / 2, -np.pi / 4, 0, np.pi / 4])

    def test_hand_example(self):
        # slices at -pi/2 and 0; the point and its diagonal projection differ by 0.5 on both
        assert sliced_wasserstein(ONE, EMPTY, 2) == pytest.approx(0.5)
        assert k_sw(ONE, EMPTY, 1.0, 2) == pytest.approx(np.exp(-0.25))

    def test_identity_and_symmetry(self, rng):
        for _ in range(20):
            a, b = random_diagram(rng), random_diagram(rng)
            assert k_sw(a, a, 0.7) == 1.0
            assert k_sw(a, b, 0.7) == k_sw(b, a, 0.7)

    def test_slice_convergence(self, rng):
        a, b = random_diagram(rng, 8), random_diagram(rng, 8)
        while len(a) < 3 or len(b) < 3:
            a, b = random_diagram(rng, 8), random_diagram(rng, 8)
        vals = [k_sw(a, b, 1.0, n) for n in (10, 20, 40, 80, 160, 320)]
        steps = np.abs(np.diff(vals))
        assert (np.diff(steps) < 0).all()

    def test_matrix_matches_pairs(self, rng):
        ds = [random_diagram(rng) for _ in range(6)]
        g = gram(ds, KernelSpec("sw", sigma=0.5)).values
        assert g[2, 5] == pytest.approx(k_sw(ds[2], ds[5], 0.5), abs=1e-12)


class TestPss:
    def test_hand_example(self):
        assert k_pss(ONE, ONE, 1.0) == pytest.approx((1 - np.exp(-0.25)) / 8, abs=1e-15)

    def test_empty(self, rng):
        assert k_pss(EMPTY, random_diagram(rng), 0.3) == 0

    def test_diagonal_points_vanish(self, rng):
        for _ in range(20):
            a, b = random_diagram(rng), random_diagram(rng)
            a2 = a.with_points(np.append(a.births, 1.3), np.append(a.deaths, 1.3), np.append(a.kinds, 0))
            assert abs(k_pss(a2, b, 0.4) - k_pss(a, b, 0.4)) < 1e-12
            assert abs(k_pss(b, a2, 0.4) - k_pss(b, a, 0.4)) < 1e-12


class TestPwg:
    def test_single_point_norm(self):
        for K in (0.1, 1.0, 10.0):
            assert pwg_embedding_distance(ONE, EMPTY, 1.0, K) == pytest.approx(np.arctan(K) ** 2)

    def test_identity_and_symmetry(self, rng):
        a, b = random_diagram(rng), random_diagram(rng)
        assert k_pwg(a, a, 1.0, 1.0, 1.0) == 1.0
        assert k_pwg(a, b, 1.0, 1.0, 0.5) == pytest.approx(k_pwg(b, a, 1.0, 1.0, 0.5), abs=1e-15)

    def test_unsquared(self):
        d2 = np.arctan(1.0) ** 2
        assert k_pwg(ONE, EMPTY, 1.0, 1.0, 1.0, squared=False) == pytest.approx(np.exp(-np.sqrt(d2) / 2))
        with pytest.raises(ParameterError):
            k_pwg(ONE, EMPTY, 0.0, 1.0, 1.0)


class TestPf:
    def test_identity(self, rng):
        a = random_diagram(rng)
        assert k_pf(a, a, 1.0, 0.5) == 1.0

    @pytest.mark.parametrize("augment", ["self", "cross"])
    def test_oracle(self, rng, augment):
        for _ in range(40):
            a, b = random_diagram(rng, 5), random_diagram(rng, 5)
            if len(a) == 0 or len(b) == 0:
                continue
            tau = float(rng.choice([0.1, 0.5, 2.0]))
            assert fisher_distance(a, b, tau, augment) == pytest.approx(fisher_oracle(a.points, b.points, tau, augment),
                                                                       abs=1e-7)

    def test_far_singletons(self):
        a, b = pt((0.0, 1.0)), pt((50.0, 52.0))
        assert fisher_distance(a, b, 0.01, "cross") == pytest.approx(fisher_oracle(a.points, b.points, 0.01), abs=1e-9)
        assert fisher_distance(a, b, 0.01) == pytest.approx(np.pi / 2)

    def test_scaled_measures(self):
        # duplicating every point leaves the normalized measure unchanged
        a = pt((0, 1), (2, 4))
        assert fisher_distance(a, pt((0, 1), (0, 1), (2, 4), (2, 4)), 0.3) == pytest.approx(0, abs=1e-7)

    def test_bad_parameters(self):
        with pytest.raises(ParameterError):
            k_pf(ONE, ONE, 0.0, 1.0)
        with pytest.raises(ParameterError):
            fisher_distance(ONE, ONE, 1.0, "both")

    def test_gram_uses_shared_support(self, rng):
        ds = [random_diagram(rng) for _ in range(5)]
        g = gram(ds, KernelSpec("pf", t=1.0, tau=0.5)).values
        assert np.allclose(np.diag(g), 1) and (g <= 1 + 1e-12).all()


class TestGram:
    def test_one_by_one(self, rng):
        assert gram([random_diagram(rng)], KernelSpec("sw", sigma=1.0)).values.tolist() == [[1.0]]

    @pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.name)
    def test_psd_and_symmetric(self, spec):
        rng = np.random.default_rng(7)
        for _ in range(50):
            ds = [random_diagram(rng, 7) for _ in range(20)]
            g = gram(ds, spec)
            assert np.array_equal(g.values, g.values.T)
            assert g.min_eigenvalue() >= -1e-8
            if spec.name != "pss":
                assert (g.values <= np.diag(g.values)[:, None] + 1e-12).all()

    @pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.name)
    def test_duplicates(self, spec, rng):
        ds = [random_diagram(rng) for _ in range(4)]
        g = gram(ds + ds[:2], spec).values
        assert np.array_equal(g[0], g[4]) and np.array_equal(g[1], g[5])

    @pytest.mark.parametrize("spec", SPECS[:3], ids=lambda s: s.name)
    def test_cross_gram_matches(self, spec, rng):
        ds = [random_diagram(rng) for _ in range(6)]
        full = gram(ds, spec).values
        assert np.allclose(cross_gram(ds[:2], ds[2:], spec), full[:2, 2:], atol=1e-12)

    def test_base_cache(self, rng):
        ds = [random_diagram(rng) for _ in range(5)]
        m1 = base_matrix(ds, KernelSpec("sw", sigma=1.0))
        m2 = base_matrix(ds, KernelSpec("sw", sigma=3.0))
        assert m1 is m2

    def test_unknown_kernel(self):
        with pytest.raises(ParameterError):
            KernelSpec("rbf", gamma=1.0)

    def test_csv_round_trip(self, tmp_path, rng):
        g = gram([random_diagram(rng) for _ in range(5)], KernelSpec("pss", t=0.1), list("abcde"))
        write_gram_csv(g, str(tmp_path / "g.csv"))
        back = read_gram_csv(str(tmp_path / "g.csv"))
        assert np.array_equal(back.values, g.values) and back.item_ids == g.item_ids
        assert back.descriptor == g.descriptor


class TestKernelDistance:
    def test_basic(self, rng):
        a, b = random_diagram(rng), random_diagram(rng)
        fn = lambda x, y: k_sw(x, y, 1.0)
        assert kernel_distance(fn, a, a) == 0
        assert kernel_distance(fn, a, b) == pytest.approx(np.sqrt(2 * (1 - fn(a, b))))
        assert kernel_distance(fn, a, b) == kernel_distance(fn, b, a)

    @pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.name)
    def test_triangle(self, spec):
        rng = np.random.default_rng(3)
        ds = [random_diagram(rng) for _ in range(15)]
        d = kernel_distance_matrix(gram(ds, spec).values)
        assert (d[:, None, :] <= d[:, :, None] + d[None, :, :] + 1e-9).all()
