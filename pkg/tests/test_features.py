import numpy as np
import pytest

from conftest import random_diagram
from pdperm.errors import ParameterError
from pdperm.features import ImageGrid, fit_image_grid, landscape, persistence_image
from pdperm.persistence import PersistenceDiagram


class TestLandscape:
    def test_tent_peak(self):
        d = PersistenceDiagram.from_points([(0, 2)])
        out = landscape(d, 2, 3, (0, 2)).reshape(2, 3)
        assert out[0].tolist() == [0, 1, 0] and out[1].tolist() == [0, 0, 0]

    def test_two_tents(self):
        d = PersistenceDiagram.from_points([(0, 2), (1, 3)])
        out = landscape(d, 2, 4, (0, 3)).reshape(2, 4)  # t = 0, 1, 2, 3
        out2 = landscape(d, 2, 2, (1.5, 2.5)).reshape(2, 2)
        assert out2[:, 0].tolist() == [0.5, 0.5]
        assert out[:, 1].tolist() == [1, 0]

    def test_superlevel_points_mirrored(self):
        up = PersistenceDiagram.from_points([(0, 2)])
        down = PersistenceDiagram.from_points([(2, 0)], "sup0")
        assert np.array_equal(landscape(up, 1, 9, (0, 2)), landscape(down, 1, 9, (0, 2)))

    def test_monotone_in_k(self, rng):
        for _ in range(100):
            out = landscape(random_diagram(rng, 10), 5, 40, (0, 8)).reshape(5, 40)
            assert (out >= 0).all() and (np.diff(out, axis=0) <= 0).all()

    def test_adding_point(self, rng):
        for _ in range(50):
            d = random_diagram(rng, 6)
            extra = d.with_points(np.append(d.births, 1.0), np.append(d.deaths, 3.5), np.append(d.kinds, 0))
            assert (landscape(extra, 4, 30, (0, 8)) >= landscape(d, 4, 30, (0, 8))).all()

    def test_errors(self):
        d = PersistenceDiagram.from_points([(0, 1)])
        with pytest.raises(ParameterError):
            landscape(d, 3, 10, (1, 1))
        with pytest.raises(ParameterError):
            landscape(d, 0, 10, (0, 1))

    def test_length(self):
        assert landscape(PersistenceDiagram.empty(), 4, 50, (0, 1)).shape == (200,)


class TestImage:
    def test_empty(self):
        grid = ImageGrid((0, 1), (0, 1), (5, 5), 0.1)
        assert (persistence_image(PersistenceDiagram.empty(), grid) == 0).all()

    def test_single_point_mass(self):
        d = PersistenceDiagram.from_points([(1.0, 3.0)])
        grid = ImageGrid((1 - 0.5, 1 + 0.5), (2 - 0.5, 2 + 0.5), (20, 20), 0.1, "death", 4.0)
        assert abs(persistence_image(d, grid).sum() - 3.0 / 4.0) < 1e-6

    def test_constant_weight_mass(self):
        d = PersistenceDiagram.from_points([(0.0, 1.0)])
        grid = ImageGrid((-1, 1), (0, 2), (30, 30), 0.1, "uniform")
        assert abs(persistence_image(d, grid).sum() - 1) < 1e-6

    def test_linearity_and_additivity(self, rng):
        for _ in range(30):
            a, b = random_diagram(rng, 5), random_diagram(rng, 5)
            grid = fit_image_grid([a, b], 10, 0.5)
            both = a.with_points(np.append(a.births, b.births), np.append(a.deaths, b.deaths),
                                 np.append(a.kinds, b.kinds))
            pa, pb, pab = (persistence_image(x, grid) for x in (a, b, both))
            assert (pa >= 0).all()
            assert np.allclose(pab, pa + pb, atol=1e-12)
        one = PersistenceDiagram.from_points([(0.5, 1.5)])
        two = PersistenceDiagram.from_points([(0.5, 1.5), (0.5, 1.5)])
        grid = fit_image_grid([one], 20, 0.2)
        assert np.allclose(persistence_image(two, grid), 2 * persistence_image(one, grid))

    def test_zero_death_is_silent(self):
        d = PersistenceDiagram.from_points([(-1.0, 0.0)])
        grid = ImageGrid((-2, 0), (0, 2), (8, 8), 0.3, "death", 1.0)
        assert (persistence_image(d, grid) == 0).all()

    def test_persistence_weight(self):
        d = PersistenceDiagram.from_points([(0.0, 2.0), (1.0, 1.0)])
        grid = ImageGrid((-2, 3), (-2, 4), (40, 40), 0.1, "persistence", 2.0)
        assert abs(persistence_image(d, grid).sum() - 1.0) < 1e-6

    def test_fit_grid_padding(self):
        grid = fit_image_grid([PersistenceDiagram.from_points([(1, 2), (3, 7)])], 20, 0.5)
        assert grid.birth_range == (1 - 1.5, 3 + 1.5) and grid.pers_range == (1 - 1.5, 4 + 1.5)
        assert grid.weight_scale == 7
