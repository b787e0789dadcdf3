"""
Tests for Pareto-front extraction, slack and correlation levels
"""
import warnings

import numpy as np
import pytest

from chipletrank.core import PlacementOrder
from chipletrank.errors import DegenerateSpread, EmptyScatter
from chipletrank.pareto import assign_levels, corner_sets, level_of, pareto_front, slack
from chipletrank.placer import ScatterPoint, ScatterSet


def scatter_of(pairs, name='s'):
    return ScatterSet(name, tuple(ScatterPoint(PlacementOrder((i,)), float(t), float(wl))
                                  for i, (t, wl) in enumerate(pairs)))


def brute_force_slack(arr, d_t, d_wl, i, step=0.001, limit=2.0):
    """Smallest grid value at which point i passes the relaxed test against every j, or None"""
    grid = np.arange(0.0, limit + step / 2, step)
    t, wl = arr[:, 0], arr[:, 1]
    fails = ((t[i] > t[None, :] + grid[:, None] * d_t) & (wl[i] > wl[None, :] + grid[:, None] * d_wl)).any(axis=1)
    passing = np.flatnonzero(~fails)
    return None if len(passing) == 0 else grid[passing[0]]


class TestParetoFront:

    def test_singleton(self):
        assert pareto_front(np.array([[80, 50]])) == (0,)

    def test_strict_domination(self):
        assert pareto_front(np.array([[80, 50], [90, 60]])) == (0,)

    def test_antichain(self):
        assert pareto_front(np.array([[80, 60], [90, 50], [85, 55]])) == (0, 1, 2)

    def test_coincident_points_kept(self):
        assert pareto_front(np.array([[80, 50], [80, 50], [90, 60]])) == (0, 1)

    def test_scatter_input(self):
        assert pareto_front(scatter_of([(80, 50), (90, 60)])) == (0,)

    def test_empty(self):
        with pytest.raises(EmptyScatter):
            pareto_front(np.empty((0, 2)))


class TestCornerSets:

    def test_two_points(self):
        corners = corner_sets(np.array([[80, 50], [90, 60]]))

        assert corners.P == (0,)
        assert corners.Q == (1,)
        assert corners.d_t == 10
        assert corners.d_wl == 10
        assert (corners.n1, corners.n2) == (1, 1)

    def test_identical_points(self):
        corners = corner_sets(np.array([[80, 50]] * 4))

        assert corners.d_t == 0
        assert corners.d_wl == 0

    def test_antichain_fronts_coincide(self):
        corners = corner_sets(np.array([[80, 60], [90, 50]]))

        assert corners.P == corners.Q == (0, 1)
        assert corners.d_t == 0
        assert corners.d_wl == 0


class TestSlack:

    def test_pareto_point(self):
        arr = np.array([[80, 50], [90, 60]])

        assert slack(arr, corner_sets(arr), 0) == 0.0

    def test_dominated_point(self):
        arr = np.array([[80, 50], [90, 60]])

        assert slack(arr, corner_sets(arr), 1) == 1.0

    def test_matches_labeling(self):
        rng = np.random.default_rng(5)
        arr = np.column_stack([rng.uniform(80, 95, 40), rng.uniform(1e4, 3e4, 40)])
        labeled = assign_levels(scatter_of(arr))

        for i in range(len(arr)):
            assert slack(arr, labeled.corners, i) == pytest.approx(labeled.slack[i], abs=1e-12)

    def test_degenerate_warns(self):
        arr = np.array([[80, 60], [90, 50]])

        with pytest.warns(DegenerateSpread):
            assert slack(arr, corner_sets(arr), 0) == 0.0

    @pytest.mark.parametrize('seed', range(20))
    def test_grid_oracle(self, seed):
        """Test closed-form slack equals the smallest passing relaxation on a 0.001 grid"""
        rng = np.random.default_rng(seed)
        n = int(rng.integers(20, 201))
        arr = np.column_stack([rng.uniform(70, 100, n), rng.uniform(5e3, 9e4, n)])
        labeled = assign_levels(scatter_of(arr))
        corners = labeled.corners

        for i in range(n):
            expected = brute_force_slack(arr, corners.d_t, corners.d_wl, i)
            if expected is None:
                assert labeled.slack[i] > 2.0
            else:
                assert abs(expected - labeled.slack[i]) <= 0.001 + 1e-9

    @pytest.mark.slow
    @pytest.mark.parametrize('seed', range(100, 150))
    def test_grid_oracle_extended(self, seed):
        self.test_grid_oracle(seed)

    def test_scale_covariance(self):
        """Test affine rescaling of either objective leaves slack unchanged"""
        rng = np.random.default_rng(11)
        arr = np.column_stack([rng.uniform(80, 95, 60), rng.uniform(1e4, 3e4, 60)])
        scaled = np.column_stack([arr[:, 0] * 1.8 + 32, arr[:, 1] / 1000.0])

        a = assign_levels(scatter_of(arr))
        b = assign_levels(scatter_of(scaled))

        np.testing.assert_allclose(a.slack, b.slack, atol=1e-9)

    @pytest.mark.parametrize('column', [0, 1], ids=['temperature', 'wirelength'])
    @pytest.mark.parametrize('bump', [0.01, 0.7, 5.0, 300.0])
    def test_worse_objective_never_lowers_slack(self, column, bump):
        """Test raising one point's T (or WL) with the corner means held fixed never reduces its slack"""
        rng = np.random.default_rng(17)
        arr = np.column_stack([rng.uniform(80, 95, 80), rng.uniform(1e4, 3e4, 80)])
        corners = corner_sets(arr)

        for i in range(len(arr)):
            worse = arr.copy()
            worse[i, column] += bump
            assert slack(worse, corners, i) >= slack(arr, corners, i) - 1e-12


class TestLevels:

    @pytest.mark.parametrize('d, level', [
        (0.0, 10), (0.05, 10), (0.1, 9), (0.3, 7), (0.7, 3), (0.95, 1), (1.0, 0), (3.5, 0),
    ])
    def test_level_of(self, d, level):
        assert level_of(d) == level

    def test_two_points(self):
        labeled = assign_levels(scatter_of([(80, 50), (90, 60)]))

        assert labeled.slack.tolist() == [0.0, 1.0]
        assert labeled.level.tolist() == [10, 0]

    def test_pareto_points_level_ten(self):
        """Test front points get level 10; the corner point dominated by all of them gets d = 1"""
        labeled = assign_levels(scatter_of([(80, 70), (85, 60), (90, 50), (95, 80)]))

        assert labeled.corners.P == (0, 1, 2)
        assert labeled.corners.Q == (3,)
        assert labeled.level.tolist() == [10, 10, 10, 0]

    def test_single_point(self):
        with warnings.catch_warnings():
            warnings.simplefilter('error')
            labeled = assign_levels(scatter_of([(80, 50)]))

        assert labeled.level.tolist() == [10]

    def test_identical_points_warn(self):
        with pytest.warns(DegenerateSpread):
            labeled = assign_levels(scatter_of([(80, 50)] * 5))

        assert labeled.slack.tolist() == [0.0] * 5
        assert labeled.level.tolist() == [10] * 5

    def test_histogram_sums_to_points(self):
        rng = np.random.default_rng(2)
        labeled = assign_levels(scatter_of(np.column_stack([rng.uniform(80, 90, 720), rng.uniform(1, 2, 720)])))
        histogram = labeled.histogram()

        assert len(histogram) == 11
        assert histogram.sum() == 720
