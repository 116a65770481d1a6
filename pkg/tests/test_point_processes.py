import math

import numpy as np
import pytest
from scipy.spatial import cKDTree

from localcap import (GridKind, MapExtent, NodeSet, TransmitterSet, density,
                      generate_grid, load_points_csv, origin_index,
                      sample_coloring, sample_csma, sample_poisson,
                      sample_uniform_nodes, save_points_csv)
from localcap.errors import DegenerateExtentError
from localcap.point_processes import csma_truncation_radius


def nn_distances(pts):
    tree = cKDTree(pts)
    d, _ = tree.query(pts, k=2)
    return d[:, 1]


class TestGrids:
    def test_square_density_exact(self):
        ts = generate_grid(GridKind.SQUARE, 25.0, MapExtent(1000.0))
        assert len(ts) == 41 * 41
        assert density(ts) == pytest.approx(1.0 / 625.0, abs=0.0)

    def test_triangular_density(self):
        ts = generate_grid(GridKind.TRIANGULAR, 25.0, MapExtent(1000.0))
        expect = 2.0 / (math.sqrt(3.0) * 625.0)
        assert density(ts) == pytest.approx(expect, rel=0.02)

    def test_hexagonal_density(self):
        ts = generate_grid(GridKind.HEXAGONAL, 25.0, MapExtent(1000.0))
        # row pitches don't divide the window side, so the finite count
        # carries a few percent of boundary excess
        expect = 4.0 / (3.0 * math.sqrt(3.0) * 625.0)
        assert density(ts) == pytest.approx(expect, rel=0.04)

    @pytest.mark.parametrize("kind", list(GridKind))
    def test_nearest_neighbor_is_d(self, kind):
        ts = generate_grid(kind, 25.0, MapExtent(500.0))
        # interior points only: the clipped edge rows may lose neighbors
        interior = np.all(np.abs(ts.points) < 200.0, axis=1)
        dists = nn_distances(ts.points)[interior]
        assert np.allclose(dists, 25.0, rtol=1e-9)

    @pytest.mark.parametrize("kind", list(GridKind))
    def test_origin_point_and_canonical_order(self, kind):
        a = generate_grid(kind, 25.0, MapExtent(600.0))
        b = generate_grid(kind, 25.0, MapExtent(600.0))
        assert np.array_equal(a.points, b.points)
        i0 = origin_index(a)
        assert np.allclose(a.points[i0], 0.0, atol=1e-12)
        # lexicographic by (y, x)
        keys = np.lexsort((a.xs, a.ys))
        assert np.array_equal(keys, np.arange(len(a)))

    def test_small_extent_rejected(self):
        with pytest.raises(DegenerateExtentError):
            generate_grid(GridKind.SQUARE, 25.0, MapExtent(90.0))

    def test_bad_spacing_rejected(self):
        with pytest.raises(ValueError):
            generate_grid(GridKind.SQUARE, -1.0, MapExtent(500.0))


class TestPoisson:
    def test_mean_and_variance(self):
        rng = np.random.default_rng(1)
        counts = [len(sample_poisson(0.01, MapExtent(100.0), rng))
                  for _ in range(3000)]
        counts = np.asarray(counts, dtype=float)
        assert counts.mean() == pytest.approx(100.0, rel=0.05)
        assert counts.var() / counts.mean() == pytest.approx(1.0, rel=0.05)

    def test_points_inside_extent(self):
        rng = np.random.default_rng(2)
        ts = sample_poisson(0.01, MapExtent(100.0), rng)
        assert np.all(np.abs(ts.points) <= 50.0)

    def test_bad_intensity(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError):
            sample_poisson(0.0, MapExtent(100.0), rng)


class TestColoring:
    def setup_method(self):
        rng = np.random.default_rng(7)
        self.nodes = sample_uniform_nodes(0.05, MapExtent(400.0), rng)
        self.ts = sample_coloring(self.nodes, 25.0, rng)

    def test_exclusion_distance(self):
        assert np.all(nn_distances(self.ts.points) >= 25.0)

    def test_maximality(self):
        # every node is admitted or within d of an admitted transmitter
        tree = cKDTree(self.ts.points)
        d, _ = tree.query(self.nodes.points, k=1)
        assert np.all(d < 25.0)

    def test_deterministic_given_rng(self):
        a = sample_coloring(self.nodes, 25.0, np.random.default_rng(3))
        b = sample_coloring(self.nodes, 25.0, np.random.default_rng(3))
        assert np.array_equal(a.points, b.points)

    def test_empty_nodes(self):
        empty = NodeSet(np.empty((0, 2)), MapExtent(100.0))
        ts = sample_coloring(empty, 25.0, np.random.default_rng(0))
        assert len(ts) == 0


class TestCsma:
    theta = 1e-5
    alpha = 4.0

    def setup_method(self):
        rng = np.random.default_rng(11)
        self.nodes = sample_uniform_nodes(0.05, MapExtent(400.0), rng)
        self.rng_used = np.random.default_rng(12)
        self.ts = sample_csma(self.nodes, self.theta, self.alpha,
                              self.rng_used, r_int=math.inf)

    def interference(self, targets, sources):
        diff = targets[:, None, :] - sources[None, :, :]
        r = np.hypot(diff[..., 0], diff[..., 1])
        with np.errstate(divide="ignore"):
            p = np.where(r > 0, r ** -self.alpha, 0.0)
        return p.sum(axis=1)

    def test_rejected_nodes_sense_threshold(self):
        admitted_set = {tuple(p) for p in self.ts.points}
        rejected = np.array([p for p in self.nodes.points
                             if tuple(p) not in admitted_set])
        acc = self.interference(rejected, self.ts.points)
        # each rejected node already sensed >= theta at its turn; the
        # final admitted set can only add interference
        assert np.all(acc >= self.theta * (1.0 - 1e-12))

    def test_admission_order_consistent(self):
        # replay the admission sequentially and compare
        rng = np.random.default_rng(12)
        order = rng.permutation(len(self.nodes))
        admitted = []
        for idx in order:
            z = self.nodes.points[idx]
            if not admitted:
                admitted.append(idx)
                continue
            acc = self.interference(z[None, :],
                                    self.nodes.points[admitted])[0]
            if acc < self.theta:
                admitted.append(idx)
        assert np.array_equal(self.nodes.points[admitted], self.ts.points)

    def test_truncation_radius(self):
        r = csma_truncation_radius(self.theta, self.alpha)
        assert r ** -self.alpha == pytest.approx(1e-3 * self.theta, rel=1e-9)

    def test_bad_params(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError):
            sample_csma(self.nodes, 0.0, 4.0, rng)
        with pytest.raises(ValueError):
            sample_csma(self.nodes, 1e-5, 2.0, rng)


class TestValidation:
    def test_extent_positive(self):
        with pytest.raises(ValueError):
            MapExtent(0.0)

    def test_points_must_fit_extent(self):
        with pytest.raises(ValueError):
            TransmitterSet(np.array([[60.0, 0.0]]), MapExtent(100.0))

    def test_points_shape(self):
        with pytest.raises(ValueError):
            TransmitterSet(np.zeros((3, 3)), MapExtent(100.0))

    def test_points_finite(self):
        with pytest.raises(ValueError):
            TransmitterSet(np.array([[np.nan, 0.0]]), MapExtent(100.0))


def test_csv_round_trip(tmp_path):
    rng = np.random.default_rng(5)
    ts = sample_poisson(0.01, MapExtent(200.0), rng)
    path = tmp_path / "points.csv"
    save_points_csv(ts, path)
    header = path.read_text().splitlines()[0]
    assert header == "x,y"
    back = load_points_csv(path, ts.extent)
    assert len(back) == len(ts)
    assert np.allclose(back.points, ts.points, rtol=1e-8, atol=1e-6)
