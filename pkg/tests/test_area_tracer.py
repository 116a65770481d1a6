import json
import math

import numpy as np
import pytest

from localcap import (FieldContext, GridKind, MapExtent, SirParams,
                      TracerConfig, TransmitterSet, area_from_trace,
                      generate_grid, origin_index, rasterization_area,
                      save_trace_csv, trace_boundary)
from localcap.area_tracer import (bisect_seed, newton_seed, shoelace_area,
                                  seed_boundary_point)
from localcap.errors import (OpenTraceError, SeedFailureError,
                             WindowOverflowError)
from localcap.sir_field import sir_at


def apollonius_ctx(K, alpha, D=100.0):
    pts = np.array([[0.0, 0.0], [D, 0.0]])
    ts = TransmitterSet(pts, MapExtent(4 * D))
    return FieldContext(ts, SirParams(K, alpha), interference_cutoff=np.inf)


def apollonius_area(K, alpha, D=100.0):
    rho = K ** (1.0 / alpha)
    return math.pi * rho ** 2 * D ** 2 / (rho ** 2 - 1.0) ** 2


class TestApollonius:
    @pytest.mark.parametrize("K,alpha", [(10.0, 4.0), (4.0, 3.0),
                                         (10.0, 6.0)])
    def test_traced_area(self, K, alpha):
        ctx = apollonius_ctx(K, alpha)
        trace = trace_boundary(ctx, 0)
        want = apollonius_area(K, alpha)
        assert trace.closed
        assert trace.area == pytest.approx(want, rel=1e-4)

    def test_area_dot_cross_check(self):
        ctx = apollonius_ctx(10.0, 4.0)
        trace = trace_boundary(ctx, 0)
        assert trace.area_dot == pytest.approx(trace.area, rel=5e-3)

    def test_boundary_is_circle(self):
        # Apollonius: the level set is a circle centered on the foci axis
        ctx = apollonius_ctx(10.0, 4.0)
        trace = trace_boundary(ctx, 0)
        rho2 = 10.0 ** (2.0 / 4.0)
        center = np.array([-100.0 / (rho2 - 1.0), 0.0])
        radius = 100.0 * math.sqrt(rho2) / (rho2 - 1.0)
        r = np.hypot(*(trace.vertices - center).T)
        assert np.max(np.abs(r - radius)) / radius < 1e-6


class TestSeeding:
    def test_newton_equals_bisect(self):
        ctx = apollonius_ctx(10.0, 4.0)
        zn = newton_seed(ctx, 0)
        zb = bisect_seed(ctx, 0)
        assert np.allclose(zn, zb, atol=1e-6)

    def test_seed_on_level_set(self):
        ctx = apollonius_ctx(10.0, 4.0)
        z = seed_boundary_point(ctx, 0)
        assert sir_at(ctx, 0, z) == pytest.approx(10.0, rel=1e-9)

    def test_single_transmitter_fails(self):
        pts = np.array([[0.0, 0.0]])
        ctx = FieldContext(TransmitterSet(pts, MapExtent(100.0)),
                           SirParams(10.0, 4.0), interference_cutoff=np.inf)
        with pytest.raises(ValueError):
            seed_boundary_point(ctx, 0)

    def test_exact_single_interferer_radius(self):
        # r0 = D/(1 + K^(1/alpha)) is exact for one interferer
        ctx = apollonius_ctx(10.0, 4.0)
        z = newton_seed(ctx, 0)
        want = 100.0 / (1.0 + 10.0 ** 0.25)
        assert np.hypot(*z) == pytest.approx(want, rel=1e-9)


class TestTraceOnGrids:
    def grid_ctx(self, kind="triangular"):
        ts = generate_grid(GridKind(kind), 25.0, MapExtent(500.0))
        return FieldContext(ts, SirParams(10.0, 4.0)), origin_index(ts)

    def test_dt_convergence(self):
        ctx, i0 = self.grid_ctx()
        a1 = trace_boundary(ctx, i0, TracerConfig()).area
        r0 = float(np.hypot(*seed_boundary_point(ctx, i0)))
        a2 = trace_boundary(ctx, i0, TracerConfig(dt=r0 / 200.0)).area
        assert abs(a1 - a2) / a2 <= 1e-3

    def test_level_set_adherence(self):
        ctx, i0 = self.grid_ctx()
        cfg = TracerConfig()
        trace = trace_boundary(ctx, i0, cfg)
        worst = max(abs(sir_at(ctx, i0, v) - 10.0) / 10.0
                    for v in trace.vertices[1:])
        assert worst <= 10.0 * cfg.newton_tol

    def test_translation_equivariance(self):
        ctx, i0 = self.grid_ctx("square")
        area0 = trace_boundary(ctx, i0).area
        shift = np.array([7.0, 3.0])
        ts = TransmitterSet(ctx.transmitters.points + shift,
                            MapExtent(600.0))
        ctx2 = FieldContext(ts, ctx.params, ctx.interference_cutoff)
        area1 = trace_boundary(ctx2, i0).area
        assert area1 == pytest.approx(area0, rel=1e-9)

    def test_symmetry_across_grid_rotation(self):
        # the origin zone of the square grid has 4-fold symmetry: areas
        # around four symmetric non-origin transmitters agree
        ts = generate_grid(GridKind.SQUARE, 25.0, MapExtent(500.0))
        ctx = FieldContext(ts, SirParams(10.0, 4.0))
        areas = []
        for target in ([25.0, 0.0], [-25.0, 0.0], [0.0, 25.0], [0.0, -25.0]):
            i = int(np.argmin((ctx.xs - target[0]) ** 2
                              + (ctx.ys - target[1]) ** 2))
            areas.append(trace_boundary(ctx, i).area)
        assert np.ptp(areas) / np.mean(areas) < 1e-9

    def test_open_trace_raises(self):
        ctx, i0 = self.grid_ctx()
        with pytest.raises(OpenTraceError):
            trace_boundary(ctx, i0, TracerConfig(max_steps=100))

    def test_area_from_trace(self):
        ctx, i0 = self.grid_ctx()
        trace = trace_boundary(ctx, i0)
        assert area_from_trace(trace, ctx.position(i0)) == trace.area


class TestRasterization:
    def test_apollonius_cell_convergence(self):
        ctx = apollonius_ctx(10.0, 4.0)
        want = apollonius_area(10.0, 4.0)
        # the level circle reaches 128.5 m from the transmitter
        coarse = rasterization_area(ctx, 0, cell=100.0 / 500.0, window=280.0)
        fine = rasterization_area(ctx, 0, cell=100.0 / 1000.0, window=280.0)
        assert coarse == pytest.approx(want, rel=5e-3)
        assert abs(fine - coarse) / coarse < 3e-3

    def test_window_overflow(self):
        ctx = apollonius_ctx(10.0, 4.0)
        # zone diameter ~62 m; a 201 m window is fine, the region around
        # a tight window must hit the edge
        with pytest.raises(WindowOverflowError):
            rasterization_area(ctx, 0, cell=0.5, window=201.0)

    def test_window_precondition(self):
        ctx = apollonius_ctx(10.0, 4.0)
        with pytest.raises(ValueError):
            rasterization_area(ctx, 0, cell=0.5, window=150.0)


def test_shoelace_triangle():
    tri = np.array([[0.0, 0.0], [4.0, 0.0], [0.0, 3.0]])
    assert shoelace_area(tri, [1.0, 1.0]) == pytest.approx(6.0)


def test_save_trace_csv(tmp_path):
    ctx = apollonius_ctx(10.0, 4.0)
    trace = trace_boundary(ctx, 0)
    path = tmp_path / "boundary.csv"
    save_trace_csv(trace, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "k,x,y"
    assert len(lines) == len(trace.vertices) + 1
    meta = json.loads((tmp_path / "boundary.csv.json").read_text())
    assert meta["closed"] is True
    assert meta["area"] == pytest.approx(trace.area)
    assert meta["steps"] == trace.steps


def test_tracer_config_validation():
    with pytest.raises(ValueError):
        TracerConfig(dt=-1.0)
    with pytest.raises(ValueError):
        TracerConfig(max_steps=10)
    with pytest.raises(ValueError):
        TracerConfig(dt=1.0, closure_tol=0.1).resolved(10.0)
