"""Acceptance gate: twelve end-to-end checks at desk scale.

Desk scale means a 1000 m map side (40x the 25 m spacing), 500 Monte
Carlo samples, and the reference operating point K = 10, alpha = 4.
Each test prints one summary line; the expensive Monte Carlo table is
shared across the tests that need it.
"""

import math

import numpy as np
import pytest

from localcap import (FieldContext, GridKind, MapExtent, ProtocolSpec,
                      SirParams, TracerConfig, TransmitterSet,
                      aloha_capacity, aloha_sigma, coverage_capacity,
                      deformation_matrices, density, generate_grid,
                      grid_capacity, monte_carlo_capacity, origin_index,
                      rasterization_area, ratios_to_triangular,
                      sample_coloring, sample_csma, sample_uniform_nodes,
                      sir_at, sir_gradient, sweep, trace_boundary,
                      write_capacity_csv)
from localcap.capacity import _pick_central, _sample_rng
from localcap.sir_field import g_value, restrict_to_disk

D = 25.0
SIDE = 1000.0
SAMPLES = 500
EXTENT = MapExtent(SIDE)
PARAMS = SirParams(K=10.0, alpha=4.0)


def report(num, detail):
    print(f"acceptance {num:02d} PASS: {detail}")


@pytest.fixture(scope="module")
def grid_caps():
    return {kind: grid_capacity(kind, PARAMS, D).capacity
            for kind in ("triangular", "square", "hexagonal")}


@pytest.fixture(scope="module")
def mc_table():
    specs = {
        "aloha": ProtocolSpec.aloha(0.0016),
        "coloring": ProtocolSpec.coloring(D, 0.1),
        "csma": ProtocolSpec.csma(1e-5, 0.1),
    }
    return {name: monte_carlo_capacity(spec, PARAMS, EXTENT,
                                       samples=SAMPLES, seed=0)
            for name, spec in specs.items()}


def test_criterion_01_aloha_closed_form():
    got = aloha_capacity(PARAMS)
    want = (2.0 / math.pi) * 10.0 ** -0.5
    assert abs(got - want) <= 1e-9
    report(1, f"aloha closed form {got:.9f} (expected {want:.9f})")


def test_criterion_02_aloha_monte_carlo(mc_table):
    assert 0.0016 * EXTENT.area >= 200  # enough transmitters per map
    got = mc_table["aloha"].capacity
    want = aloha_capacity(PARAMS)
    rel = abs(got - want) / want
    assert rel <= 0.05
    report(2, f"aloha MC {got:.5f} vs closed {want:.5f} (rel {rel:.2%})")


def test_criterion_03_apollonius():
    worst = 0.0
    for K, alpha in ((10.0, 4.0), (4.0, 3.0), (10.0, 6.0)):
        pts = np.array([[0.0, 0.0], [100.0, 0.0]])
        ctx = FieldContext(TransmitterSet(pts, MapExtent(600.0)),
                           SirParams(K, alpha),
                           interference_cutoff=math.inf)
        rho = K ** (1.0 / alpha)
        want = math.pi * rho ** 2 * 100.0 ** 2 / (rho ** 2 - 1.0) ** 2
        got = trace_boundary(ctx, 0).area
        worst = max(worst, abs(got - want) / want)
    assert worst <= 0.005
    report(3, f"Apollonius worst relative error {worst:.2e}")


def test_criterion_04_tracer_vs_rasterization():
    cases = []
    for kind in ("triangular", "square", "hexagonal"):
        ts = generate_grid(GridKind(kind), D, EXTENT)
        cases.append((kind, FieldContext(ts, PARAMS), origin_index(ts),
                      80.0))
    for name, spec_seed in (("coloring", 0), ("csma", 1)):
        rng = _sample_rng(7, spec_seed)
        nodes = sample_uniform_nodes(0.1, EXTENT, rng)
        if name == "coloring":
            ts = sample_coloring(nodes, D, rng)
        else:
            ts = sample_csma(nodes, 1e-5, PARAMS.alpha, rng)
        i = _pick_central(ts, _sample_rng(7, spec_seed, 1))
        ctx, i = restrict_to_disk(FieldContext(ts, PARAMS), ts.points[i],
                                  400.0)
        cases.append((name, ctx, i, 140.0))
    worst = 0.0
    for name, ctx, i, window in cases:
        traced = trace_boundary(ctx, i).area
        raster = rasterization_area(ctx, i, cell=window / 1200.0,
                                    window=window)
        worst = max(worst, abs(traced - raster) / raster)
    assert worst <= 0.01
    report(4, f"tracer vs rasterization worst disagreement {worst:.2e} "
              f"over {len(cases)} cases")


def test_criterion_05_pattern_ordering(grid_caps, mc_table):
    tri = grid_caps["triangular"]
    assert tri > grid_caps["square"]
    assert tri > grid_caps["hexagonal"]
    col = mc_table["coloring"].capacity
    csma = mc_table["csma"].capacity
    aloha = mc_table["aloha"].capacity
    assert tri > col >= csma > aloha
    report(5, f"ordering tri {tri:.4f} > sq {grid_caps['square']:.4f}, "
              f"hex {grid_caps['hexagonal']:.4f}; tri > coloring "
              f"{col:.4f} >= csma {csma:.4f} > aloha {aloha:.4f}")


def test_criterion_06_factor_two_bound():
    rows = sweep([ProtocolSpec.grid("triangular", D),
                  ProtocolSpec.aloha(0.0016)],
                 k_values=range(2, 15), alpha_values=[4.0], samples=0)
    ratios = [r for K, a, p, r in ratios_to_triangular(rows)
              if p == "aloha"]
    assert len(ratios) == 13
    assert min(ratios) >= 0.5
    assert max(ratios) < 1.0
    report(6, f"aloha/triangular over K=2..14 in "
              f"[{min(ratios):.4f}, {max(ratios):.4f}]")


def test_criterion_07_exclusion_efficiency(grid_caps, mc_table):
    tri = grid_caps["triangular"]
    col = mc_table["coloring"].capacity / tri
    csma = mc_table["csma"].capacity / tri
    assert 0.80 <= col <= 0.95
    assert 0.80 <= csma <= 0.95
    gap = col - csma
    assert 0.0 <= gap <= 0.06
    report(7, f"coloring {col:.3f}, csma {csma:.3f} of triangular; "
              f"gap {gap * 100:.1f} pp")


def test_criterion_08_packing_density():
    vals = []
    for s in range(8):
        rng = np.random.default_rng(100 + s)
        nodes = sample_uniform_nodes(1.0, EXTENT, rng)
        ts = sample_coloring(nodes, D, rng)
        vals.append(math.pi * density(ts) * (D / 2.0) ** 2)
    packing = float(np.mean(vals))
    assert 0.53 <= packing <= 0.57
    report(8, f"saturated coloring packing density {packing:.4f}")


def test_criterion_09_voronoi_limit():
    caps = {}
    for alpha in (100.0, 200.0):
        params = SirParams(10.0, alpha)
        row = {kind: grid_capacity(kind, params, D).capacity
               for kind in ("triangular", "square", "hexagonal")}
        row["aloha"] = aloha_capacity(params)
        for name, spec in (("coloring", ProtocolSpec.coloring(D, 0.1)),
                           ("csma", ProtocolSpec.csma(1e-5, 0.1))):
            row[name] = coverage_capacity(spec, params, EXTENT,
                                          samples=150, seed=0,
                                          points_per_sample=32).capacity
        caps[alpha] = row
    for name, a in caps[100.0].items():
        b = caps[200.0][name]
        assert 0.9 <= a <= 1.01, f"{name} at alpha=100: {a}"
        assert abs(1.0 - b) <= abs(1.0 - a), f"{name}: {a} -> {b}"
    line = ", ".join(f"{n} {caps[100.0][n]:.3f}->{caps[200.0][n]:.3f}"
                     for n in caps[100.0])
    report(9, f"alpha 100 -> 200: {line}")


def test_criterion_10_homothety():
    c1 = grid_capacity("triangular", PARAMS, D, MapExtent(40 * D)).capacity
    c2 = grid_capacity("triangular", PARAMS, 2 * D,
                       MapExtent(80 * D)).capacity
    rel = abs(c1 - c2) / c1
    assert rel <= 1e-6
    # the closed form carries an explicit 1/lambda, so c is lambda-free
    assert aloha_sigma(2.0, PARAMS) * 2.0 == pytest.approx(
        aloha_sigma(1.0, PARAMS), rel=1e-12)
    report(10, f"d -> 2d capacity shift {rel:.2e}; aloha lambda-free")


def test_criterion_11_theory_witnesses():
    details = []
    for kind in ("triangular", "square"):
        ts = generate_grid(GridKind(kind), D, EXTENT)
        ctx = FieldContext(ts, PARAMS)
        base = deformation_matrices(ctx)
        s0 = base.sigma0
        assert base.asymmetry <= 0.01 * s0
        assert base.trace_residual <= 0.02 * s0
        assert base.t_frobenius <= 0.03 * s0
        fine = deformation_matrices(ctx, truncation_radius=12 * D,
                                    h=base.fd_step / 2.0)
        noise = 0.005 * s0
        assert fine.asymmetry <= base.asymmetry + noise
        assert fine.trace_residual <= base.trace_residual + noise
        details.append(f"{kind} |T|_F {base.t_frobenius / s0:.2%} -> "
                       f"{fine.t_frobenius / s0:.2%}")
    report(11, "; ".join(details))


def test_criterion_12_property_suite(tmp_path):
    rng = np.random.default_rng(12)
    # analytic gradient against central differences
    checked = 0
    while checked < 100:
        pts = rng.uniform(-50, 50, size=(10, 2))
        ctx = FieldContext(TransmitterSet(pts, MapExtent(100.0)),
                           SirParams(10.0, rng.uniform(2.5, 8.0)),
                           interference_cutoff=math.inf)
        z = rng.uniform(-40, 40, 2)
        if np.hypot(ctx.xs - z[0], ctx.ys - z[1]).min() < 2.0:
            continue
        grad = sir_gradient(ctx, 0, z)
        h = 1e-5
        fd = np.array([
            sir_at(ctx, 0, z + [h, 0]) - sir_at(ctx, 0, z - [h, 0]),
            sir_at(ctx, 0, z + [0, h]) - sir_at(ctx, 0, z - [0, h]),
        ]) / (2 * h)
        assert np.linalg.norm(fd - grad) <= 1e-6 * max(
            np.linalg.norm(grad), 1e-12)
        checked += 1
    # partition of unity
    pts = rng.uniform(-50, 50, size=(12, 2))
    ctx = FieldContext(TransmitterSet(pts, MapExtent(100.0)), PARAMS,
                       interference_cutoff=math.inf)
    for _ in range(20):
        z = rng.uniform(-45, 45, 2)
        total = sum(g_value(ctx, i, z) for i in range(len(ctx)))
        assert abs(total - 1.0) <= 1e-9
    # exclusion and maximality invariants
    nodes = sample_uniform_nodes(0.05, MapExtent(400.0), rng)
    ts = sample_coloring(nodes, D, np.random.default_rng(5))
    from scipy.spatial import cKDTree

    pair = cKDTree(ts.points).query(ts.points, k=2)[0][:, 1]
    assert np.all(pair >= D)
    near = cKDTree(ts.points).query(nodes.points, k=1)[0]
    assert np.all(near < D)
    # determinism: bitwise equal estimates and byte-identical CSV output
    spec = ProtocolSpec.coloring(D, 0.1)
    runs = []
    for name in ("a.csv", "b.csv"):
        est = monte_carlo_capacity(spec, PARAMS, MapExtent(500.0),
                                   samples=10, seed=21)
        path = tmp_path / name
        write_capacity_csv(
            [type("R", (), {"protocol": "coloring", "K": 10.0,
                            "alpha": 4.0, "estimate": est})()], path)
        runs.append((est, path.read_bytes()))
    assert runs[0][0] == runs[1][0]
    assert runs[0][1] == runs[1][1]
    report(12, "gradient-FD x100, partition of unity, exclusion "
               "invariants, determinism byte-identity")
