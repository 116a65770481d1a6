"""Reception-area boundary tracing and area quadrature.

The boundary C(z_i, K, alpha) of the region where transmitter i is
received with SIR >= K is walked with a tangent predictor (clockwise
pi/2 rotation of the unit SIR gradient) plus a Newton corrector along
the gradient.  The enclosed area comes from the shoelace sum over the
closed polyline; the dot-product quadrature of the walk is kept as a
cross-check.  A brute-force rasterization serves as the independent
oracle.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .errors import (DegenerateGradientError, OpenTraceError,
                     SeedFailureError, SingularEvaluationError,
                     WindowOverflowError)
from .kernels import impl
from .sir_field import FieldContext, sir_at, sir_gradient

_MIN_CLOSURE_STEPS = 10


@dataclass(frozen=True)
class TracerConfig:
    """Step control for the boundary walk.

    dt / closure_tol of ``None`` resolve per-trace to seed_distance/100
    and 0.75*dt respectively.
    """

    dt: float | None = None
    max_steps: int = 1_000_000
    closure_tol: float | None = None
    newton_tol: float = 1e-10
    newton_max_iters: int = 30
    corrector_enabled: bool = True

    def __post_init__(self):
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.max_steps < 100:
            raise ValueError("max_steps must be at least 100")
        if not self.newton_tol > 0:
            raise ValueError("newton_tol must be positive")

    def resolved(self, seed_distance: float) -> "TracerConfig":
        dt = self.dt if self.dt is not None else seed_distance / 100.0
        tol = self.closure_tol if self.closure_tol is not None else 0.75 * dt
        if tol < dt / 2.0:
            raise ValueError("closure_tol must be at least dt/2")
        return replace(self, dt=dt, closure_tol=tol)


@dataclass(frozen=True)
class BoundaryTrace:
    """Closed (or abandoned) polyline along S_i = K with its area."""

    vertices: np.ndarray
    area: float
    area_dot: float
    closed: bool
    steps: int


def shoelace_area(vertices: np.ndarray, z_i) -> float:
    """(1/2)|sum det(v_k - z_i, v_{k+1} - v_k)| over the closed polygon."""
    v = vertices - np.asarray(z_i, dtype=float)
    nxt = np.roll(v, -1, axis=0)
    cross = v[:, 0] * nxt[:, 1] - v[:, 1] * nxt[:, 0]
    return 0.5 * abs(float(cross.sum()))


def nearest_interferer(ctx: FieldContext, i: int) -> tuple[int, float]:
    """Index of and distance to the transmitter closest to z_i."""
    if len(ctx) < 2:
        raise ValueError("need at least 2 transmitters")
    zx, zy = ctx.xs[i], ctx.ys[i]
    r2 = (ctx.xs - zx) ** 2 + (ctx.ys - zy) ** 2
    r2[i] = math.inf
    j = int(np.argmin(r2))
    return j, math.sqrt(float(r2[j]))


def newton_seed(ctx: FieldContext, i: int,
                cfg: TracerConfig | None = None) -> np.ndarray:
    """Boundary point on the ray from z_i toward its nearest interferer.

    Starts Newton's method at r0 = D / (1 + K^(1/alpha)), the exact
    solution for a single interferer at distance D.
    """
    cfg = cfg or TracerConfig()
    K = ctx.params.K
    alpha = ctx.params.alpha
    j, dist = nearest_interferer(ctx, i)
    zi = ctx.position(i)
    u = (ctx.position(j) - zi) / dist
    r = dist / (1.0 + K ** (1.0 / alpha))
    for _ in range(cfg.newton_max_iters):
        z = zi + r * u
        s = sir_at(ctx, i, z)
        if abs(s - K) <= cfg.newton_tol * K:
            return z
        grad = sir_gradient(ctx, i, z)
        ds = float(grad @ u)
        if ds == 0.0 or not math.isfinite(ds):
            break
        r_new = r - (s - K) / ds
        if not (0.0 < r_new < dist):
            r_new = 0.5 * (r + (0.0 if s < K else dist))
        r = r_new
    raise SeedFailureError(
        f"Newton did not reach |S-K|/K <= {cfg.newton_tol} "
        f"in {cfg.newton_max_iters} iterations")


def bisect_seed(ctx: FieldContext, i: int,
                cfg: TracerConfig | None = None) -> np.ndarray:
    """Bisection fallback on the seed ray; the bracket always exists
    (S -> inf at z_i, S < K at the nearest interferer)."""
    cfg = cfg or TracerConfig()
    K = ctx.params.K
    j, dist = nearest_interferer(ctx, i)
    zi = ctx.position(i)
    u = (ctx.position(j) - zi) / dist
    lo, hi = 1e-9 * dist, dist * (1.0 - 1e-9)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        s = sir_at(ctx, i, zi + mid * u)
        if abs(s - K) <= cfg.newton_tol * K:
            return zi + mid * u
        if s > K:
            lo = mid
        else:
            hi = mid
    raise SeedFailureError("bisection failed to converge on the seed ray")


def seed_boundary_point(ctx: FieldContext, i: int,
                        cfg: TracerConfig | None = None) -> np.ndarray:
    """Newton seed with bisection as a fallback."""
    try:
        return newton_seed(ctx, i, cfg)
    except SeedFailureError:
        return bisect_seed(ctx, i, cfg)


def trace_boundary(ctx: FieldContext, i: int,
                   cfg: TracerConfig | None = None) -> BoundaryTrace:
    """Trace C(z_i, K, alpha) and return the closed polyline + area."""
    cfg = cfg or TracerConfig()
    z0 = seed_boundary_point(ctx, i, cfg)
    zi = ctx.position(i)
    r0 = float(np.hypot(*(z0 - zi)))
    rc = cfg.resolved(r0)
    verts, status, area_dot = impl.trace_levelset(
        ctx.xs, ctx.ys, i, ctx.params.K, ctx.params.alpha, ctx.cutoff2,
        float(z0[0]), float(z0[1]), rc.dt, rc.max_steps, _MIN_CLOSURE_STEPS,
        rc.closure_tol, rc.newton_tol, rc.newton_max_iters,
        rc.corrector_enabled)
    verts = np.asarray(verts)
    steps = len(verts) - 1
    if status == kernels.TRACE_MAX_STEPS:
        raise OpenTraceError(f"no closure after {steps} steps")
    if status == kernels.TRACE_DEGENERATE:
        raise DegenerateGradientError("SIR gradient vanished on the boundary")
    if status == kernels.TRACE_SINGULAR:
        raise SingularEvaluationError("boundary walk hit a transmitter")
    area = shoelace_area(verts, zi)
    return BoundaryTrace(vertices=verts, area=area, area_dot=area_dot,
                         closed=True, steps=steps)


def area_from_trace(trace: BoundaryTrace, z_i) -> float:
    """Shoelace area of a closed trace about z_i."""
    if not trace.closed:
        raise OpenTraceError("area is defined only for closed traces")
    return shoelace_area(trace.vertices, z_i)


def rasterization_area(ctx: FieldContext, i: int, cell: float,
                       window: float) -> float:
    """Oracle area: cells (pitch `cell`) of a `window`-sided square
    around z_i whose centers satisfy S_i >= K."""
    if cell <= 0:
        raise ValueError("cell must be positive")
    _, dist = nearest_interferer(ctx, i)
    if window < 2.0 * dist:
        raise ValueError("window must cover at least twice the "
                         "nearest-interferer distance")
    n = int(math.ceil(window / cell))
    zi = ctx.position(i)
    count, edge_hit = impl.raster_count(
        ctx.xs, ctx.ys, i, ctx.params.K, ctx.params.alpha, ctx.cutoff2,
        float(zi[0]), float(zi[1]), float(cell), n)
    if edge_hit:
        raise WindowOverflowError(
            "reception region touches the rasterization window edge")
    return count * cell * cell


def save_trace_csv(trace: BoundaryTrace, path) -> None:
    """Write vertices as `k,x,y` CSV plus a JSON summary sidecar."""
    path = str(path)
    with open(path, "w") as fh:
        fh.write("k,x,y\n")
        for k, (x, y) in enumerate(trace.vertices):
            fh.write(f"{k},{x:.9g},{y:.9g}\n")
    summary = {"area": trace.area, "area_dot": trace.area_dot,
               "steps": trace.steps, "closed": trace.closed}
    with open(path + ".json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
