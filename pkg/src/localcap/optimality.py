"""Numeric witnesses of grid optimality.

The derivative of the origin reception area with respect to a linear
deformation of the transmitter set is the 2x2 matrix
D = sum_i z_i (x) grad_i(sigma_0), estimated here with central finite
differences of re-traced areas.  On an optimal grid D is symmetric with
tr(D) = 2*sigma_0, and T = sigma_0*I - D vanishes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .area_tracer import TracerConfig, trace_boundary
from .point_processes import TransmitterSet
from .sir_field import FieldContext

_ORIGIN_TOL = 1e-9


@dataclass(frozen=True)
class DeformationReport:
    """D and T = sigma0*I - D with their symmetry/trace residuals."""

    D: np.ndarray
    T: np.ndarray
    sigma0: float
    asymmetry: float
    trace_residual: float
    truncation_radius: float
    fd_step: float

    @property
    def t_frobenius(self) -> float:
        return float(np.linalg.norm(self.T))


def _area_with_shift(ctx: FieldContext, i0: int, j: int, delta: np.ndarray,
                     cfg: TracerConfig) -> float:
    pts = ctx.transmitters.points.copy()
    pts[j] = pts[j] + delta
    ts = TransmitterSet(pts, ctx.transmitters.extent)
    shifted = FieldContext(ts, ctx.params, ctx.interference_cutoff)
    return trace_boundary(shifted, i0, cfg).area


def grad_sigma_wrt_transmitter(ctx: FieldContext, i: int,
                               cfg: TracerConfig | None = None,
                               h: float | None = None,
                               measured: int | None = None) -> np.ndarray:
    """Central-difference gradient of the measured zone's area with
    respect to the position of transmitter i.

    `measured` defaults to the transmitter at the origin.
    """
    cfg = cfg or TracerConfig()
    i0 = _origin_like_index(ctx) if measured is None else measured
    if h is None:
        _, dist = _nearest_spacing(ctx, i0)
        h = dist / 1e4
    gx = (_area_with_shift(ctx, i0, i, np.array([h, 0.0]), cfg)
          - _area_with_shift(ctx, i0, i, np.array([-h, 0.0]), cfg)) / (2 * h)
    gy = (_area_with_shift(ctx, i0, i, np.array([0.0, h]), cfg)
          - _area_with_shift(ctx, i0, i, np.array([0.0, -h]), cfg)) / (2 * h)
    return np.array([gx, gy])


def _origin_like_index(ctx: FieldContext) -> int:
    r2 = ctx.xs ** 2 + ctx.ys ** 2
    i0 = int(np.argmin(r2))
    if r2[i0] > (_ORIGIN_TOL * ctx.transmitters.extent.side) ** 2:
        raise ValueError("deformation checks need a transmitter at "
                         "the origin")
    return i0


def _nearest_spacing(ctx: FieldContext, i: int) -> tuple[int, float]:
    zx, zy = ctx.xs[i], ctx.ys[i]
    r2 = (ctx.xs - zx) ** 2 + (ctx.ys - zy) ** 2
    r2[i] = math.inf
    j = int(np.argmin(r2))
    return j, math.sqrt(float(r2[j]))


def deformation_matrices(ctx: FieldContext,
                         cfg: TracerConfig | None = None,
                         truncation_radius: float | None = None,
                         h: float | None = None) -> DeformationReport:
    """D = sum_{|z_i| <= R} z_i (x) grad_i(sigma_0), T = sigma0*I - D.

    The infinite sum is truncated at `truncation_radius` (default 6x the
    origin transmitter's nearest spacing); beyond it the finite-
    difference gradients drop below noise.
    """
    cfg = cfg or TracerConfig()
    i0 = _origin_like_index(ctx)
    _, spacing = _nearest_spacing(ctx, i0)
    if truncation_radius is None:
        truncation_radius = 6.0 * spacing
    if h is None:
        h = spacing / 1e4
    sigma0 = trace_boundary(ctx, i0, cfg).area
    r = np.hypot(ctx.xs, ctx.ys)
    indices = [int(j) for j in np.flatnonzero(r <= truncation_radius)
               if j != i0]
    D = np.zeros((2, 2))
    for j in indices:
        grad = grad_sigma_wrt_transmitter(ctx, j, cfg, h, measured=i0)
        D += np.outer(ctx.transmitters.points[j], grad)
    T = sigma0 * np.eye(2) - D
    return DeformationReport(
        D=D, T=T, sigma0=sigma0,
        asymmetry=abs(float(D[0, 1] - D[1, 0])),
        trace_residual=abs(float(np.trace(D)) - 2.0 * sigma0),
        truncation_radius=float(truncation_radius), fd_step=float(h))


DEFORMATION_CSV_HEADER = ("sigma0,D_xx,D_xy,D_yx,D_yy,T_xx,T_xy,T_yx,T_yy,"
                          "asymmetry,trace_residual,t_frobenius,"
                          "truncation_radius,fd_step")


def write_deformation_csv(report: DeformationReport, path) -> None:
    vals = [report.sigma0, *report.D.ravel(), *report.T.ravel(),
            report.asymmetry, report.trace_residual, report.t_frobenius,
            report.truncation_radius, report.fd_step]
    with open(path, "w") as fh:
        fh.write(DEFORMATION_CSV_HEADER + "\n")
        fh.write(",".join(f"{v:.9g}" for v in vals) + "\n")
