"""Evaluation of the SIR field over a fixed transmitter set.

S_i(z) = |z - z_i|^(-alpha) / sum_{j != i} |z - z_j|^(-alpha), plus its
analytic gradient, the bounded signal share g_i = S_i/(1+S_i), and the
count of transmitters successfully received at a point.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import SingularEvaluationError
from .kernels import impl
from .point_processes import TransmitterSet

logger = logging.getLogger(__name__)

_NN_SAMPLE_CAP = 5000


@dataclass(frozen=True)
class SirParams:
    """SIR threshold K and path-loss exponent alpha."""

    K: float
    alpha: float

    def __post_init__(self):
        if not self.K > 0:
            raise ValueError("K must be positive")
        if not self.alpha > 2:
            raise ValueError("alpha must exceed 2 for integrable interference")

    @property
    def g_threshold(self) -> float:
        """Threshold on g equivalent to S >= K."""
        return self.K / (self.K + 1.0)


def mean_nn_spacing(points: np.ndarray) -> float:
    """Mean nearest-neighbor distance (subsampled on large sets)."""
    from scipy.spatial import cKDTree

    n = len(points)
    if n < 2:
        return math.inf
    tree = cKDTree(points)
    if n > _NN_SAMPLE_CAP:
        # deterministic subsample is enough for a cutoff heuristic
        query = points[:: n // _NN_SAMPLE_CAP + 1]
    else:
        query = points
    dist, _ = tree.query(query, k=2)
    return float(dist[:, 1].mean())


@dataclass(frozen=True)
class FieldContext:
    """Immutable transmitter set + SIR parameters + interference cutoff.

    Interferers farther than `interference_cutoff` from the evaluation
    point are ignored; ``None`` resolves to 40x the mean nearest-neighbor
    spacing (math.inf disables truncation).
    """

    transmitters: TransmitterSet
    params: SirParams
    interference_cutoff: float | None = None
    xs: np.ndarray = field(init=False, repr=False)
    ys: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        cut = self.interference_cutoff
        if cut is None:
            spacing = mean_nn_spacing(self.transmitters.points)
            cut = 40.0 * spacing if math.isfinite(spacing) else math.inf
            lam = len(self.transmitters) / self.transmitters.extent.area
            if math.isfinite(cut):
                alpha = self.params.alpha
                tail = (2 * math.pi * lam * cut ** (2 - alpha)
                        / (alpha - 2))
                logger.debug("interference cutoff %.4g m, tail bound %.3g",
                             cut, tail)
        if not cut > 0:
            raise ValueError("interference cutoff must be positive")
        object.__setattr__(self, "interference_cutoff", float(cut))
        object.__setattr__(
            self, "xs", np.ascontiguousarray(self.transmitters.xs))
        object.__setattr__(
            self, "ys", np.ascontiguousarray(self.transmitters.ys))

    def __len__(self) -> int:
        return len(self.transmitters)

    @property
    def cutoff2(self) -> float:
        c = self.interference_cutoff
        return c * c if math.isfinite(c) else math.inf

    def position(self, i: int) -> np.ndarray:
        return self.transmitters.points[i].copy()


def _check_index(ctx: FieldContext, i: int) -> None:
    if not 0 <= i < len(ctx):
        raise IndexError(f"transmitter index {i} out of range")


def sir_at(ctx: FieldContext, i: int, z) -> float:
    """SIR of transmitter i at point z.

    Returns math.inf at z = z_i and +0.0 when z coincides with an
    interferer (logged as a singular evaluation).
    """
    _check_index(ctx, i)
    zx, zy = float(z[0]), float(z[1])
    status, s, _, _ = impl.sir_eval(ctx.xs, ctx.ys, i, zx, zy,
                                    ctx.params.alpha, ctx.cutoff2, False)
    if status == kernels.EVAL_ON_INTERFERER:
        logger.debug("singular SIR evaluation at interferer position "
                     "(%g, %g)", zx, zy)
        return 0.0
    return s


def sir_gradient(ctx: FieldContext, i: int, z) -> np.ndarray:
    """Analytic gradient of S_i at z (units 1/m)."""
    _check_index(ctx, i)
    zx, zy = float(z[0]), float(z[1])
    status, s, gx, gy = impl.sir_eval(ctx.xs, ctx.ys, i, zx, zy,
                                      ctx.params.alpha, ctx.cutoff2, True)
    if status != kernels.EVAL_OK or not math.isfinite(s):
        raise SingularEvaluationError(
            f"gradient undefined at ({zx}, {zy})")
    return np.array([gx, gy])


def g_value(ctx: FieldContext, i: int, z) -> float:
    """Signal share g_i(z) = S_i/(1+S_i), in [0, 1]; g_i(z_i) = 1."""
    _check_index(ctx, i)
    zx, zy = float(z[0]), float(z[1])
    return impl.g_eval(ctx.xs, ctx.ys, i, zx, zy, ctx.params.alpha,
                       ctx.cutoff2)


def count_successful(ctx: FieldContext, z) -> int:
    """Number of transmitters received with SIR >= K at z."""
    zx, zy = float(z[0]), float(z[1])
    return impl.count_at_least(ctx.xs, ctx.ys, zx, zy, ctx.params.K,
                               ctx.params.alpha, ctx.cutoff2)


def restrict_to_disk(ctx: FieldContext, center, radius: float
                     ) -> tuple[FieldContext, int]:
    """Context limited to transmitters within `radius` of `center`.

    Returns the reduced context and the new index of the transmitter
    nearest the center.  Used to keep trace cost local on huge sets.
    """
    cx, cy = float(center[0]), float(center[1])
    r2 = (ctx.xs - cx) ** 2 + (ctx.ys - cy) ** 2
    keep = np.flatnonzero(r2 <= radius * radius)
    pts = ctx.transmitters.points[keep]
    sub = TransmitterSet(pts, ctx.transmitters.extent)
    sub_ctx = FieldContext(sub, ctx.params, ctx.interference_cutoff)
    i_new = int(np.argmin(r2[keep]))
    return sub_ctx, i_new
