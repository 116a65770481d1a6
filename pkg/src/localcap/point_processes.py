"""Transmitter-set construction for the six medium-access models.

Grids (square, honeycomb-hexagonal, triangular), Poisson scattering for
slotted ALOHA, and the two exclusion constructions: distance coloring
and carrier-sense admission.  All randomness flows through an explicit
``numpy.random.Generator``.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateExtentError
from .kernels import impl

logger = logging.getLogger(__name__)

_EDGE_EPS_REL = 1e-9


@dataclass(frozen=True)
class Point:
    """A location on the 2D plane, in meters."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("point coordinates must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y])


@dataclass(frozen=True)
class MapExtent:
    """Square map of side `side` meters, centered at the origin."""

    side: float

    def __post_init__(self):
        if not (math.isfinite(self.side) and self.side > 0):
            raise ValueError("extent side must be positive and finite")

    @property
    def half(self) -> float:
        return self.side / 2.0

    @property
    def area(self) -> float:
        return self.side * self.side

    def contains(self, points: np.ndarray, tol: float = 0.0) -> bool:
        lim = self.half + tol
        return bool(np.all(np.abs(points) <= lim))


class GridKind(enum.Enum):
    SQUARE = "square"
    HEXAGONAL = "hexagonal"
    TRIANGULAR = "triangular"


def _check_points(points: np.ndarray, extent: MapExtent) -> np.ndarray:
    points = np.ascontiguousarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != 2:
        raise ValueError("points must be an (n, 2) array")
    if not np.all(np.isfinite(points)):
        raise ValueError("points must be finite")
    if not extent.contains(points, tol=_EDGE_EPS_REL * extent.side):
        raise ValueError("points must lie inside the extent")
    return points


@dataclass(frozen=True)
class TransmitterSet:
    """Positions of the simultaneous transmitters of one slot."""

    points: np.ndarray
    extent: MapExtent

    def __post_init__(self):
        object.__setattr__(self, "points", _check_points(self.points,
                                                         self.extent))

    def __len__(self) -> int:
        return len(self.points)

    @property
    def xs(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def ys(self) -> np.ndarray:
        return self.points[:, 1]


@dataclass(frozen=True)
class NodeSet:
    """All network nodes of one sample (the population the exclusion
    protocols select transmitters from)."""

    points: np.ndarray
    extent: MapExtent

    def __post_init__(self):
        object.__setattr__(self, "points", _check_points(self.points,
                                                         self.extent))

    def __len__(self) -> int:
        return len(self.points)


def _lattice(kind: GridKind, d: float, half: float) -> np.ndarray:
    """All lattice points with |x|, |y| <= half (small fp slack)."""
    eps = _EDGE_EPS_REL * d
    lim = half + eps
    if kind is GridKind.SQUARE:
        k = int(math.floor(lim / d))
        v = np.arange(-k, k + 1, dtype=np.float64) * d
        gx, gy = np.meshgrid(v, v)
        pts = np.column_stack((gx.ravel(), gy.ravel()))
    elif kind is GridKind.TRIANGULAR:
        # rows spaced d*sqrt(3)/2, odd rows offset by d/2
        ry = d * math.sqrt(3.0) / 2.0
        m = int(math.floor(lim / ry)) + 1
        rows = []
        for n2 in range(-m, m + 1):
            y = n2 * ry
            if abs(y) > lim:
                continue
            off = n2 * (d / 2.0)
            k0 = int(math.ceil((-lim - off) / d))
            k1 = int(math.floor((lim - off) / d))
            n1 = np.arange(k0, k1 + 1, dtype=np.float64)
            x = n1 * d + off
            rows.append(np.column_stack((x, np.full(len(x), y))))
        pts = np.concatenate(rows) if rows else np.empty((0, 2))
    elif kind is GridKind.HEXAGONAL:
        # honeycomb: triangular Bravais lattice with a two-point basis,
        # every point has 3 neighbors at distance d
        a1 = np.array([math.sqrt(3.0) * d, 0.0])
        a2 = np.array([math.sqrt(3.0) * d / 2.0, 1.5 * d])
        basis = np.array([[0.0, 0.0], [0.0, d]])
        m = int(math.ceil(2.0 * lim / d)) + 2
        n1, n2 = np.meshgrid(np.arange(-m, m + 1), np.arange(-m, m + 1))
        cell = n1.ravel()[:, None] * a1 + n2.ravel()[:, None] * a2
        pts = (cell[:, None, :] + basis[None, :, :]).reshape(-1, 2)
    else:  # pragma: no cover - exhaustive enum
        raise ValueError(f"unknown grid kind: {kind}")
    keep = (np.abs(pts[:, 0]) <= lim) & (np.abs(pts[:, 1]) <= lim)
    pts = pts[keep]
    # canonical ordering, deterministic across constructions
    order = np.lexsort((pts[:, 0], pts[:, 1]))
    return pts[order]


def generate_grid(kind: GridKind, d: float, extent: MapExtent
                  ) -> TransmitterSet:
    """All lattice points of the given pattern inside the extent.

    Nearest-neighbor distance is exactly d and one lattice point sits at
    the origin.
    """
    if d <= 0:
        raise ValueError("d must be positive")
    if extent.side < 4 * d:
        raise DegenerateExtentError(
            f"extent side {extent.side} is below 4*d = {4 * d}")
    pts = _lattice(kind, d, extent.half)
    if len(pts) < 9:
        raise DegenerateExtentError(
            f"extent holds only {len(pts)} grid points (need >= 9)")
    return TransmitterSet(pts, extent)


def origin_index(ts: TransmitterSet) -> int:
    """Index of the transmitter at the origin (grids place one there)."""
    r2 = ts.xs ** 2 + ts.ys ** 2
    idx = int(np.argmin(r2))
    if r2[idx] > (_EDGE_EPS_REL * ts.extent.side) ** 2:
        raise ValueError("no transmitter at the origin")
    return idx


def sample_poisson(lam: float, extent: MapExtent,
                   rng: np.random.Generator) -> TransmitterSet:
    """Homogeneous Poisson scatter of intensity lam over the extent."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    n = int(rng.poisson(lam * extent.area))
    pts = rng.uniform(-extent.half, extent.half, size=(n, 2))
    return TransmitterSet(pts, extent)


def sample_uniform_nodes(density: float, extent: MapExtent,
                         rng: np.random.Generator) -> NodeSet:
    """Poisson-distributed node population, uniform over the extent."""
    if density <= 0:
        raise ValueError("density must be positive")
    n = int(rng.poisson(density * extent.area))
    pts = rng.uniform(-extent.half, extent.half, size=(n, 2))
    return NodeSet(pts, extent)


def sample_coloring(nodes: NodeSet, d: float,
                    rng: np.random.Generator) -> TransmitterSet:
    """One slot of the distance-coloring model.

    Nodes are visited in a uniform random order; each admitted node
    deletes every remaining node strictly closer than d.  The result is
    maximal: every rejected node is within d of an admitted one.
    """
    if d <= 0:
        raise ValueError("d must be positive")
    n = len(nodes)
    if n == 0:
        return TransmitterSet(np.empty((0, 2)), nodes.extent)
    order = rng.permutation(n).astype(np.intp)
    xs = np.ascontiguousarray(nodes.points[:, 0])
    ys = np.ascontiguousarray(nodes.points[:, 1])
    admitted = impl.select_exclusion(xs, ys, order, float(d))
    return TransmitterSet(nodes.points[admitted], nodes.extent)


def csma_truncation_radius(theta: float, alpha: float) -> float:
    """Radius beyond which one transmitter contributes < theta/1000."""
    return (1e-3 * theta) ** (-1.0 / alpha)


def sample_csma(nodes: NodeSet, theta: float, alpha: float,
                rng: np.random.Generator,
                r_int: float | None = None) -> TransmitterSet:
    """One slot of the carrier-sense model.

    Nodes are visited in a uniform random order; a node transmits iff
    the summed power it senses from the already-admitted transmitters is
    below theta.  Already-admitted transmitters never back off.  The
    interference sum is truncated at r_int (default: the radius where a
    single transmitter contributes theta/1000); pass ``math.inf`` for
    exact sums.
    """
    if theta <= 0:
        raise ValueError("theta must be positive")
    if alpha <= 2:
        raise ValueError("alpha must exceed 2")
    n = len(nodes)
    if n == 0:
        return TransmitterSet(np.empty((0, 2)), nodes.extent)
    if r_int is None:
        r_int = csma_truncation_radius(theta, alpha)
        density = n / nodes.extent.area
        tail = 2 * math.pi * density * r_int ** (2 - alpha) / (alpha - 2)
        logger.debug("csma truncation radius %.3g m, interference tail "
                     "bound %.3g (theta=%.3g)", r_int, tail, theta)
    order = rng.permutation(n).astype(np.intp)
    xs = np.ascontiguousarray(nodes.points[:, 0])
    ys = np.ascontiguousarray(nodes.points[:, 1])
    admitted = impl.select_csma(xs, ys, order, float(theta), float(alpha),
                                float(r_int))
    return TransmitterSet(nodes.points[admitted], nodes.extent)


def density(s: TransmitterSet) -> float:
    """Spatial density: transmitter count over map area.

    The window is half-open (points on the max-x or max-y edge are not
    counted), so lattices whose pitch divides the side are counted one
    unit cell per point.
    """
    half = s.extent.side / 2.0
    inside = np.count_nonzero((s.xs < half) & (s.ys < half))
    return inside / s.extent.area


def save_points_csv(obj: TransmitterSet | NodeSet, path) -> None:
    """Write positions as `x,y` CSV with 9 significant digits."""
    with open(path, "w") as fh:
        fh.write("x,y\n")
        for x, y in obj.points:
            fh.write(f"{x:.9g},{y:.9g}\n")


def load_points_csv(path, extent: MapExtent) -> TransmitterSet:
    pts = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if pts.size == 0:
        pts = np.empty((0, 2))
    return TransmitterSet(pts, extent)
