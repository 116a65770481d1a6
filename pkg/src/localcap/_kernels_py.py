"""NumPy implementations of the hot numerical kernels.

This module mirrors the interface of the compiled extension
``localcap._core`` and is selected by ``localcap.kernels`` when the
extension is unavailable (or forced off via ``LOCALCAP_PURE_PYTHON``).

All kernels work on flat float64 coordinate arrays.  Power-law terms
|z - z_j|^(-alpha) are evaluated directly for moderate alpha and through
a log-domain normalization for large alpha, where the raw powers would
leave the double range.
"""

from __future__ import annotations

import math

import numpy as np

BACKEND_NAME = "python"

# above this exponent r^(-alpha) under/overflows for realistic distances
ALPHA_DIRECT_MAX = 32.0

EVAL_OK = 0
EVAL_AT_TRANSMITTER = 1
EVAL_ON_INTERFERER = 2

TRACE_CLOSED = 0
TRACE_MAX_STEPS = 1
TRACE_DEGENERATE = 2
TRACE_SINGULAR = 3

_TINY_GRAD = 1e-300


def _powers(r2, alpha, lmin=None):
    """|z|^(-alpha) from squared distances, scaled by exp(alpha*lmin)."""
    if alpha <= ALPHA_DIRECT_MAX:
        return r2 ** (-0.5 * alpha)
    lr = 0.5 * np.log(r2)
    if lmin is None:
        lmin = lr.min()
    return np.exp(-alpha * (lr - lmin))


def sir_eval(xs, ys, i, zx, zy, alpha, cutoff2, need_grad):
    """SIR of transmitter i at (zx, zy), optionally with its gradient.

    Returns (status, s, gx, gy).  Interferers beyond sqrt(cutoff2) from
    the evaluation point are ignored.
    """
    dx = zx - xs
    dy = zy - ys
    r2 = dx * dx + dy * dy
    ri2 = r2[i]
    if ri2 == 0.0:
        return EVAL_AT_TRANSMITTER, math.inf, 0.0, 0.0
    mask = r2 <= cutoff2
    mask[i] = False
    if not mask.any():
        return EVAL_OK, math.inf, 0.0, 0.0
    r2j = r2[mask]
    if np.any(r2j == 0.0):
        return EVAL_ON_INTERFERER, 0.0, 0.0, 0.0
    if alpha <= ALPHA_DIRECT_MAX:
        ui = ri2 ** (-0.5 * alpha)
        uj = r2j ** (-0.5 * alpha)
    else:
        lri = 0.5 * math.log(ri2)
        lmin = min(0.5 * float(np.log(r2j.min())), lri)
        ui = math.exp(-alpha * (lri - lmin))
        uj = np.exp(-alpha * (0.5 * np.log(r2j) - lmin))
    den = float(uj.sum())
    s = ui / den
    if not need_grad:
        return EVAL_OK, s, 0.0, 0.0
    p = uj / den
    pvx = float((p * (dx[mask] / r2j)).sum())
    pvy = float((p * (dy[mask] / r2j)).sum())
    gx = -alpha * s * (dx[i] / ri2 - pvx)
    gy = -alpha * s * (dy[i] / ri2 - pvy)
    return EVAL_OK, s, gx, gy


def g_eval(xs, ys, i, zx, zy, alpha, cutoff2):
    """Bounded signal share u_i / sum_j u_j in [0, 1]."""
    dx = zx - xs
    dy = zy - ys
    r2 = dx * dx + dy * dy
    ri2 = r2[i]
    if ri2 == 0.0:
        return 1.0
    mask = r2 <= cutoff2
    mask[i] = False
    if not mask.any():
        return 1.0
    r2j = r2[mask]
    if np.any(r2j == 0.0):
        return 0.0
    if alpha <= ALPHA_DIRECT_MAX:
        ui = ri2 ** (-0.5 * alpha)
        uj = r2j ** (-0.5 * alpha)
    else:
        lri = 0.5 * math.log(ri2)
        lmin = min(0.5 * float(np.log(r2j.min())), lri)
        ui = math.exp(-alpha * (lri - lmin))
        uj = np.exp(-alpha * (0.5 * np.log(r2j) - lmin))
    return float(ui / (ui + uj.sum()))


def count_at_least(xs, ys, zx, zy, K, alpha, cutoff2):
    """Number of transmitters whose SIR at (zx, zy) is >= K."""
    dx = zx - xs
    dy = zy - ys
    r2 = dx * dx + dy * dy
    if np.any(r2 == 0.0):
        # sitting on a transmitter: it succeeds, everyone else drowns
        return 1
    mask = r2 <= cutoff2
    if alpha <= ALPHA_DIRECT_MAX:
        u = r2 ** (-0.5 * alpha)
    else:
        lr = 0.5 * np.log(r2)
        u = np.exp(-alpha * (lr - lr.min()))
    total = float(u[mask].sum())
    denom = total - np.where(mask, u, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        sir = np.where(denom > 0.0, u / denom, math.inf)
    return int(np.count_nonzero(sir >= K))


def trace_levelset(xs, ys, i, K, alpha, cutoff2, x0, y0, dt, max_steps,
                   min_steps, closure_tol, newton_tol, newton_max_iters,
                   corrector):
    """Walk the SIR level set S_i = K from (x0, y0).

    Predictor: unit tangent step of length dt (clockwise pi/2 rotation of
    the unit gradient).  Corrector: 1-D Newton along the gradient pulling
    the point back onto the level set.  Returns (vertices, status,
    area_dot) where area_dot accumulates the dot-product quadrature
    -(1/2) * sum (z_k - z_i) . (grad/|grad|) * dt.
    """
    zix = xs[i]
    ziy = ys[i]
    verts = [(x0, y0)]
    zx, zy = x0, y0
    area_dot = 0.0
    for k in range(max_steps):
        st, s, gx, gy = sir_eval(xs, ys, i, zx, zy, alpha, cutoff2, True)
        if st != EVAL_OK or not math.isfinite(s):
            return np.array(verts), TRACE_SINGULAR, area_dot
        gn = math.hypot(gx, gy)
        if gn < _TINY_GRAD:
            return np.array(verts), TRACE_DEGENERATE, area_dot
        area_dot += -0.5 * ((zx - zix) * gx + (zy - ziy) * gy) / gn * dt
        zx += dt * gy / gn
        zy -= dt * gx / gn
        if corrector:
            for _ in range(newton_max_iters):
                st, s, gx, gy = sir_eval(xs, ys, i, zx, zy, alpha, cutoff2,
                                         True)
                if st != EVAL_OK or not math.isfinite(s):
                    return np.array(verts), TRACE_SINGULAR, area_dot
                if abs(s - K) <= newton_tol * K:
                    break
                g2 = gx * gx + gy * gy
                if g2 < _TINY_GRAD:
                    return np.array(verts), TRACE_DEGENERATE, area_dot
                step = (s - K) / g2
                zx -= step * gx
                zy -= step * gy
        verts.append((zx, zy))
        if k + 1 >= min_steps and math.hypot(zx - x0, zy - y0) <= closure_tol:
            return np.array(verts), TRACE_CLOSED, area_dot
    return np.array(verts), TRACE_MAX_STEPS, area_dot


def raster_count(xs, ys, i, K, alpha, cutoff2, cx, cy, cell, n):
    """Count cells of an n x n grid (pitch `cell`, centered on (cx, cy))
    whose centers satisfy S_i >= K.  Returns (count, edge_hit)."""
    offs = (np.arange(n) - (n - 1) / 2.0) * cell
    xc = cx + offs
    count = 0
    edge_hit = False
    for iy in range(n):
        yv = cy + offs[iy]
        dx = xc[:, None] - xs[None, :]
        dy = yv - ys[None, :]
        r2 = dx * dx + dy * dy
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if alpha <= ALPHA_DIRECT_MAX:
                u = r2 ** (-0.5 * alpha)
            else:
                lr = 0.5 * np.log(r2)
                u = np.exp(-alpha * (lr - lr.min(axis=1, keepdims=True)))
            mask = r2 <= cutoff2
            mask[:, i] = False
            den = np.where(mask, u, 0.0).sum(axis=1)
            sir = np.where(den > 0.0, u[:, i] / den, math.inf)
        inside = sir >= K
        row = int(np.count_nonzero(inside))
        count += row
        if row and (iy == 0 or iy == n - 1 or inside[0] or inside[-1]):
            edge_hit = True
    return count, edge_hit


def select_exclusion(xs, ys, order, d):
    """Random sequential admission with a hard exclusion distance.

    Visits nodes in `order`; an admitted node deletes every remaining
    node strictly closer than d.  Returns admitted indices in admission
    order.
    """
    n = len(xs)
    if n == 0:
        return np.empty(0, dtype=np.intp)
    from scipy.spatial import cKDTree

    tree = cKDTree(np.column_stack((xs, ys)))
    alive = np.ones(n, dtype=bool)
    d2 = d * d
    admitted = []
    for idx in order:
        if not alive[idx]:
            continue
        admitted.append(idx)
        alive[idx] = False
        px, py = xs[idx], ys[idx]
        for j in tree.query_ball_point((px, py), d):
            ddx = xs[j] - px
            ddy = ys[j] - py
            if ddx * ddx + ddy * ddy < d2:
                alive[j] = False
    return np.asarray(admitted, dtype=np.intp)


def select_csma(xs, ys, order, theta, alpha, r_int):
    """Random sequential admission under a carrier-sense threshold.

    A node visited in `order` is admitted iff the summed power from the
    already-admitted set (truncated at radius r_int) is below theta.
    Equivalent to the eager-deletion formulation: interference only grows.
    """
    n = len(xs)
    if n == 0:
        return np.empty(0, dtype=np.intp)
    finite_r = math.isfinite(r_int)
    if finite_r:
        from scipy.spatial import cKDTree

        tree = cKDTree(np.column_stack((xs, ys)))
    accum = np.zeros(n)
    admitted = []
    idx_all = np.arange(n)
    for idx in order:
        if accum[idx] >= theta:
            continue
        admitted.append(idx)
        px, py = xs[idx], ys[idx]
        if finite_r:
            js = np.asarray(tree.query_ball_point((px, py), r_int),
                            dtype=np.intp)
        else:
            js = idx_all
        js = js[js != idx]
        if len(js) == 0:
            continue
        dx = xs[js] - px
        dy = ys[js] - py
        r2 = dx * dx + dy * dy
        with np.errstate(divide="ignore", over="ignore"):
            if alpha <= ALPHA_DIRECT_MAX:
                contrib = r2 ** (-0.5 * alpha)
            else:
                contrib = np.exp(-0.5 * alpha * np.log(r2))
        accum[js] += contrib
        accum[idx] = math.inf
    return np.asarray(admitted, dtype=np.intp)
